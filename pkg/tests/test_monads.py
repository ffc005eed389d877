"""The four monads, their orders, and the magic-method run registry."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from mfj import faults
from mfj.monads import (
    EXC_BOTTOM, ID_BOTTOM, MONADS, TRUE, FALSE,
    Dist, ExcValue, IdValue, LazyList, NotAChain, Pure, Raised, RunRegistry,
    default_registry, exc_name_of, get_monad,
)
from mfj.parser import numeral
from mfj.prelude import prelude_program
from mfj.signatures import Sigs
from mfj.syntax import NominalType, Obj, nominal


def observe(monad_name, m):
    """A comparable view of a monadic value."""
    if isinstance(m, LazyList):
        return m.to_list()
    if isinstance(m, Dist):
        return m.as_dict()
    return m


MONAD_NAMES = sorted(MONADS)

fs = st.sampled_from([
    lambda x: x + 1,
    lambda x: x % 3,
    lambda x: 0,
])


def lifted(monad, f):
    # a Kleisli arrow that exercises multi-branch structure where possible
    if monad.name == "list":
        return lambda x: LazyList.of(f(x), f(x) + 10)
    if monad.name == "dist":
        return lambda x: Dist({f(x): Fraction(1, 2),
                               f(x) + 10: Fraction(1, 2)})
    return lambda x: monad.unit(f(x))


@pytest.mark.parametrize("name", MONAD_NAMES)
@given(x=st.integers(0, 5), f=fs)
def test_left_identity(name, x, f):
    monad = get_monad(name)
    k = lifted(monad, f)
    assert observe(name, monad.bind(monad.unit(x), k)) == observe(name, k(x))


@pytest.mark.parametrize("name", MONAD_NAMES)
@given(x=st.integers(0, 5), f=fs)
def test_right_identity(name, x, f):
    monad = get_monad(name)
    m = lifted(monad, f)(x)
    assert observe(name, monad.bind(m, monad.unit)) == observe(name, m)


@pytest.mark.parametrize("name", MONAD_NAMES)
@given(x=st.integers(0, 5), f=fs, g=fs)
def test_associativity(name, x, f, g):
    monad = get_monad(name)
    m = monad.unit(x)
    kf, kg = lifted(monad, f), lifted(monad, g)
    lhs = monad.bind(monad.bind(m, kf), kg)
    rhs = monad.bind(m, lambda y: monad.bind(kf(y), kg))
    assert observe(name, lhs) == observe(name, rhs)


def test_map_is_bind_with_unit():
    monad = get_monad("list")
    m = LazyList.of(1, 2, 3)
    assert monad.map_m(lambda x: x * 2, m).to_list() == [2, 4, 6]


# -- exceptions ---------------------------------------------------------------

def test_exc_raised_short_circuits():
    monad = get_monad("exc")
    assert monad.bind(Raised("E"), lambda x: Pure(x + 1)) == Raised("E")
    assert monad.bind(EXC_BOTTOM, lambda x: Pure(x)) == EXC_BOTTOM


def test_exc_order():
    monad = get_monad("exc")
    assert monad.leq(EXC_BOTTOM, Pure(1))
    assert monad.leq(Raised("E"), Raised("E"))
    assert not monad.leq(Pure(1), Pure(2))
    assert monad.sup_chain([EXC_BOTTOM, EXC_BOTTOM, Pure(3)]) == Pure(3)
    with pytest.raises(NotAChain):
        monad.sup_chain([Pure(1), Pure(2)])


# -- lazy lists ---------------------------------------------------------------

def test_lazylist_is_lazy_and_memoized():
    pulls = []

    def gen():
        for i in range(5):
            pulls.append(i)
            yield i

    ll = LazyList(gen())
    assert ll.take(2) == [0, 1]
    assert pulls == [0, 1]
    assert ll.take(2) == [0, 1]
    assert pulls == [0, 1]  # no recomputation
    assert ll.to_list() == [0, 1, 2, 3, 4]


def test_lazylist_survives_unbounded_sources():
    def naturals():
        i = 0
        while True:
            yield i
            i += 1

    ll = LazyList(naturals())
    assert ll.take(4) == [0, 1, 2, 3]
    assert not ll.exhausted_within(1000)


def test_lazylist_prefix_order():
    monad = get_monad("list")
    assert monad.leq(LazyList.of(), LazyList.of(1, 2))
    assert monad.leq(LazyList.of(1), LazyList.of(1, 2))
    assert not monad.leq(LazyList.of(2), LazyList.of(1, 2))
    sup = monad.sup_chain([LazyList.of(1), LazyList.of(1, 2)])
    assert sup.to_list() == [1, 2]


def test_list_bind_preserves_order():
    monad = get_monad("list")
    m = monad.bind(LazyList.of(0, 10), lambda x: LazyList.of(x, x + 1))
    assert m.to_list() == [0, 1, 10, 11]


def test_list_bind_fault_reverses_order():
    monad = get_monad("list")
    with faults.inject("swap_list_bind"):
        m = monad.bind(LazyList.of(0, 10), lambda x: LazyList.of(x, x + 1))
        out = m.to_list()
    assert out == [10, 11, 0, 1]


def test_list_map_is_unaffected_by_the_bind_fault():
    monad = get_monad("list")
    with faults.inject("swap_list_bind"):
        out = monad.map_m(lambda x: x + 1, LazyList.of(1, 2)).to_list()
    assert out == [2, 3]


# -- distributions ------------------------------------------------------------

def test_dist_rejects_bad_weights():
    with pytest.raises(ValueError):
        Dist({1: Fraction(-1, 2)})
    with pytest.raises(ValueError):
        Dist({1: Fraction(2, 3), 2: Fraction(2, 3)})


def test_dist_drops_zero_weights():
    d = Dist({1: Fraction(1, 2), 2: Fraction(0)})
    assert d.support() == [1]
    assert d.total() == Fraction(1, 2)


def test_dist_bind_merges_outcomes():
    monad = get_monad("dist")
    coin = Dist({0: Fraction(1, 2), 1: Fraction(1, 2)})
    d = monad.bind(coin, lambda x: monad.unit(x % 1))
    assert d.as_dict() == {0: Fraction(1)}


def test_dist_pointwise_order():
    monad = get_monad("dist")
    lo = Dist({1: Fraction(1, 2)})
    hi = Dist({1: Fraction(1, 2), 2: Fraction(1, 2)})
    assert monad.leq(lo, hi)
    assert not monad.leq(hi, lo)
    assert monad.leq(monad.bottom(), lo)


# -- identity -----------------------------------------------------------------

def test_id_monad():
    monad = get_monad("id")
    assert monad.bind(monad.unit(1), lambda x: monad.unit(x + 1)) == \
        IdValue("val", 2)
    assert monad.bind(ID_BOTTOM, lambda x: monad.unit(x)) == ID_BOTTOM
    assert monad.elements(monad.unit(1), 10) == [1]
    assert monad.elements(ID_BOTTOM, 10) == []


def test_get_monad_unknown():
    with pytest.raises(KeyError):
        get_monad("state")


# -- the run registry ---------------------------------------------------------

@pytest.fixture(scope="module")
def sigs():
    return Sigs(prelude_program())


def test_exc_names():
    assert exc_name_of(Obj((NominalType("MyException"),))) == "MyE"
    assert exc_name_of(Obj((NominalType("Exception"),))) == "E"
    assert exc_name_of(Obj((NominalType("Weird"),))) == "Weird"


def test_registry_throw(sigs):
    reg = default_registry(get_monad("exc"), sigs)
    exc = Obj((NominalType("MyException"),))
    assert reg.run("Exception", "throw", exc, ()) == Raised("MyE")


def test_registry_fail(sigs):
    reg = default_registry(get_monad("exc"), sigs)
    failure = Obj((NominalType("Failure", (nominal("Nat"),)),))
    assert reg.run("Failure", "fail", failure, ()) == Raised("Fail")


def test_registry_partiality(sigs):
    reg = default_registry(get_monad("exc"), sigs)
    exc = Obj((NominalType("MyException"),))
    # wrong receiver shape, extra arguments, or unknown key: undefined
    assert reg.run("Exception", "throw", numeral(0), ()) is None
    assert reg.run("Exception", "throw", exc, (numeral(0),)) is None
    assert reg.run("Exception", "nope", exc, ()) is None


def test_registry_choose_per_monad(sigs):
    reg = default_registry(get_monad("list"), sigs)
    chooser = Obj((NominalType("Chooser"),))
    assert reg.run("Chooser", "choose", chooser, ()).to_list() == [TRUE, FALSE]
    # the exception registry has no entry for choose
    reg_exc = default_registry(get_monad("exc"), sigs)
    assert reg_exc.run("Chooser", "choose", chooser, ()) is None

    reg_d = default_registry(get_monad("dist"), sigs)
    d = reg_d.run("Chooser", "choose", chooser, ())
    assert d.as_dict() == {TRUE: Fraction(1, 2), FALSE: Fraction(1, 2)}


def test_registry_register_overrides():
    reg = RunRegistry()
    reg.register("A", "m", lambda recv, args: Pure(42))
    assert reg.run("A", "m", None, ()) == Pure(42)
    assert reg.lookup("A", "m") is not None
    assert reg.lookup("A", "n") is None
