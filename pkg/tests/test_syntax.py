"""Core syntax: effect normal forms, substitution, erasure."""

import pytest
from hypothesis import given, strategies as st

from mfj.parser import numeral, parse_expr
from mfj.syntax import (
    DEF, OBJECT, PURE, TOP,
    Call, Do, EffCall, EffEmpty, EffTop, EffUnion, MethodDef, MethodType,
    NominalType, Obj, ObjType, Program, Return, Sig, TypeDecl, TypeVar, Var,
    alpha_eq_mtype, canon_mtype, eff_eq, eff_from_parts, eff_norm, eff_parts,
    eff_union, erase_type, fresh_name, fv_expr, fv_value, ftv_expr, ftv_type,
    nominal, subst_expr, subst_mtype, subst_type,
)

A = EffCall(nominal("A"), "m")
B = EffCall(nominal("B"), "n")


# -- effect normal form -------------------------------------------------------

effects = st.deferred(
    lambda: st.one_of(
        st.just(PURE),
        st.just(TOP),
        st.sampled_from([A, B, EffCall(nominal("C"), "k")]),
        st.builds(EffUnion, effects, effects),
    )
)


@given(effects)
def test_norm_is_idempotent(e):
    assert eff_norm(eff_norm(e)) == eff_norm(e)


@given(effects, effects)
def test_union_is_commutative(a, b):
    assert eff_eq(eff_union(a, b), eff_union(b, a))


@given(effects, effects, effects)
def test_union_is_associative(a, b, c):
    assert eff_eq(eff_union(eff_union(a, b), c), eff_union(a, eff_union(b, c)))


@given(effects)
def test_top_absorbs(e):
    assert eff_parts(eff_union(e, TOP)) == (frozenset(), True)


def test_eff_parts_flattens_unions():
    atoms, top = eff_parts(EffUnion(EffUnion(A, B), EffUnion(A, PURE)))
    assert atoms == {A, B} and not top


def test_from_parts_empty_is_pure():
    assert eff_from_parts((), False) == PURE


# -- free variables -----------------------------------------------------------

def test_fv_do_binds_its_variable():
    e = parse_expr("do y = x.m(); y.n(z)")
    assert fv_expr(e) == {"x", "z"}


def test_fv_try_binds_clause_and_final_vars():
    e = parse_expr(
        "try x.m() with Exception.throw : <s, return s> stop "
        "final <r, return r>")
    assert fv_expr(e) == {"x"}


def test_ftv_collects_type_arguments():
    e = parse_expr("x.m[Y](z)", tvars=("Y",))
    assert ftv_expr(e) == {"Y"}
    assert ftv_type(nominal("Failure", TypeVar("Y"))) == {"Y"}


def test_numerals_are_closed():
    assert fv_value(numeral(7)) == frozenset()
    assert ftv_expr(Return(numeral(7))) == frozenset()


# -- substitution -------------------------------------------------------------

def test_subst_replaces_free_variables():
    e = parse_expr("do y = x.m(); y.n(x)")
    out = subst_expr(e, {}, {"x": numeral(0)})
    assert fv_expr(out) == frozenset()
    assert out.first.recv == numeral(0)


def test_subst_skips_bound_occurrences():
    e = parse_expr("do x = return 0; return x")
    assert subst_expr(e, {}, {"x": numeral(9)}) == e


def test_subst_avoids_capture_in_do():
    # substituting x for y must not let the binder x capture it
    e = parse_expr("do x = return 0; y.m(x)")
    out = subst_expr(e, {}, {"y": Var("x")})
    assert out.var != "x"
    assert out.rest.recv == Var("x")
    assert out.rest.args == (Var(out.var),)


def test_subst_identity_is_the_same_object():
    e = parse_expr("do x = return 0; return x")
    assert subst_expr(e, {}, {}) is e
    assert subst_expr(e, {"Z": nominal("Nat")}, {"q": numeral(1)}) is e


def test_subst_type_in_effects():
    eff = EffCall(TypeVar("Y"), "then")
    out = subst_expr(
        Return(Obj((), (MethodDef("m", DEF,
                                  MethodType((), (), OBJECT, eff),
                                  "s", (), Return(Var("s"))),))),
        {"Y": nominal("True")}, {})
    assert out.value.methods[0].mtype.eff == EffCall(nominal("True"), "then")


def test_subst_mtype_renames_clashing_binders():
    mt = MethodType((("X", OBJECT),), (TypeVar("X"),), TypeVar("Y"), PURE)
    out = subst_mtype(mt, {"Y": TypeVar("X")})
    binder = out.typeParams[0][0]
    assert binder != "X"
    assert out.ret == TypeVar("X")
    assert out.paramTypes == (TypeVar(binder),)


# -- erasure and canonical forms ----------------------------------------------

def test_erase_drops_bodies():
    t = erase_type(numeral(0))
    assert t == ObjType((NominalType("Zero"),), Sig(()))


def test_erase_keeps_own_methods():
    v = parse_expr("return Object { m : def -> Object <s, return s> }").value
    t = erase_type(v)
    assert t.sig.names() == ["m"]


def test_canon_mtype_gives_alpha_equality():
    a = MethodType((("X", OBJECT),), (TypeVar("X"),), TypeVar("X"), PURE)
    b = MethodType((("W", OBJECT),), (TypeVar("W"),), TypeVar("W"), PURE)
    assert canon_mtype(a) == canon_mtype(b)
    assert alpha_eq_mtype(a, b)
    c = MethodType((("X", OBJECT),), (TypeVar("X"),), OBJECT, PURE)
    assert not alpha_eq_mtype(a, c)


def test_fresh_names_are_distinct():
    names = {fresh_name("x") for _ in range(50)}
    assert len(names) == 50
    assert fresh_name("x__3").startswith("x__")


# -- programs -----------------------------------------------------------------

def test_program_rejects_duplicate_decls():
    with pytest.raises(ValueError):
        Program((TypeDecl("A", (), (), ()), TypeDecl("A", (), (), ())))


def test_extend_prefers_the_second_main():
    p1 = Program((), Return(numeral(1)))
    p2 = Program((), Return(numeral(2)))
    assert p1.extend(p2).main == Return(numeral(2))
    assert p1.extend(Program(())).main == Return(numeral(1))
