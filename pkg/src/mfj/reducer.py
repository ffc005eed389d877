"""Pure reduction: method lookup, clause matching, and the seven-rule stepper.

Magic calls and do-expressions not under a try are normal forms here; the
monadic layer (mfj.evaluator) handles them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from . import faults
from .signatures import SigError, Sigs
from .syntax import (
    CONTINUE, DEF, MGC, STOP,
    Call, Clause, Do, Handler, NominalType, Obj, ObjType, Return, Sig, Try,
    Value, Var, erase_type, fresh_name, fv_expr, subst_expr, subst_type,
)


@dataclass(frozen=True)
class DefBody:
    """A found method body: ``<X..., self, params..., e>``."""

    typeParams: tuple  # tuple[str, ...]
    selfVar: str
    params: tuple
    body: object


@dataclass(frozen=True)
class Magic:
    """The method resolved to a magic declaration in type ``typeName``."""

    typeName: str


class AmbiguousLookup(Exception):
    """More than one parent supplies the method; semantically 'undefined'."""


def mbody(sigs: Sigs, v: Value, m: str) -> Optional[Union[DefBody, Magic]]:
    """Method look-up on a value; None encodes 'undefined' (a stuck state)."""
    if not isinstance(v, Obj):
        return None
    md = v.method(m)
    if md is not None and md.kind == DEF:
        return DefBody(
            tuple(x for x, _ in md.mtype.typeParams), md.selfVar, md.params, md.body
        )
    try:
        return _parents_lookup(sigs, v.parents, m)
    except AmbiguousLookup:
        return None


def _parents_lookup(sigs, parents, m):
    found = []
    for p in parents:
        r = _nominal_lookup(sigs, p, m)
        if r is not None:
            found.append(r)
    if not found:
        return None
    if len(found) > 1:
        raise AmbiguousLookup(m)
    return found[0]


def _nominal_lookup(sigs, n: NominalType, m: str):
    decl = sigs.program.decl(n.name)
    if decl is None:
        return None
    sub = {x: t for (x, _), t in zip(decl.typeParams, n.args)}
    for md in decl.methods:
        if md.name != m:
            continue
        if md.kind == DEF:
            return DefBody(
                tuple(x for x, _ in md.mtype.typeParams),
                md.selfVar,
                md.params,
                subst_expr(md.body, sub, {}),
            )
        if md.kind == MGC:
            return Magic(n.name)
        break  # abs: fall through to the parents
    return _parents_lookup(
        sigs, tuple(subst_type(p, sub) for p in decl.parents), m
    )


def instance_of(sigs: Sigs, v: Value, n: NominalType) -> bool:
    """Purely syntactic runtime check: erase(v) <= N."""
    if not isinstance(v, Obj):
        return False
    try:
        return sigs.sub_type({}, erase_type(v), ObjType((n,), Sig(())))
    except SigError:
        return False


def has_nominal_super(sigs: Sigs, v: Value, name: str) -> bool:
    """Name-level instance check, insensitive to type arguments."""
    if not isinstance(v, Obj):
        return False
    seen: set = set()
    work = list(v.parents)
    while work:
        n = work.pop()
        if n.name == name:
            return True
        if n.name in seen:
            continue
        seen.add(n.name)
        decl = sigs.program.decl(n.name)
        if decl is not None:
            work.extend(decl.parents)
    return False


def cmatch(sigs: Sigs, recv: Value, m: str, clauses: tuple) -> Optional[Clause]:
    """First clause with the same method name matching the receiver's type."""
    order = reversed(clauses) if faults.ACTIVE.reverse_clause_match else clauses
    for c in order:
        if c.method == m and instance_of(sigs, recv, c.ntype):
            return c
    return None


def invk_subst(body, typeParams, targs, selfVar, recv, params, args):
    tsub = {} if faults.ACTIVE.skip_invk_type_subst else dict(zip(typeParams, targs))
    vsub = {selfVar: recv, **dict(zip(params, args))}
    return subst_expr(body, tsub, vsub)


def pure_step(sigs: Sigs, e) -> Optional[tuple]:
    """One pure-reduction step: (e', rule name), or None when stuck/terminal.

    Rules: invk, try-ret, try-do, catch-continue, catch-stop, fwd, try-ctx;
    the first six take priority over try-ctx.
    """
    if isinstance(e, Call):
        r = mbody(sigs, e.recv, e.method)
        if isinstance(r, DefBody):
            if len(r.params) != len(e.args):
                return None
            return (
                invk_subst(
                    r.body, r.typeParams, e.targs, r.selfVar, e.recv, r.params, e.args
                ),
                "invk",
            )
        return None  # magic or undefined: a normal form for pure reduction
    if isinstance(e, (Return, Do)):
        return None
    if isinstance(e, Try):
        body, h = e.body, e.handler
        if isinstance(body, Return):
            return Do(h.finalVar, body, h.finalExpr), "try-ret"
        if isinstance(body, Do):
            inner_handler = Handler(h.clauses, body.var, Try(body.rest, h))
            return Try(body.first, inner_handler), "try-do"
        if isinstance(body, Call):
            r = mbody(sigs, body.recv, body.method)
            if isinstance(r, Magic):
                c = cmatch(sigs, body.recv, body.method, h.clauses)
                if c is None:
                    return Do(h.finalVar, body, h.finalExpr), "fwd"
                tsub = (
                    dict(zip(c.typeParams, body.targs))
                    if c.typeParams is not None
                    else {}
                )
                vsub = {c.selfVar: body.recv, **dict(zip(c.params, body.args))}
                cbody = subst_expr(c.body, tsub, vsub)
                if c.mode == STOP:
                    return cbody, "catch-stop"
                x = h.finalVar
                final = h.finalExpr
                if x in fv_expr(cbody):
                    # hygiene: keep the clause body's free occurrences free
                    x2 = fresh_name(x)
                    final = subst_expr(final, {}, {x: Var(x2)})
                    x = x2
                return Do(x, cbody, final), "catch-continue"
        inner = pure_step(sigs, body)
        if inner is None:
            return None
        e2, rule = inner
        return Try(e2, h), rule
    raise TypeError(f"not an expression: {e!r}")
