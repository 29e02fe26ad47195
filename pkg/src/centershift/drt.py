"""Linearized DRT boxes: merging, sequencing, unabbreviation, canonical form.

A box ``[u_1 | farmer(u_1), walk(u_1)]`` pairs a universe of registers with a
condition list and abbreviates the state-transition term produced by
``unabbreviate``.  Sequencing composes boxes as relations; the merging rule
collapses two sequenced boxes into one provided the second box reassigns no
register already in play in the first (checked over the first box's universe
and everything occurring in its conditions, including equation right-hand
sides and embedded boxes).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    App,
    Arrow,
    Atom,
    BOX,
    Box,
    BoxLit,
    Condition,
    Const,
    Eq,
    Imp,
    Lam,
    Not,
    PRED_SIGNATURES,
    RegRef,
    Register,
    STATE,
    TRUTH,
    Term,
    UNDERLYING_TYPE,
    Var,
    arg_sort_type,
)
from .render import render_box, render_condition, render_program, render_term
from .boxparse import parse_box, parse_program, parse_term


# ---------------------------------------------------------------------------
# Register occurrence


def registers_in_term(t: Term) -> set:
    if isinstance(t, RegRef):
        return {t.reg}
    if isinstance(t, (Var, Const)):
        return set()
    if isinstance(t, Lam):
        return registers_in_term(t.body)
    if isinstance(t, App):
        return registers_in_term(t.fn) | registers_in_term(t.arg)
    if isinstance(t, BoxLit):
        return registers_in_box(t.box)
    raise TypeError(t)


def registers_in_condition(c: Condition) -> set:
    from .typelogic import condition_terms

    out = {c.lhs} if isinstance(c, Eq) else set()
    for sub in condition_terms(c):
        out |= registers_in_term(sub)
    return out


def registers_in_conditions(box: Box) -> set:
    out = set()
    for c in box.conditions:
        out |= registers_in_condition(c)
    return out


def registers_in_box(box: Box) -> set:
    return set(box.universe) | registers_in_conditions(box)


# ---------------------------------------------------------------------------
# Merge and sequencing


def merge(k1: Box, k2: Box):
    """Merging rule: union of universes and conditions, or None.

    Undefined (None) exactly when some register in k2's universe already
    occurs in k1, i.e. the sequencing reassigns an index.
    """
    reassigned = set(k2.universe)
    if reassigned & set(k1.universe):
        return None
    if reassigned & registers_in_conditions(k1):
        return None
    return Box(k1.universe + k2.universe, k1.conditions + k2.conditions)


@dataclass(frozen=True)
class BoxProgram:
    """A sequence of boxes composed left to right by the sequencing operator."""

    leaves: tuple

    def __init__(self, leaves):
        leaves = tuple(leaves)
        for leaf in leaves:
            if not isinstance(leaf, Box):
                raise TypeError(f"program leaf is not a box: {leaf!r}")
        object.__setattr__(self, "leaves", leaves)

    def render(self, starred=frozenset()) -> str:
        return render_program(self.leaves, starred)


def single(box: Box) -> BoxProgram:
    return BoxProgram((box,))


def sequence(k1, k2) -> BoxProgram:
    """Sequencing; keeps both components (merging is a separate, optional step)."""
    return BoxProgram(_leaves(k1) + _leaves(k2))


def _leaves(p) -> tuple:
    if isinstance(p, BoxProgram):
        return p.leaves
    if isinstance(p, Box):
        return (p,)
    raise TypeError(p)


def merge_fold(leaves) -> tuple:
    """Greedily merge adjacent leaves wherever the merge is defined."""
    out = []
    for leaf in leaves:
        if out:
            merged = merge(out[-1], leaf)
            if merged is not None:
                out[-1] = merged
                continue
        out.append(leaf)
    return tuple(out)


# ---------------------------------------------------------------------------
# Unabbreviation into plain type logic


_AND = Const("and", Arrow(TRUTH, Arrow(TRUTH, TRUTH)))
_NOT_TEST = Const("NOT", Arrow(BOX, Arrow(STATE, TRUTH)))
_IMP_TEST = Const("IMP", Arrow(BOX, Arrow(BOX, Arrow(STATE, TRUTH))))


def _update_const(universe) -> Const:
    names = ",".join(r.name for r in universe)
    return Const(f"upd[{names}]", Arrow(STATE, Arrow(STATE, TRUTH)))


def _eq_const(ty) -> Const:
    return Const("=", Arrow(ty, Arrow(ty, TRUTH)))


def _atom_const(pred: str) -> Const:
    sig = PRED_SIGNATURES.get(pred, ("e",))
    ty = TRUTH
    for sort in reversed(sig):
        ty = Arrow(arg_sort_type(sort), ty)
    return Const(pred, ty)


def _reg_at(reg: Register, state: Term) -> Term:
    return App(Const(reg.name, UNDERLYING_TYPE[reg.kind]), state)


def unabbreviate(box: Box, _depth: int = 0) -> Term:
    """The type-logic term a box abbreviates.

    ``[u_1 | farmer(u_1)]`` becomes ``λi.λj.(upd[u_1](i,j) and farmer(u_1(j)))``
    where ``upd[...]`` is the primitive relation holding of <i,j> when j
    differs from i at most on the listed registers.
    """
    i = Var(f"i{_depth}" if _depth else "i", STATE)
    j = Var(f"j{_depth}" if _depth else "j", STATE)
    body = App(App(_update_const(box.universe), i), j)
    for c in box.conditions:
        body = App(App(_AND, body), _condition_at(c, j, _depth))
    return Lam(i, Lam(j, body))


def _condition_at(c: Condition, state: Term, depth: int) -> Term:
    if isinstance(c, Atom):
        out: Term = _atom_const(c.pred)
        for arg in c.args:
            out = App(out, _term_at(arg, state, depth))
        return out
    if isinstance(c, Eq):
        lhs = _reg_at(c.lhs, state)
        rhs = _term_at(c.rhs, state, depth)
        return App(App(_eq_const(c.lhs.surface_type()), lhs), rhs)
    if isinstance(c, Not):
        return App(App(_NOT_TEST, _term_at(c.inner, state, depth)), state)
    if isinstance(c, Imp):
        ant = _term_at(c.antecedent, state, depth)
        cons = _term_at(c.consequent, state, depth)
        return App(App(App(_IMP_TEST, ant), cons), state)
    raise TypeError(c)


def _term_at(t: Term, state: Term, depth: int) -> Term:
    if isinstance(t, RegRef):
        return _reg_at(t.reg, state)
    if isinstance(t, (Var, Const)):
        return t
    if isinstance(t, Lam):
        return Lam(t.var, _term_at(t.body, state, depth))
    if isinstance(t, App):
        return App(_term_at(t.fn, state, depth), _term_at(t.arg, state, depth))
    if isinstance(t, BoxLit):
        return unabbreviate(t.box, depth + 1)
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Canonical form


def _orient(c: Condition) -> Condition:
    if isinstance(c, Eq) and isinstance(c.rhs, RegRef):
        other = c.rhs.reg
        if other.kind == c.lhs.kind and other < c.lhs:
            return Eq(other, RegRef(c.lhs))
    return c


def _center_links(box: Box) -> dict:
    links = {}
    for c in box.conditions:
        if (
            isinstance(c, Eq)
            and c.lhs.is_center
            and isinstance(c.rhs, RegRef)
            and c.rhs.reg.kind == c.lhs.kind
        ):
            links[c.lhs] = c.rhs.reg
    return links


def _rewrite_centers(t: Term, links: dict) -> Term:
    if not links:
        return t
    if isinstance(t, RegRef):
        return RegRef(links.get(t.reg, t.reg))
    if isinstance(t, (Var, Const)):
        return t
    if isinstance(t, Lam):
        return Lam(t.var, _rewrite_centers(t.body, links))
    if isinstance(t, App):
        return App(_rewrite_centers(t.fn, links), _rewrite_centers(t.arg, links))
    if isinstance(t, BoxLit):
        inner = {k: v for k, v in links.items() if k not in t.box.universe}
        conds = []
        for c in t.box.conditions:
            if isinstance(c, Eq):
                conds.append(c)
            else:
                from .typelogic import map_condition

                conds.append(map_condition(c, lambda sub: _rewrite_centers(sub, inner)))
        return BoxLit(Box(t.box.universe, conds))
    raise TypeError(t)


def canonicalize_box(box: Box) -> Box:
    from .typelogic import alpha_normalize, beta_reduce, map_condition

    conditions = [_orient(c) for c in box.conditions]
    links = _center_links(Box(box.universe, conditions))

    def clean(term: Term) -> Term:
        return alpha_normalize(beta_reduce(term))

    out = []
    for c in conditions:
        if not isinstance(c, Eq):
            c = map_condition(c, lambda sub: _rewrite_centers(sub, links))
        out.append(map_condition(c, clean))
    universe = tuple(sorted(box.universe))
    unique = sorted(set(out), key=render_condition)
    return Box(universe, unique)


def canonicalize(program) -> BoxProgram:
    """Canonical form: greedy merge, center links substituted in plain
    conditions, equations oriented, universes sorted, conditions sorted and
    deduplicated, bound variables alpha-normalized."""
    leaves = merge_fold(_leaves(program) if isinstance(program, (BoxProgram, Box)) else tuple(program))
    return BoxProgram(tuple(canonicalize_box(b) for b in leaves))


def canonical_text(program) -> str:
    return canonicalize(program).render()


__all__ = [
    "Box",
    "BoxProgram",
    "merge",
    "merge_fold",
    "sequence",
    "single",
    "unabbreviate",
    "registers_in_box",
    "registers_in_term",
    "registers_in_conditions",
    "canonicalize",
    "canonicalize_box",
    "canonical_text",
    "render_box",
    "render_program",
    "render_term",
    "parse_box",
    "parse_program",
    "parse_term",
]
