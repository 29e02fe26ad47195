"""Canonical text rendering for terms, conditions, boxes and programs.

The grammar is bit-exact and parseable back (see ``boxparse``):

    Program   := Leaf (" ; " Leaf)*
    Box       := "[" Universe " | " CondList "]"
    Universe  := Register ("," Register)*            (may be empty)
    CondList  := Condition (", " Condition)*         (may be empty)
    Condition := pred "(" Args ")" | Register " = " Term
               | "NOT(" Term ")" | Term " => " Term

Registers print as ``u_n`` / ``P_n`` / ``x_n``; center-linked registers can
additionally be printed with a ``*`` when requested.  A box-valued atom
argument with an empty universe and a single condition prints bare, the way
``want(u_3,kiss(u_1,u_3))`` abbreviates ``want(u_3,[ | kiss(u_1,u_3)])``.
"""

from __future__ import annotations

from .core import (
    App,
    Atom,
    Box,
    BoxLit,
    B,
    Condition,
    Const,
    Eq,
    Imp,
    Lam,
    Not,
    PRED_SIGNATURES,
    Register,
    RegRef,
    SEQ,
    Term,
    Var,
    is_seq_app,
    seq_parts,
)


def render_register(reg: Register, starred=frozenset()) -> str:
    return reg.name + ("*" if reg in starred else "")


def render_term(t: Term, starred=frozenset()) -> str:
    if isinstance(t, (Var, Const)):
        return t.name
    if isinstance(t, RegRef):
        return render_register(t.reg, starred)
    if isinstance(t, Lam):
        body = t.body
        if isinstance(body, BoxLit):
            return f"λ{t.var.name}{render_box(body.box, starred)}"
        return f"λ{t.var.name}({render_term(body, starred)})"
    if isinstance(t, BoxLit):
        return render_box(t.box, starred)
    if isinstance(t, App):
        if is_seq_app(t):
            return " ; ".join(render_term(p, starred) for p in seq_parts(t))
        head, args = _spine(t)
        if isinstance(head, (Var, Const, RegRef)):
            head_text = render_term(head, starred)
        else:
            head_text = f"({render_term(head, starred)})"
        return head_text + "(" + ",".join(render_term(a, starred) for a in args) + ")"
    raise TypeError(t)


def _spine(t: Term):
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fn
    return t, list(reversed(args))


def _render_box_arg(t: Term, starred) -> str:
    # a simple test box in argument position prints without its brackets
    if isinstance(t, BoxLit) and not t.box.universe and len(t.box.conditions) == 1:
        cond = t.box.conditions[0]
        if isinstance(cond, (Atom, Not)):
            return render_condition(cond, starred)
    return render_term(t, starred)


def render_condition(c: Condition, starred=frozenset()) -> str:
    if isinstance(c, Atom):
        sig = PRED_SIGNATURES.get(c.pred, ("e",) * len(c.args))
        parts = []
        for sort, arg in zip(sig, c.args):
            parts.append(_render_box_arg(arg, starred) if sort == B else render_term(arg, starred))
        return c.pred + "(" + ",".join(parts) + ")"
    if isinstance(c, Eq):
        return f"{render_register(c.lhs, starred)} = {render_term(c.rhs, starred)}"
    if isinstance(c, Not):
        return f"NOT({render_term(c.inner, starred)})"
    if isinstance(c, Imp):
        return f"{render_term(c.antecedent, starred)} => {render_term(c.consequent, starred)}"
    raise TypeError(c)


def render_box(box: Box, starred=frozenset()) -> str:
    universe = ",".join(render_register(r, starred) for r in box.universe)
    conds = ", ".join(render_condition(c, starred) for c in box.conditions)
    return f"[{universe} | {conds}]"


def render_program(leaves, starred=frozenset()) -> str:
    parts = []
    for leaf in leaves:
        if isinstance(leaf, Box):
            parts.append(render_box(leaf, starred))
        else:
            parts.append(render_term(leaf, starred))
    return " ; ".join(parts)
