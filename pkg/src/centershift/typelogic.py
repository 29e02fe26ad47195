"""Simply-typed lambda calculus over states, entities and truth values.

Terms may embed box literals, and box conditions embed terms back, so the
traversals here (free variables, substitution, normalization) all recurse
through both layers.  Registers are constant-like leaves, never bindable:
lambda abstraction binds ``Var`` occurrences only.

Normalization is leftmost-outermost and additionally collapses sequencing
applications of adjacent box literals through the merging rule whenever the
merge is defined, which is how multi-part meanings end up as single boxes.
An applicative-order normalizer is provided as an independent route for
confluence checking.
"""

from __future__ import annotations

import re

from .core import (
    App,
    Arrow,
    Atom,
    Box,
    BoxLit,
    BOX,
    Condition,
    Const,
    Eq,
    Imp,
    Lam,
    Not,
    PRED_SIGNATURES,
    RegRef,
    Term,
    TypeMismatch,
    UnknownSymbol,
    Var,
    arg_sort_type,
    is_seq_app,
    seq_parts,
    seq2,
)


# ---------------------------------------------------------------------------
# Traversal helpers


def condition_terms(c: Condition) -> tuple:
    if isinstance(c, Atom):
        return c.args
    if isinstance(c, Eq):
        return (c.rhs,)
    if isinstance(c, Not):
        return (c.inner,)
    if isinstance(c, Imp):
        return (c.antecedent, c.consequent)
    raise TypeError(c)


def map_condition(c: Condition, f) -> Condition:
    if isinstance(c, Atom):
        return Atom(c.pred, tuple(f(a) for a in c.args))
    if isinstance(c, Eq):
        return Eq(c.lhs, f(c.rhs))
    if isinstance(c, Not):
        return Not(f(c.inner))
    if isinstance(c, Imp):
        return Imp(f(c.antecedent), f(c.consequent))
    raise TypeError(c)


def map_box(box: Box, f) -> Box:
    return Box(box.universe, tuple(map_condition(c, f) for c in box.conditions))


def free_vars(t: Term) -> set:
    """Names of free lambda variables of ``t``."""
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, (Const, RegRef)):
        return set()
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.var.name}
    if isinstance(t, App):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, BoxLit):
        out = set()
        for c in t.box.conditions:
            for sub in condition_terms(c):
                out |= free_vars(sub)
        return out
    raise TypeError(t)


def all_var_names(t: Term) -> set:
    """Every variable name occurring in ``t``, bound or free."""
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, (Const, RegRef)):
        return set()
    if isinstance(t, Lam):
        return {t.var.name} | all_var_names(t.body)
    if isinstance(t, App):
        return all_var_names(t.fn) | all_var_names(t.arg)
    if isinstance(t, BoxLit):
        out = set()
        for c in t.box.conditions:
            for sub in condition_terms(c):
                out |= all_var_names(sub)
        return out
    raise TypeError(t)


_FRESH_RE = re.compile(r"^w(\d+)$")


def fresh_name(used: set) -> str:
    """Deterministic fresh name: smallest w<n> not in ``used``."""
    n = 1
    for name in used:
        m = _FRESH_RE.match(name)
        if m:
            n = max(n, int(m.group(1)) + 1)
    return f"w{n}"


# ---------------------------------------------------------------------------
# Substitution


def substitute(t: Term, v: Var, s: Term) -> Term:
    """Capture-avoiding substitution of ``s`` for free occurrences of ``v``."""
    if isinstance(t, Var):
        return s if t.name == v.name else t
    if isinstance(t, (Const, RegRef)):
        return t
    if isinstance(t, App):
        return App(substitute(t.fn, v, s), substitute(t.arg, v, s))
    if isinstance(t, BoxLit):
        return BoxLit(map_box(t.box, lambda sub: substitute(sub, v, s)))
    if isinstance(t, Lam):
        if t.var.name == v.name:
            return t
        if v.name not in free_vars(t.body):
            return t
        if t.var.name in free_vars(s):
            new_name = fresh_name(all_var_names(t.body) | all_var_names(s) | {v.name})
            new_var = Var(new_name, t.var.ty)
            renamed = substitute(t.body, t.var, new_var)
            return Lam(new_var, substitute(renamed, v, s))
        return Lam(t.var, substitute(t.body, v, s))
    raise TypeError(t)


def substitute_register(t: Term, reg, s: Term, *, inside_eq: bool = False) -> Term:
    """Replace register references by a term.

    Defining equations are left untouched unless ``inside_eq`` is set: the
    stored meaning of a register must keep its own internal references so a
    later re-evaluation can resolve them against a shifted context.
    """
    if isinstance(t, RegRef):
        return s if t.reg == reg else t
    if isinstance(t, (Var, Const)):
        return t
    if isinstance(t, App):
        return App(
            substitute_register(t.fn, reg, s, inside_eq=inside_eq),
            substitute_register(t.arg, reg, s, inside_eq=inside_eq),
        )
    if isinstance(t, Lam):
        return Lam(t.var, substitute_register(t.body, reg, s, inside_eq=inside_eq))
    if isinstance(t, BoxLit):
        conds = []
        for c in t.box.conditions:
            if isinstance(c, Eq) and not inside_eq:
                conds.append(c)
            else:
                conds.append(
                    map_condition(c, lambda sub: substitute_register(sub, reg, s, inside_eq=inside_eq))
                )
        return BoxLit(Box(t.box.universe, conds))
    raise TypeError(t)


# ---------------------------------------------------------------------------
# Normalization


def _merge_fold(parts: list) -> Term:
    from .drt import merge

    folded = [parts[0]]
    for part in parts[1:]:
        prev = folded[-1]
        if isinstance(prev, BoxLit) and isinstance(part, BoxLit):
            merged = merge(prev.box, part.box)
            if merged is not None:
                folded[-1] = BoxLit(merged)
                continue
        folded.append(part)
    out = folded[0]
    for part in folded[1:]:
        out = seq2(out, part)
    return out


def _simplify(t: Term) -> Term:
    if is_seq_app(t):
        return _merge_fold(seq_parts(t))
    return t


def _whnf(t: Term) -> Term:
    while isinstance(t, App):
        fn = _whnf(t.fn)
        if isinstance(fn, Lam):
            t = substitute(fn.body, fn.var, t.arg)
        elif fn is t.fn:
            return t
        else:
            return App(fn, t.arg)
    return t


def _normal_order(t: Term) -> Term:
    t = _whnf(t)
    if isinstance(t, (Var, Const, RegRef)):
        return t
    if isinstance(t, Lam):
        return Lam(t.var, _normal_order(t.body))
    if isinstance(t, BoxLit):
        return BoxLit(map_box(t.box, _normal_order))
    if isinstance(t, App):
        return _simplify(App(_normal_order(t.fn), _normal_order(t.arg)))
    raise TypeError(t)


def _applicative_order(t: Term) -> Term:
    if isinstance(t, (Var, Const, RegRef)):
        return t
    if isinstance(t, Lam):
        return Lam(t.var, _applicative_order(t.body))
    if isinstance(t, BoxLit):
        return BoxLit(map_box(t.box, _applicative_order))
    if isinstance(t, App):
        fn = _applicative_order(t.fn)
        arg = _applicative_order(t.arg)
        if isinstance(fn, Lam):
            return _applicative_order(substitute(fn.body, fn.var, arg))
        return _simplify(App(fn, arg))
    raise TypeError(t)


def beta_reduce(t: Term, strategy: str = "normal") -> Term:
    """Full beta-normal form; terminates on every well-typed term."""
    if strategy == "normal":
        return _normal_order(t)
    if strategy == "applicative":
        return _applicative_order(t)
    raise ValueError(f"unknown strategy {strategy!r}")


normalize = beta_reduce


# ---------------------------------------------------------------------------
# Alpha equivalence and alpha normalization


def alpha_eq(t1: Term, t2: Term) -> bool:
    return _aeq(t1, t2, {}, {}, [0])


def _aeq(a: Term, b: Term, env_a: dict, env_b: dict, counter: list) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Var):
        ia, ib = env_a.get(a.name), env_b.get(b.name)
        if ia is None and ib is None:
            return a.name == b.name and a.ty == b.ty
        return ia == ib
    if isinstance(a, (Const, RegRef)):
        return a == b
    if isinstance(a, App):
        return _aeq(a.fn, b.fn, env_a, env_b, counter) and _aeq(a.arg, b.arg, env_a, env_b, counter)
    if isinstance(a, Lam):
        if a.var.ty != b.var.ty:
            return False
        counter[0] += 1
        ea = dict(env_a)
        eb = dict(env_b)
        ea[a.var.name] = counter[0]
        eb[b.var.name] = counter[0]
        return _aeq(a.body, b.body, ea, eb, counter)
    if isinstance(a, BoxLit):
        ba, bb = a.box, b.box
        if ba.universe != bb.universe or len(ba.conditions) != len(bb.conditions):
            return False
        for ca, cb in zip(ba.conditions, bb.conditions):
            if type(ca) is not type(cb):
                return False
            if isinstance(ca, Atom) and (ca.pred != cb.pred or len(ca.args) != len(cb.args)):
                return False
            if isinstance(ca, Eq) and ca.lhs != cb.lhs:
                return False
            for sa, sb in zip(condition_terms(ca), condition_terms(cb)):
                if not _aeq(sa, sb, env_a, env_b, counter):
                    return False
        return True
    raise TypeError(a)


def alpha_normalize(t: Term) -> Term:
    """Rename bound variables canonically (v1, v2, ... in traversal order)."""
    free = free_vars(t)
    counter = [0]

    def next_name():
        while True:
            counter[0] += 1
            name = f"v{counter[0]}"
            if name not in free:
                return name

    def go(t: Term, env: dict) -> Term:
        if isinstance(t, Var):
            name = env.get(t.name, t.name)
            return Var(name, t.ty)
        if isinstance(t, (Const, RegRef)):
            return t
        if isinstance(t, App):
            return App(go(t.fn, env), go(t.arg, env))
        if isinstance(t, Lam):
            fresh = next_name()
            new_env = dict(env)
            new_env[t.var.name] = fresh
            return Lam(Var(fresh, t.var.ty), go(t.body, new_env))
        if isinstance(t, BoxLit):
            return BoxLit(map_box(t.box, lambda sub: go(sub, env)))
        raise TypeError(t)

    return go(t, {})


# ---------------------------------------------------------------------------
# Typing


def type_of(t: Term, env: dict | None = None):
    """Type of ``t`` under ``env`` (a map from free variable names to types)."""
    env = env or {}
    if isinstance(t, Var):
        if t.name not in env:
            raise UnknownSymbol(f"unbound variable {t.name}")
        return env[t.name]
    if isinstance(t, Const):
        return t.ty
    if isinstance(t, RegRef):
        return t.reg.surface_type()
    if isinstance(t, Lam):
        inner = dict(env)
        inner[t.var.name] = t.var.ty
        return Arrow(t.var.ty, type_of(t.body, inner))
    if isinstance(t, App):
        fn_ty = type_of(t.fn, env)
        arg_ty = type_of(t.arg, env)
        if not isinstance(fn_ty, Arrow):
            raise TypeMismatch(_loc(t), "a function type", fn_ty)
        if fn_ty.src != arg_ty:
            raise TypeMismatch(_loc(t), fn_ty.src, arg_ty)
        return fn_ty.dst
    if isinstance(t, BoxLit):
        check_box(t.box, env)
        return BOX
    raise TypeError(t)


def check_box(box: Box, env: dict | None = None) -> None:
    env = env or {}
    for c in box.conditions:
        if isinstance(c, Atom):
            if c.pred not in PRED_SIGNATURES:
                raise UnknownSymbol(f"unknown predicate {c.pred}")
            sig = PRED_SIGNATURES[c.pred]
            if len(sig) != len(c.args):
                raise TypeMismatch(c.pred, f"{len(sig)} arguments", f"{len(c.args)}")
            for sort, arg in zip(sig, c.args):
                want = arg_sort_type(sort)
                got = type_of(arg, env)
                if got != want:
                    raise TypeMismatch(f"{c.pred} argument", want, got)
        elif isinstance(c, Eq):
            want = c.lhs.surface_type()
            got = type_of(c.rhs, env)
            if got != want:
                raise TypeMismatch(f"{c.lhs} =", want, got)
        elif isinstance(c, Not):
            got = type_of(c.inner, env)
            if got != BOX:
                raise TypeMismatch("NOT", BOX, got)
        elif isinstance(c, Imp):
            for side in (c.antecedent, c.consequent):
                got = type_of(side, env)
                if got != BOX:
                    raise TypeMismatch("=>", BOX, got)
        else:
            raise TypeError(c)


def _loc(t: Term) -> str:
    from .render import render_term

    text = render_term(t)
    return text if len(text) <= 60 else text[:57] + "..."
