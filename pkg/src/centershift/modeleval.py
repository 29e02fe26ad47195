"""Finite first-order model evaluation of box programs by enumeration.

A box denotes a relation between states (register assignments): an output
state differs from the input at most on the box's universe and satisfies all
conditions.  Sequencing composes relations; NOT and => are tests on the
current state.  Enumeration costs |domain|^(new registers) per box.

Only entity registers live in states.  Property and dynamic-individual
registers are meaning definitions: their defining equations (and their
universe slots) are projected away before evaluation, since the derivation
step has already substituted their content wherever it is used.  Any live
occurrence that survives projection (an unexpanded application, or an atom
with a box-valued argument such as ``want``) makes the box non-first-order
and is rejected.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from functools import lru_cache

from .core import (
    App,
    Atom,
    Box,
    BoxLit,
    Const,
    E,
    Eq,
    Imp,
    ModelFormatError,
    NonFirstOrderBox,
    Not,
    PRED_SIGNATURES,
    RegRef,
    Register,
    RegisterKind,
    Term,
    UnknownSymbol,
    is_seq_app,
    seq_parts,
)


# ---------------------------------------------------------------------------
# Models and states


@dataclass(frozen=True)
class Model:
    domain: tuple
    constants: tuple
    predicates: tuple

    def __init__(self, domain, constants: dict, predicates: dict):
        object.__setattr__(self, "domain", tuple(domain))
        object.__setattr__(self, "constants", tuple(sorted(constants.items())))
        object.__setattr__(
            self,
            "predicates",
            tuple(sorted((name, frozenset(tuples)) for name, tuples in predicates.items())),
        )

    @property
    def constant_map(self) -> dict:
        return dict(self.constants)

    @property
    def predicate_map(self) -> dict:
        return dict(self.predicates)


@dataclass(frozen=True)
class EvalState:
    """A total assignment of entities to the registers in play."""

    items: tuple

    def __init__(self, assignment):
        if isinstance(assignment, EvalState):
            items = assignment.items
        elif isinstance(assignment, dict):
            items = tuple(sorted(assignment.items()))
        else:
            items = tuple(sorted(assignment))
        object.__setattr__(self, "items", items)

    def as_dict(self) -> dict:
        return dict(self.items)

    def get(self, reg: Register):
        for r, v in self.items:
            if r == reg:
                return v
        return None

    def extended(self, updates: dict) -> "EvalState":
        d = self.as_dict()
        d.update(updates)
        return EvalState(d)

    def __repr__(self):
        inner = ", ".join(f"{r}={v}" for r, v in self.items)
        return "{" + inner + "}"


# ---------------------------------------------------------------------------
# First-order projection


def _registers_of_term(t: Term):
    from .drt import registers_in_term

    return registers_in_term(t)


@lru_cache(maxsize=None)
def project_box(box: Box) -> Box:
    """Drop meaning-definition equations and non-entity universe slots.

    Raises NonFirstOrderBox if a property or dynamic register occurs outside
    such definitional positions.
    """
    universe = tuple(r for r in box.universe if r.kind == RegisterKind.ENTITY)
    conditions = []
    for c in box.conditions:
        if isinstance(c, Eq) and c.lhs.kind != RegisterKind.ENTITY:
            continue
        for reg in _cond_live_registers(c):
            if reg.kind != RegisterKind.ENTITY:
                raise NonFirstOrderBox(f"unsubstituted register {reg} in condition {c}")
        conditions.append(c)
    return Box(universe, conditions)


def _cond_live_registers(c) -> set:
    from .typelogic import condition_terms

    out = set()
    for sub in condition_terms(c):
        out |= _registers_of_term(sub)
    return out


def program_leaves(p) -> tuple:
    from .drt import BoxProgram

    if isinstance(p, BoxProgram):
        return p.leaves
    if isinstance(p, Box):
        return (p,)
    return tuple(p)


# ---------------------------------------------------------------------------
# Evaluation


def _entity_value(t: Term, state: EvalState, model: Model):
    if isinstance(t, RegRef):
        v = state.get(t.reg)
        if v is None:
            raise UnknownSymbol(f"register {t.reg} has no value in the input state")
        return v
    if isinstance(t, Const):
        constants = model.constant_map
        if t.name not in constants:
            raise UnknownSymbol(f"constant {t.name} not interpreted by the model")
        return constants[t.name]
    raise NonFirstOrderBox(f"cannot evaluate entity term {t!r}")


def _term_leaves(t: Term):
    parts = seq_parts(t) if is_seq_app(t) else [t]
    boxes = []
    for p in parts:
        if not isinstance(p, BoxLit):
            raise NonFirstOrderBox(f"unsubstituted application in test position: {p!r}")
        boxes.append(p.box)
    return tuple(boxes)


def _holds(c, state: EvalState, model: Model) -> bool:
    if isinstance(c, Atom):
        sig = PRED_SIGNATURES.get(c.pred)
        if sig is not None and any(s != E for s in sig):
            raise NonFirstOrderBox(f"atom {c.pred} takes a box argument; symbolic only")
        preds = model.predicate_map
        if c.pred not in preds:
            raise UnknownSymbol(f"predicate {c.pred} not interpreted by the model")
        tup = tuple(_entity_value(a, state, model) for a in c.args)
        return tup in preds[c.pred]
    if isinstance(c, Eq):
        lhs = state.get(c.lhs)
        if lhs is None:
            raise UnknownSymbol(f"register {c.lhs} has no value in the input state")
        return lhs == _entity_value(c.rhs, state, model)
    if isinstance(c, Not):
        return not eval_leaves(_term_leaves(c.inner), model, state)
    if isinstance(c, Imp):
        ant = eval_leaves(_term_leaves(c.antecedent), model, state)
        cons_leaves = _term_leaves(c.consequent)
        return all(eval_leaves(cons_leaves, model, k) for k in ant)
    raise TypeError(c)


def eval_box(box: Box, model: Model, state) -> frozenset:
    """All output states reachable from ``state`` through ``box``."""
    state = EvalState(state)
    box = project_box(box)
    out = []
    for values in itertools.product(model.domain, repeat=len(box.universe)):
        j = state.extended(dict(zip(box.universe, values)))
        if all(_holds(c, j, model) for c in box.conditions):
            out.append(j)
    return frozenset(out)


def eval_leaves(leaves, model: Model, state) -> frozenset:
    states = frozenset([EvalState(state)])
    for box in leaves:
        nxt = set()
        for s in states:
            nxt |= eval_box(box, model, s)
        states = frozenset(nxt)
        if not states:
            break
    return states


def eval_program(p, model: Model, state) -> frozenset:
    return eval_leaves(program_leaves(p), model, EvalState(state))


def _entity_registers(p) -> tuple:
    regs = set()
    for box in program_leaves(p):
        pb = project_box(box)
        regs |= set(pb.universe)
        for c in pb.conditions:
            regs |= {r for r in _cond_live_registers(c)}
        regs |= {c.lhs for c in pb.conditions if isinstance(c, Eq)}
    return tuple(sorted(r for r in regs if r.kind == RegisterKind.ENTITY))


def free_entity_registers(p) -> tuple:
    """Registers read before any leaf introduces them."""
    free, introduced = set(), set()
    for box in program_leaves(p):
        pb = project_box(box)
        used = set()
        for c in pb.conditions:
            used |= _cond_live_registers(c)
            if isinstance(c, Eq):
                used.add(c.lhs)
        free |= {r for r in used if r.kind == RegisterKind.ENTITY} - introduced - set(pb.universe)
        introduced |= set(pb.universe)
    return tuple(sorted(free))


def input_states(p, model: Model, registers=None):
    regs = tuple(registers) if registers is not None else free_entity_registers(p)
    if not regs:
        yield EvalState({})
        return
    for values in itertools.product(model.domain, repeat=len(regs)):
        yield EvalState(dict(zip(regs, values)))


def satisfiable(p, model: Model) -> bool:
    return any(eval_program(p, model, i) for i in input_states(p, model))


def check_equivalence(p1, p2, model: Model) -> bool:
    """True iff both programs denote the same relation over the registers in play."""
    regs = tuple(sorted(set(_entity_registers(p1)) | set(_entity_registers(p2))))
    for i in input_states(p1, model, registers=regs):
        if eval_program(p1, model, i) != eval_program(p2, model, i):
            return False
    return True


# ---------------------------------------------------------------------------
# Model files


_DOMAIN_RE = re.compile(r"^domain:\s*(.*)$")
_CONST_RE = re.compile(r"^const\s+(\w+)\s*=\s*(\w+)$")
_PRED_RE = re.compile(r"^pred\s+(\w+)\s*=\s*\{(.*)\}$")
_TUPLE_RE = re.compile(r"\(([^()]*)\)")


def load_model(source: str) -> Model:
    """Parse the line-oriented model format.

    ``domain:`` names the entities; ``const NAME = entity`` interprets a
    constant; ``pred NAME = {(a), (a,b), ...}`` gives an extension.  Lines
    starting with ``#`` are comments.
    """
    domain = None
    constants: dict = {}
    predicates: dict = {}
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _DOMAIN_RE.match(line)
        if m:
            if domain is not None:
                raise ModelFormatError(lineno, "domain declared twice")
            domain = tuple(m.group(1).split())
            if not domain:
                raise ModelFormatError(lineno, "empty domain")
            continue
        m = _CONST_RE.match(line)
        if m:
            if domain is None:
                raise ModelFormatError(lineno, "domain must come first")
            name, value = m.groups()
            if value not in domain:
                raise ModelFormatError(lineno, f"constant {name} maps outside the domain: {value}")
            constants[name] = value
            continue
        m = _PRED_RE.match(line)
        if m:
            if domain is None:
                raise ModelFormatError(lineno, "domain must come first")
            name, body = m.groups()
            tuples = set()
            if body.strip() and not _TUPLE_RE.search(body):
                raise ModelFormatError(lineno, f"malformed extension for {name}")
            for grp in _TUPLE_RE.findall(body):
                tup = tuple(x.strip() for x in grp.split(",")) if grp.strip() else ()
                if not tup or any(not x for x in tup):
                    raise ModelFormatError(lineno, f"malformed tuple in {name}")
                for x in tup:
                    if x not in domain:
                        raise ModelFormatError(lineno, f"tuple entry outside the domain: {x}")
                tuples.add(tup)
            arities = {len(t) for t in tuples}
            if len(arities) > 1:
                raise ModelFormatError(lineno, f"mixed arities in {name}")
            sig = PRED_SIGNATURES.get(name)
            if sig is not None and tuples and len(sig) not in arities:
                raise ModelFormatError(lineno, f"{name} expects arity {len(sig)}")
            predicates[name] = tuples
            continue
        raise ModelFormatError(lineno, f"unrecognized line: {raw.strip()!r}")
    if domain is None:
        raise ModelFormatError(0, "no domain declared")
    return Model(domain, constants, predicates)


def enumerate_models(domain, unary=(), binary=(), constants=()):
    """Every model over ``domain`` with the given predicate names.

    Constants range over the domain too.  Exponential; meant for small
    exhaustive sweeps.
    """
    domain = tuple(domain)
    singles = [(x,) for x in domain]
    pairs = [(x, y) for x in domain for y in domain]
    unary_exts = [list(_powerset(singles)) for _ in unary]
    binary_exts = [list(_powerset(pairs)) for _ in binary]
    const_choices = [domain for _ in constants]
    for u_choice in itertools.product(*unary_exts):
        for b_choice in itertools.product(*binary_exts):
            for c_choice in itertools.product(*const_choices):
                preds = dict(zip(unary, (set(c) for c in u_choice)))
                preds.update(dict(zip(binary, (set(c) for c in b_choice))))
                yield Model(domain, dict(zip(constants, c_choice)), preds)


def _powerset(items):
    items = list(items)
    for k in range(len(items) + 1):
        yield from itertools.combinations(items, k)
