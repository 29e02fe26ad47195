"""Shared data structures: types, terms, registers, conditions, boxes.

Everything here is an immutable value.  Terms are the universal currency of
meanings; linearized boxes are a notation layer over them (a box abbreviates
a state-transition term, see ``drt.unabbreviate``).  Registers are indexed
discourse markers; index 0 is reserved for the discourse center.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class BaseType:
    name: str

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class Arrow:
    src: "Type"
    dst: "Type"

    def __repr__(self):
        return f"({self.src}->{self.dst})"


Type = Union[BaseType, Arrow]

STATE = BaseType("s")
ENTITY = BaseType("e")
TRUTH = BaseType("t")

#: Boxes denote relations between states.
BOX = Arrow(STATE, Arrow(STATE, TRUTH))

#: Properties map entities to boxes.
PROPERTY_TYPE = Arrow(ENTITY, BOX)

#: Dynamic individuals consume a property and yield a box.
DYNAMIC_TYPE = Arrow(PROPERTY_TYPE, BOX)


# ---------------------------------------------------------------------------
# Registers


class RegisterKind(enum.Enum):
    ENTITY = "u"
    PROPERTY = "P"
    DYNAMIC = "x"


@dataclass(frozen=True, order=True)
class Register:
    kind_order: int
    index: int

    def __init__(self, kind: RegisterKind, index: int):
        if index < 0:
            raise ValueError(f"register index must be non-negative: {index}")
        object.__setattr__(self, "kind_order", _KIND_ORDER[kind])
        object.__setattr__(self, "index", index)

    @property
    def kind(self) -> RegisterKind:
        return _KIND_BY_ORDER[self.kind_order]

    @property
    def name(self) -> str:
        return f"{self.kind.value}_{self.index}"

    @property
    def is_center(self) -> bool:
        return self.index == 0

    def surface_type(self) -> Type:
        return SURFACE_TYPE[self.kind]

    def __repr__(self):
        return self.name


_KIND_ORDER = {RegisterKind.ENTITY: 0, RegisterKind.PROPERTY: 1, RegisterKind.DYNAMIC: 2}
_KIND_BY_ORDER = {v: k for k, v in _KIND_ORDER.items()}

SURFACE_TYPE = {
    RegisterKind.ENTITY: ENTITY,
    RegisterKind.PROPERTY: PROPERTY_TYPE,
    RegisterKind.DYNAMIC: DYNAMIC_TYPE,
}

#: Underlying type-logic type: every register reads its value off a state.
UNDERLYING_TYPE = {kind: Arrow(STATE, t) for kind, t in SURFACE_TYPE.items()}


def ureg(index: int) -> Register:
    return Register(RegisterKind.ENTITY, index)


def preg(index: int) -> Register:
    return Register(RegisterKind.PROPERTY, index)


def xreg(index: int) -> Register:
    return Register(RegisterKind.DYNAMIC, index)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Var:
    name: str
    ty: Type


@dataclass(frozen=True)
class Const:
    name: str
    ty: Type


@dataclass(frozen=True)
class Lam:
    var: Var
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class BoxLit:
    box: "Box"


@dataclass(frozen=True)
class RegRef:
    reg: Register


Term = Union[Var, Const, Lam, App, BoxLit, RegRef]

#: The sequencing operator; applications of it denote relation composition.
SEQ = Const(";", Arrow(BOX, Arrow(BOX, BOX)))


def seq2(left: Term, right: Term) -> Term:
    return App(App(SEQ, left), right)


def seq_chain(parts: list) -> Term:
    if not parts:
        return BoxLit(EMPTY_BOX)
    out = parts[0]
    for p in parts[1:]:
        out = seq2(out, p)
    return out


def is_seq_app(t: Term) -> bool:
    return isinstance(t, App) and isinstance(t.fn, App) and t.fn.fn == SEQ


def seq_parts(t: Term) -> list:
    """Flatten nested sequencing applications into their component terms."""
    if is_seq_app(t):
        return seq_parts(t.fn.arg) + seq_parts(t.arg)
    return [t]


# ---------------------------------------------------------------------------
# Conditions and boxes


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple

    def __init__(self, pred: str, args):
        object.__setattr__(self, "pred", pred)
        object.__setattr__(self, "args", tuple(args))


@dataclass(frozen=True)
class Eq:
    lhs: Register
    rhs: Term


@dataclass(frozen=True)
class Not:
    inner: Term


@dataclass(frozen=True)
class Imp:
    antecedent: Term
    consequent: Term


Condition = Union[Atom, Eq, Not, Imp]


@dataclass(frozen=True)
class Box:
    universe: tuple
    conditions: tuple

    def __init__(self, universe, conditions):
        universe = tuple(universe)
        seen = set()
        for r in universe:
            if r in seen:
                raise ValueError(f"register {r} listed twice in one universe")
            seen.add(r)
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "conditions", tuple(conditions))


EMPTY_BOX = Box((), ())


# ---------------------------------------------------------------------------
# Predicate signatures

E = "e"
B = "box"

#: Argument sorts for every predicate the fragment and the test models use.
#: ``box`` arguments are symbolic only: the model evaluator rejects them.
PRED_SIGNATURES = {
    "farmer": (E,),
    "walk": (E,),
    "laugh": (E,),
    "cat": (E,),
    "dog": (E,),
    "bark": (E,),
    "donkey": (E,),
    "paycheck": (E,),
    "drink": (E,),
    "gamble": (E,),
    "frown": (E,),
    "smile": (E,),
    "p": (E,),
    "q": (E,),
    "love": (E, E),
    "spend": (E, E),
    "save": (E, E),
    "help": (E, E),
    "kiss": (E, E),
    "conceal": (E, E),
    "see": (E, E),
    "greet": (E, E),
    "of": (E, E),
    "r": (E, E),
    "want": (E, B),
    "belief": (E, B),
}


def arg_sort_type(sort: str) -> Type:
    return ENTITY if sort == E else BOX


# ---------------------------------------------------------------------------
# Errors


class EngineError(Exception):
    """Base class for all engine-reported faults."""


class TypeMismatch(EngineError):
    def __init__(self, location: str, expected, got):
        self.location = location
        self.expected = expected
        self.got = got
        super().__init__(f"type mismatch at {location}: expected {expected}, got {got}")


class LexError(EngineError):
    def __init__(self, position: int, message: str):
        self.position = position
        super().__init__(f"column {position}: {message}")


class ParseError(EngineError):
    def __init__(self, position: int, expected: str):
        self.position = position
        self.expected = expected
        super().__init__(f"token {position}: expected {expected}")


class ResolutionError(EngineError):
    pass


class UnresolvedAnaphor(ResolutionError):
    def __init__(self, kind, index):
        self.kind = kind
        self.index = index
        super().__init__(f"no antecedent register for index {index} ({kind})")


class KindMismatch(ResolutionError):
    def __init__(self, kind, index, found):
        self.kind = kind
        self.index = index
        self.found = found
        super().__init__(f"index {index} resolves to {found}, not a {kind} register")


class NoDefinition(ResolutionError):
    def __init__(self, reg: Register):
        self.reg = reg
        super().__init__(f"no defining equation recorded for {reg}")


class DoubleIntroduction(EngineError):
    def __init__(self, reg: Register):
        self.reg = reg
        super().__init__(f"register {reg} introduced twice in one utterance")


class NonFirstOrderBox(EngineError):
    pass


class UnknownSymbol(EngineError):
    pass


class ModelFormatError(EngineError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NotAnAnaphoricSite(EngineError):
    pass
