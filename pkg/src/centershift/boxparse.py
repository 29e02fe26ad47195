"""Parser for the rendered box/program text grammar (inverse of ``render``).

Lambda binders carry no type annotations in the surface text, so parsing is
type-directed: every term position has an expected type (equation right-hand
sides from the register kind, atom arguments from the predicate signature,
NOT and sequencing operands are box-typed), and the expected type flows into
binders.
"""

from __future__ import annotations

import re

from .core import (
    App,
    Arrow,
    Atom,
    BOX,
    Box,
    BoxLit,
    B,
    Condition,
    Const,
    E,
    ENTITY,
    Eq,
    EngineError,
    Imp,
    Lam,
    Not,
    PRED_SIGNATURES,
    Register,
    RegisterKind,
    RegRef,
    Term,
    Var,
    seq2,
)


class BoxTextError(EngineError):
    pass


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<arrow>=>)|(?P<sym>[\[\]()|,;=*])|(?P<lam>λ)|(?P<name>[A-Za-z][A-Za-z0-9_']*))"
)

_REG_RE = re.compile(r"^(u|P|x)_(\d+)$")

_KIND_BY_PREFIX = {"u": RegisterKind.ENTITY, "P": RegisterKind.PROPERTY, "x": RegisterKind.DYNAMIC}


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise BoxTextError(f"cannot tokenize at offset {pos}: {text[pos:pos + 20]!r}")
        pos = m.end()
        if m.group("arrow"):
            tokens.append("=>")
        elif m.group("sym"):
            tokens.append(m.group("sym"))
        elif m.group("lam"):
            tokens.append("λ")
        else:
            tokens.append(m.group("name"))
    return tokens


def _as_register(name: str):
    m = _REG_RE.match(name)
    if not m:
        return None
    return Register(_KIND_BY_PREFIX[m.group(1)], int(m.group(2)))


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, ahead: int = 0):
        j = self.i + ahead
        return self.tokens[j] if j < len(self.tokens) else None

    def take(self, expected: str | None = None):
        tok = self.peek()
        if tok is None:
            raise BoxTextError(f"unexpected end of input (wanted {expected or 'a token'})")
        if expected is not None and tok != expected:
            raise BoxTextError(f"expected {expected!r}, found {tok!r} at token {self.i}")
        self.i += 1
        return tok

    def done(self) -> bool:
        return self.i >= len(self.tokens)

    # -- programs and boxes

    def program(self):
        leaves = [self.leaf()]
        while self.peek() == ";":
            self.take(";")
            leaves.append(self.leaf())
        return tuple(leaves)

    def leaf(self):
        if self.peek() == "[":
            return self.box()
        return self.term(BOX, {})

    def box(self) -> Box:
        self.take("[")
        universe = []
        while self.peek() != "|":
            name = self.take()
            reg = _as_register(name)
            if reg is None:
                raise BoxTextError(f"not a register in universe: {name!r}")
            if self.peek() == "*":
                self.take("*")
            universe.append(reg)
            if self.peek() == ",":
                self.take(",")
        self.take("|")
        conditions = []
        while self.peek() != "]":
            conditions.append(self.condition({}))
            if self.peek() == ",":
                self.take(",")
        self.take("]")
        return Box(universe, conditions)

    # -- conditions

    def condition(self, env: dict) -> Condition:
        tok = self.peek()
        if tok == "NOT":
            self.take("NOT")
            self.take("(")
            inner = self.term(BOX, env)
            self.take(")")
            return Not(inner)
        if tok == "[" or tok == "(" or tok == "λ":
            left = self.term(BOX, env)
            self.take("=>")
            right = self.term(BOX, env)
            return Imp(left, right)
        name = self.take()
        reg = _as_register(name)
        if reg is not None and self.peek() == "*":
            self.take("*")
        if self.peek() == "=":
            if reg is None:
                raise BoxTextError(f"equation left side must be a register: {name!r}")
            self.take("=")
            rhs = self.term(reg.surface_type(), env)
            return Eq(reg, rhs)
        if self.peek() == "(" and name in PRED_SIGNATURES:
            return self.atom(name, env)
        # a register application used as a box condition side of =>
        if reg is not None:
            left = self.app_suffix(RegRef(reg), env)
            self.take("=>")
            right = self.term(BOX, env)
            return Imp(left, right)
        raise BoxTextError(f"cannot parse condition starting with {name!r}")

    def atom(self, pred: str, env: dict) -> Atom:
        sig = PRED_SIGNATURES[pred]
        self.take("(")
        args = []
        for k, sort in enumerate(sig):
            if k:
                self.take(",")
            if sort == B:
                args.append(self.box_argument(env))
            else:
                args.append(self.term(ENTITY, env))
        self.take(")")
        return Atom(pred, args)

    def box_argument(self, env: dict) -> Term:
        tok = self.peek()
        if tok == "NOT":
            self.take("NOT")
            self.take("(")
            inner = self.term(BOX, env)
            self.take(")")
            return BoxLit(Box((), (Not(inner),)))
        if tok in PRED_SIGNATURES and self.peek(1) == "(":
            self.take()
            return BoxLit(Box((), (self.atom(tok, env),)))
        return self.term(BOX, env)

    # -- terms

    def term(self, expected, env: dict) -> Term:
        t = self.term_atom(expected, env)
        while self.peek() == ";":
            self.take(";")
            right = self.term_atom(BOX, env)
            t = seq2(t, right)
        return t

    def term_atom(self, expected, env: dict) -> Term:
        tok = self.peek()
        if tok == "λ":
            self.take("λ")
            if not isinstance(expected, Arrow):
                raise BoxTextError(f"lambda found where a {expected} was expected")
            name = self.take()
            var = Var(name, expected.src)
            inner_env = dict(env)
            inner_env[name] = var.ty
            if self.peek() == "[":
                body = BoxLit(self.box())
            else:
                self.take("(")
                body = self.term(expected.dst, inner_env)
                self.take(")")
            return Lam(var, body)
        if tok == "[":
            return BoxLit(self.box())
        if tok == "(":
            self.take("(")
            inner = self.term(expected, env)
            self.take(")")
            return self.app_suffix(inner, env)
        name = self.take()
        reg = _as_register(name)
        if reg is not None:
            if self.peek() == "*":
                self.take("*")
            return self.app_suffix(RegRef(reg), env)
        if name in env:
            return self.app_suffix(Var(name, env[name]), env)
        if expected == ENTITY:
            return Const(name, ENTITY)
        raise BoxTextError(f"cannot parse term {name!r} where a {expected} was expected")

    def app_suffix(self, head: Term, env: dict) -> Term:
        while self.peek() == "(":
            from .typelogic import type_of

            head_ty = type_of(head, env)
            self.take("(")
            while True:
                if not isinstance(head_ty, Arrow):
                    raise BoxTextError("application of a non-function")
                arg = self.term(head_ty.src, env)
                head = App(head, arg)
                head_ty = head_ty.dst
                if self.peek() == ",":
                    self.take(",")
                    continue
                break
            self.take(")")
        return head


def parse_program(text: str) -> tuple:
    """Parse rendered program text into a tuple of leaves (boxes or terms)."""
    parser = _Parser(text)
    leaves = parser.program()
    if not parser.done():
        raise BoxTextError(f"trailing input at token {parser.i}: {parser.peek()!r}")
    return leaves


def parse_box(text: str) -> Box:
    leaves = parse_program(text)
    if len(leaves) != 1 or not isinstance(leaves[0], Box):
        raise BoxTextError("expected a single box")
    return leaves[0]


def parse_term(text: str, expected=BOX) -> Term:
    parser = _Parser(text)
    t = parser.term(expected, {})
    if not parser.done():
        raise BoxTextError(f"trailing input at token {parser.i}: {parser.peek()!r}")
    return t
