"""The annotated English fragment: tokenizer, lexicon, parser, composition.

The surface language is one utterance per line.  A token is a word with an
optional ``_n`` subscript and an optional ``*``; the pronoun center form is
``word_*``; connectives read as plain conjunction are written in square
brackets (``[if]``, ``[even if]``, ``[when]``); a forward conditional is
written ``if <clause> then <clause>``; a sentence-final ``.`` is optional.

Annotation decides antecedency: anaphors carry their antecedent's index
explicitly (``he_3``, ``does_2``, ``it_3``) or a ``*`` for the discourse
center, and the composer validates rather than searches.  Indexed
determiners, names and INFLs introduce registers; a starred introducer also
(re)introduces the center register alongside, which is what a later merge can
choke on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    App,
    Atom,
    Box,
    BoxLit,
    Const,
    ENTITY,
    EngineError,
    Eq,
    KindMismatch,
    Lam,
    LexError,
    Not,
    Imp,
    ParseError,
    PROPERTY_TYPE,
    RegRef,
    Register,
    RegisterKind,
    Term,
    UnresolvedAnaphor,
    Var,
    preg,
    seq2,
    seq_chain,
    ureg,
    xreg,
)
from .typelogic import beta_reduce


class UnknownWord(EngineError):
    pass


class ModeUnavailable(EngineError):
    pass


# ---------------------------------------------------------------------------
# Word classes


NAMES = {"Tom", "John", "Smith", "Jones", "Harry", "Mary", "Bill", "Sue"}

#: Person indexicals denote fixed constants; the first indexed use adds the
#: referent to the context, later uses with the same index are anaphoric.
PERSON_PRONOUNS = {"I": "I", "me": "I", "you": "You"}

PRONOUNS = {"he", "she", "it", "him", "her", "they"}

GENITIVE_PRONOUNS = {"his", "her", "its", "my", "your", "their"}

NOUNS = {"farmer", "cat", "dog", "donkey", "paycheck", "man", "woman"}

NOUN_COMPLEMENT = {"belief_that": "belief"}

INTRANSITIVE = {"walk", "laugh", "bark", "drink", "gamble", "frown", "smile"}

TRANSITIVE = {"love", "spend", "save", "help", "kiss", "conceal", "see", "greet"}

PROPERTY_COMPLEMENT_VERBS = {"want"}

INFLS = {
    "PRES", "PAST", "FUT", "WILL", "DO", "DOES", "DID", "CAN", "COULD",
    "SHOULD", "MAY", "MUST", "does", "do", "did", "to", "can", "will", "should",
}

#: Inflected surfaces map to base verbs; such clauses carry no INFL token and
#: introduce no property register.
INFLECTED = {
    "walks": "walk", "walked": "walk",
    "laughs": "laugh", "laughed": "laugh",
    "barks": "bark", "barked": "bark",
    "drinks": "drink", "gambles": "gamble",
    "frowns": "frown", "frowned": "frown",
    "smiles": "smile", "smiled": "smile",
    "loves": "love", "loved": "love",
    "spends": "spend", "spent": "spend",
    "saves": "save", "saved": "save",
    "helps": "help", "helped": "help",
    "kisses": "kiss", "kissed": "kiss",
    "conceals": "conceal", "concealed": "conceal",
    "sees": "see", "saw": "see",
    "greets": "greet", "greeted": "greet",
}

DETERMINERS = {"a", "an", "A", "An"}

VACUOUS = {"too"}


# ---------------------------------------------------------------------------
# Tokens


@dataclass(frozen=True)
class Token:
    surface: str
    index: Optional[int]
    star: bool
    bracketed: bool
    position: int  # 1-based position in the utterance
    column: int  # 1-based character column

    def __repr__(self):
        suffix = ""
        if self.index is not None:
            suffix += f"_{self.index}"
        if self.star:
            suffix += "*"
        core = f"{self.surface}{suffix}"
        return f"[{core}]" if self.bracketed else core


_CHUNK_RE = re.compile(r"\[[^\]\[]*\]|\S+")
_TOKEN_RE = re.compile(
    r"^(?P<word>[A-Za-z][A-Za-z']*(?:_[A-Za-z][A-Za-z']*)*)"
    r"(?:_(?P<idx>\d+)|_(?P<cstar>\*))?(?P<star>\*)?$"
)


def tokenize(line: str) -> list:
    """Tokenize one annotated utterance."""
    chunks = list(_CHUNK_RE.finditer(line))
    tokens = []
    for n, m in enumerate(chunks):
        text = m.group(0)
        column = m.start() + 1
        last = n == len(chunks) - 1
        if text == ".":
            if not last:
                raise LexError(column, "one utterance per line ('.' before end of line)")
            continue
        if text.endswith(".") and not text.startswith("["):
            if not last:
                raise LexError(column, "one utterance per line ('.' before end of line)")
            text = text[:-1]
            if not text:
                continue
        if text.startswith("["):
            inner = text[1:-1].strip()
            if not inner:
                raise LexError(column, "empty bracketed connective")
            tokens.append(Token(inner, None, False, True, len(tokens) + 1, column))
            continue
        m2 = _TOKEN_RE.match(text)
        if not m2:
            raise LexError(column, f"malformed token {text!r}")
        index = int(m2.group("idx")) if m2.group("idx") else None
        star = bool(m2.group("star")) or bool(m2.group("cstar"))
        tokens.append(Token(m2.group("word"), index, star, False, len(tokens) + 1, column))
    return tokens


# ---------------------------------------------------------------------------
# Lexicon templates

_P1 = Var("p1", PROPERTY_TYPE)
_P2 = Var("p2", PROPERTY_TYPE)
_P = Var("P", PROPERTY_TYPE)
_Q = Var("p", PROPERTY_TYPE)
_X = Var("x", ENTITY)
_V = Var("v", ENTITY)
_U = Var("u'", ENTITY)


def _quantifier(intro: Box, target: Register) -> Term:
    # λp([intro] ; p(target))
    return Lam(_Q, seq2(BoxLit(intro), App(_Q, RegRef(target))))


def det_template(n: int, starred: bool) -> Term:
    un = ureg(n)
    if starred:
        intro = Box((ureg(0), un), (Eq(ureg(0), RegRef(un)),))
    else:
        intro = Box((un,), ())
    return Lam(
        _P1,
        Lam(_P2, seq_chain([BoxLit(intro), App(_P1, RegRef(un)), App(_P2, RegRef(un))])),
    )


def name_template(n: int, constant: str, starred: bool) -> Term:
    un = ureg(n)
    eqs = [Eq(un, Const(constant, ENTITY))]
    if starred:
        intro = Box((ureg(0), un), (Eq(ureg(0), RegRef(un)),) + tuple(eqs))
    else:
        intro = Box((un,), tuple(eqs))
    return _quantifier(intro, un)


def pronoun_template(reg: Register) -> Term:
    # λp p(reg); a dynamic-individual antecedent is the quantifier itself
    if reg.kind == RegisterKind.DYNAMIC:
        return RegRef(reg)
    return Lam(_Q, App(_Q, RegRef(reg)))


def infl_template(n: int, starred: bool) -> Term:
    pn = preg(n)
    if starred:
        intro = Box((preg(0), pn), (Eq(preg(0), RegRef(pn)), Eq(pn, _P)))
    else:
        intro = Box((pn,), (Eq(pn, _P),))
    return Lam(_P, Lam(_X, seq2(BoxLit(intro), App(_P, _X))))


def noun_template(pred: str) -> Term:
    return Lam(_V, BoxLit(Box((), (Atom(pred, [_V]),))))


intransitive_template = noun_template


def transitive_template(pred: str) -> Term:
    npv = Var("Q", Arrow_NP())
    inner = Lam(_U, BoxLit(Box((), (Atom(pred, [_V, _U]),))))
    return Lam(npv, Lam(_V, App(npv, inner)))


def property_complement_template(pred: str) -> Term:
    # λd λQ λv Q(λu' [ | pred(v, d(u'))])
    d = Var("d", PROPERTY_TYPE)
    npv = Var("Q", Arrow_NP())
    inner = Lam(_U, BoxLit(Box((), (Atom(pred, [_V, App(d, _U)]),))))
    return Lam(d, Lam(npv, Lam(_V, App(npv, inner))))


def genitive_template(m: int, possessor: Register, dynamic: bool) -> Term:
    um = ureg(m)
    of_box = Box((um,), (Atom("of", [RegRef(um), RegRef(possessor)]),))
    if not dynamic:
        return Lam(
            _P1,
            Lam(_P2, seq_chain([BoxLit(of_box), App(_P1, RegRef(um)), App(_P2, RegRef(um))])),
        )
    xm = xreg(m)
    stored = Lam(_Q, seq_chain([BoxLit(of_box), App(_P1, RegRef(um)), App(_Q, RegRef(um))]))
    intro = Box((xm,), (Eq(xm, stored),))
    return Lam(_P1, Lam(_P2, seq2(BoxLit(intro), App(RegRef(xm), _P2))))


def noun_complement_template(pred: str, complement: Term) -> Term:
    return Lam(_V, BoxLit(Box((), (Atom(pred, [_V, complement]),))))


def negated_property(prop: Term) -> Term:
    return Lam(_X, BoxLit(Box((), (Not(App(prop, _X)),))))


def Arrow_NP():
    from .core import Arrow, BOX

    return Arrow(PROPERTY_TYPE, BOX)


def lex_lookup(tok: Token, mode: str, possessed_index: Optional[int] = None,
               center: Optional[Register] = None) -> Term:
    """Instantiate the lexical template for a token in a given mode.

    Modes: ``plain`` and ``starred`` for introducers, ``anaphoric`` for
    context references, ``dynamic`` for the dynamic-individual variants.
    Anaphoric and dynamic lookups take the resolved antecedent where the
    caller has one; a star resolves to the center register passed in.
    """
    word = tok.surface
    if word in DETERMINERS:
        if mode not in ("plain", "starred"):
            raise ModeUnavailable(f"{word}: no {mode} reading")
        if tok.index is None:
            raise ParseError(tok.position, "an indexed determiner")
        return det_template(tok.index, mode == "starred")
    if word in NAMES:
        if mode not in ("plain", "starred"):
            raise ModeUnavailable(f"{word}: no {mode} reading")
        if tok.index is None:
            raise ParseError(tok.position, "an indexed name")
        return name_template(tok.index, word, mode == "starred")
    if word in PRONOUNS or word in PERSON_PRONOUNS:
        if mode == "anaphoric":
            reg = center if tok.index is None else ureg(tok.index)
            if reg is None:
                raise UnresolvedAnaphor(RegisterKind.ENTITY, tok.index)
            return pronoun_template(reg)
        if mode == "dynamic":
            if tok.index is None:
                raise ModeUnavailable(f"{word}: dynamic reading needs an index")
            return pronoun_template(xreg(tok.index))
        raise ModeUnavailable(f"{word}: no {mode} reading")
    if word in GENITIVE_PRONOUNS:
        if possessed_index is None:
            raise ModeUnavailable(f"{word}: genitive needs the possessed index")
        possessor = center if tok.index is None else ureg(tok.index)
        if possessor is None:
            raise UnresolvedAnaphor(RegisterKind.ENTITY, tok.index)
        if mode in ("plain", "anaphoric"):
            return genitive_template(possessed_index, possessor, dynamic=False)
        if mode == "dynamic":
            return genitive_template(possessed_index, possessor, dynamic=True)
        raise ModeUnavailable(f"{word}: no {mode} reading")
    if word in INFLS:
        if mode in ("plain", "starred"):
            if tok.index is None:
                return Lam(_P, _P)
            return infl_template(tok.index, mode == "starred")
        if mode == "anaphoric":
            reg = center if tok.index is None else preg(tok.index)
            if reg is None:
                raise UnresolvedAnaphor(RegisterKind.PROPERTY, tok.index)
            return RegRef(reg)
        raise ModeUnavailable(f"{word}: no {mode} reading")
    base = INFLECTED.get(word, word)
    if base in NOUNS or base in INTRANSITIVE:
        if mode != "plain":
            raise ModeUnavailable(f"{word}: no {mode} reading")
        return noun_template(base)
    if base in TRANSITIVE:
        if mode != "plain":
            raise ModeUnavailable(f"{word}: no {mode} reading")
        return transitive_template(base)
    if base in PROPERTY_COMPLEMENT_VERBS:
        if mode != "plain":
            raise ModeUnavailable(f"{word}: no {mode} reading")
        return property_complement_template(base)
    raise UnknownWord(word)


# ---------------------------------------------------------------------------
# Parse trees


@dataclass(frozen=True)
class ParseTree:
    label: str
    children: tuple = ()
    token: Optional[Token] = None

    def __repr__(self):
        if self.token is not None and not self.children:
            return f"{self.label}({self.token!r})"
        inner = ", ".join(repr(c) for c in self.children)
        return f"{self.label}({inner})"


def _leaf(label: str, tok: Token) -> ParseTree:
    return ParseTree(label, (), tok)


class _TokenStream:
    def __init__(self, tokens):
        self.tokens = list(tokens)
        self.i = 0

    def peek(self, ahead=0) -> Optional[Token]:
        j = self.i + ahead
        return self.tokens[j] if j < len(self.tokens) else None

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError(self.i + 1, "another token")
        self.i += 1
        return tok

    def done(self) -> bool:
        return self.i >= len(self.tokens)


def _is_plain_word(tok: Optional[Token], word: str) -> bool:
    return (
        tok is not None
        and not tok.bracketed
        and tok.surface == word
        and tok.index is None
        and not tok.star
    )


def _is_verbal(tok: Optional[Token]) -> bool:
    if tok is None or tok.bracketed:
        return False
    base = INFLECTED.get(tok.surface, tok.surface)
    return base in INTRANSITIVE or base in TRANSITIVE or base in PROPERTY_COMPLEMENT_VERBS


def _starts_np(tok: Optional[Token]) -> bool:
    if tok is None or tok.bracketed:
        return False
    w = tok.surface
    return (
        w in DETERMINERS
        or w in NAMES
        or w in PRONOUNS
        or w in PERSON_PRONOUNS
        or w in GENITIVE_PRONOUNS
    )


def parse_utterance(tokens) -> ParseTree:
    """Parse one utterance; the grammar is deterministic (single parse)."""
    stream = _TokenStream(tokens)
    if stream.done():
        raise ParseError(1, "a nonempty utterance")
    first = stream.peek()
    if _is_plain_word(first, "if"):
        conn = stream.take()
        antecedent = _parse_clause(stream)
        then = stream.peek()
        if not _is_plain_word(then, "then"):
            raise ParseError(stream.i + 1, "'then'")
        stream.take()
        consequent = _parse_clause(stream)
        tree = ParseTree("Utt", (_leaf("Conn", conn), antecedent, consequent))
    else:
        parts = [_parse_clause(stream)]
        while not stream.done():
            tok = stream.peek()
            if tok.bracketed or _is_plain_word(tok, "and"):
                conn = stream.take()
                parts.append(_leaf("Conn", conn))
                parts.append(_parse_clause(stream))
            else:
                raise ParseError(stream.i + 1, "a connective or end of line")
        tree = ParseTree("Utt", tuple(parts))
    if not stream.done():
        raise ParseError(stream.i + 1, "end of line")
    return tree


def _parse_clause(stream: _TokenStream) -> ParseTree:
    np = _parse_np(stream)
    children = [np]
    tok = stream.peek()
    if tok is not None and not tok.bracketed and tok.surface in INFLS:
        infl = stream.take()
        negated = False
        if stream.peek() is not None and stream.peek().surface == "NOT":
            stream.take()
            negated = True
        if _is_verbal(stream.peek()):
            vp = _parse_vp(stream)
            children.append(_leaf("INFL", infl))
            if negated:
                children.append(ParseTree("Not", ()))
            children.append(vp)
        else:
            children.append(_leaf("VPE", infl))
            if negated:
                children.append(ParseTree("Not", ()))
    elif _is_verbal(tok):
        children.append(_parse_vp(stream))
    else:
        raise ParseError(stream.i + 1, "an INFL or a verb")
    while stream.peek() is not None and stream.peek().surface in VACUOUS:
        stream.take()
    return ParseTree("S", tuple(children))


def _parse_np(stream: _TokenStream) -> ParseTree:
    tok = stream.peek()
    if tok is None or tok.bracketed:
        raise ParseError(stream.i + 1, "a noun phrase")
    w = tok.surface
    if w in DETERMINERS:
        det = stream.take()
        noun = stream.take()
        if INFLECTED.get(noun.surface, noun.surface) not in NOUNS:
            raise ParseError(noun.position, "a noun")
        return ParseTree("NP", (_leaf("Det", det), _leaf("N", noun)))
    if w in GENITIVE_PRONOUNS:
        nxt = stream.peek(1)
        heads_noun = nxt is not None and (
            nxt.surface in NOUNS or nxt.surface in NOUN_COMPLEMENT
        )
        if heads_noun:
            gen = stream.take()
            noun = stream.take()
            if noun.surface in NOUN_COMPLEMENT:
                complement = _parse_clause(stream)
                return ParseTree("NP", (_leaf("Gen", gen), _leaf("N", noun), complement))
            return ParseTree("NP", (_leaf("Gen", gen), _leaf("N", noun)))
    if w in NAMES:
        return ParseTree("NP", (_leaf("Name", stream.take()),))
    if w in PRONOUNS or w in PERSON_PRONOUNS:
        return ParseTree("NP", (_leaf("Pron", stream.take()),))
    raise ParseError(tok.position, "a noun phrase")


def _parse_vp(stream: _TokenStream) -> ParseTree:
    tok = stream.take()
    base = INFLECTED.get(tok.surface, tok.surface)
    if base in INTRANSITIVE:
        return ParseTree("VP", (_leaf("V", tok),))
    if base in TRANSITIVE:
        obj = _parse_np(stream)
        return ParseTree("VP", (_leaf("V", tok), obj))
    if base in PROPERTY_COMPLEMENT_VERBS:
        obj = _parse_np(stream)
        infl = stream.peek()
        if infl is None or infl.bracketed or infl.surface not in INFLS:
            raise ParseError(stream.i + 1, "an elided INFL after the complement subject")
        stream.take()
        return ParseTree("VP", (_leaf("V", tok), obj, _leaf("VPE", infl)))
    raise ParseError(tok.position, "a verb")


# ---------------------------------------------------------------------------
# Composition


@dataclass
class PronounUse:
    token: Token
    resolved: Register
    utterance: int = 0


@dataclass
class VpeUse:
    token: Token
    resolved: Register
    utterance: int = 0


@dataclass
class ComposeContext:
    """What composition needs to know about the discourse so far.

    ``introduced`` holds (kind, index) pairs already in the context;
    ``center`` is the register the center is currently linked to (its own
    register, not index 0); ``dynamic_indices`` lists possessed indices whose
    genitives take the dynamic-individual route.
    """

    introduced: set = field(default_factory=set)
    center: Optional[Register] = None
    dynamic_indices: frozenset = frozenset()

    def knows(self, kind: RegisterKind, index: int) -> bool:
        return (kind, index) in self.introduced


@dataclass
class ComposeResult:
    term: Term
    pronouns: list
    vpe_uses: list
    center_established: Optional[Register]


class _Composer:
    def __init__(self, ctx: ComposeContext):
        self.ctx = ComposeContext(set(ctx.introduced), ctx.center, ctx.dynamic_indices)
        self.this_utterance: set = set()
        self.hoisted: list = []
        self.pronouns: list = []
        self.vpe_uses: list = []
        self.center_established: Optional[Register] = None

    # -- bookkeeping

    def _introduce(self, reg: Register):
        from .core import DoubleIntroduction

        key = (reg.kind, reg.index)
        if key in self.this_utterance:
            raise DoubleIntroduction(reg)
        self.this_utterance.add(key)
        self.ctx.introduced.add(key)

    def _introduce_center(self, target: Register):
        self._introduce(Register(target.kind, 0))
        self.ctx.center = target
        if self.center_established is None:
            self.center_established = target

    def _resolve(self, tok: Token, kind: RegisterKind) -> Register:
        """Resolve an anaphoric token to a register; star means the center."""
        if tok.star and tok.index is None:
            center = self.ctx.center
            if center is None:
                raise UnresolvedAnaphor(kind, None)
            if center.kind != kind:
                raise KindMismatch(kind, 0, Register(center.kind, 0))
            return Register(kind, 0)
        if tok.index is None:
            raise ParseError(tok.position, "an index or * on an anaphor")
        index = tok.index
        if kind == RegisterKind.ENTITY and self.ctx.knows(RegisterKind.DYNAMIC, index):
            return xreg(index)
        if self.ctx.knows(kind, index):
            return Register(kind, index)
        for other in RegisterKind:
            if other != kind and self.ctx.knows(other, index):
                raise KindMismatch(kind, index, Register(other, index))
        raise UnresolvedAnaphor(kind, index)

    # -- nodes

    def utterance(self, tree: ParseTree) -> Term:
        kids = tree.children
        if kids and kids[0].label == "Conn" and kids[0].token.surface == "if" and not kids[0].token.bracketed:
            antecedent = self.clause(kids[1])
            consequent = self.clause(kids[2])
            body: Term = BoxLit(Box((), (Imp(antecedent, consequent),)))
        else:
            parts = [self.clause(k) for k in kids if k.label == "S"]
            body = seq_chain(parts)
        return seq_chain([BoxLit(b) for b in self.hoisted] + [body])

    def clause(self, tree: ParseTree) -> Term:
        kids = list(tree.children)
        np = self.np(kids[0])
        rest = kids[1:]
        labels = [k.label for k in rest]
        if labels[:1] == ["INFL"]:
            infl_tok = rest[0].token
            negated = "Not" in labels
            vp_tree = next(k for k in rest if k.label == "VP")
            prop = self.vp(vp_tree)
            if negated:
                prop = negated_property(prop)
            if infl_tok.index is None:
                pred = prop
            else:
                self._introduce(preg(infl_tok.index))
                if infl_tok.star:
                    self._introduce_center(preg(infl_tok.index))
                pred = App(infl_template(infl_tok.index, infl_tok.star), prop)
        elif labels[:1] == ["VPE"]:
            reg = self._resolve(rest[0].token, RegisterKind.PROPERTY)
            self.vpe_uses.append(VpeUse(rest[0].token, reg))
            pred: Term = RegRef(reg)
            if "Not" in labels:
                pred = negated_property(pred)
        else:
            pred = self.vp(rest[0])
        return App(np, pred)

    def np(self, tree: ParseTree) -> Term:
        kids = tree.children
        head = kids[0]
        tok = head.token
        if head.label == "Det":
            noun = self.nbar(kids[1:])
            if tok.index is None:
                raise ParseError(tok.position, "an indexed determiner")
            self._introduce(ureg(tok.index))
            if tok.star:
                self._introduce_center(ureg(tok.index))
            return App(det_template(tok.index, tok.star), noun)
        if head.label == "Name":
            if tok.index is None:
                raise ParseError(tok.position, "an indexed name")
            self._introduce(ureg(tok.index))
            if tok.star:
                self._introduce_center(ureg(tok.index))
            return name_template(tok.index, tok.surface, tok.star)
        if head.label == "Gen":
            noun_tok = kids[1].token
            if noun_tok.index is None:
                raise ParseError(noun_tok.position, "an indexed possessed noun")
            possessor = self._resolve(tok, RegisterKind.ENTITY)
            if possessor.kind == RegisterKind.DYNAMIC:
                raise KindMismatch(RegisterKind.ENTITY, tok.index, possessor)
            self.pronouns.append(PronounUse(tok, possessor))
            nbar = self.nbar(kids[1:])
            m = noun_tok.index
            dynamic = m in self.ctx.dynamic_indices
            if dynamic:
                self._introduce(xreg(m))
            else:
                self._introduce(ureg(m))
            return App(genitive_template(m, possessor, dynamic), nbar)
        if head.label == "Pron":
            word = tok.surface
            if word in PERSON_PRONOUNS and not tok.star:
                if tok.index is None:
                    raise ParseError(tok.position, "an indexed person pronoun")
                if not self.ctx.knows(RegisterKind.ENTITY, tok.index):
                    self._introduce(ureg(tok.index))
                    self.hoisted.append(
                        Box((ureg(tok.index),),
                            (Eq(ureg(tok.index), Const(PERSON_PRONOUNS[word], ENTITY)),))
                    )
                self.pronouns.append(PronounUse(tok, ureg(tok.index)))
                return pronoun_template(ureg(tok.index))
            reg = self._resolve(tok, RegisterKind.ENTITY)
            self.pronouns.append(PronounUse(tok, reg))
            return pronoun_template(reg)
        raise ParseError(tok.position if tok else 0, "a noun phrase")

    def nbar(self, kids) -> Term:
        noun_tok = kids[0].token
        word = noun_tok.surface
        if word in NOUN_COMPLEMENT:
            complement = self.clause(kids[1])
            return noun_complement_template(NOUN_COMPLEMENT[word], complement)
        base = INFLECTED.get(word, word)
        if base not in NOUNS:
            raise ParseError(noun_tok.position, "a noun")
        return noun_template(base)

    def vp(self, tree: ParseTree) -> Term:
        kids = tree.children
        verb_tok = kids[0].token
        base = INFLECTED.get(verb_tok.surface, verb_tok.surface)
        if base in INTRANSITIVE:
            return intransitive_template(base)
        if base in TRANSITIVE:
            obj = self.np(kids[1])
            return beta_reduce(App(transitive_template(base), obj))
        if base in PROPERTY_COMPLEMENT_VERBS:
            obj = self.np(kids[1])
            vpe_tok = kids[2].token
            reg = self._resolve(vpe_tok, RegisterKind.PROPERTY)
            self.vpe_uses.append(VpeUse(vpe_tok, reg))
            return beta_reduce(App(App(property_complement_template(base), RegRef(reg)), obj))
        raise ParseError(verb_tok.position, "a verb")


def compose_tree(tree: ParseTree, ctx: ComposeContext) -> ComposeResult:
    """Compose an utterance parse tree into a normalized term.

    Resolution follows surface order: registers introduced earlier in the
    same utterance are visible to later anaphors, as is the context in
    ``ctx``.  The result is beta-normal apart from register applications
    still awaiting definition substitution.
    """
    composer = _Composer(ctx)
    term = composer.utterance(tree)
    return ComposeResult(
        term=beta_reduce(term),
        pronouns=composer.pronouns,
        vpe_uses=composer.vpe_uses,
        center_established=composer.center_established,
    )


def compose_line(line: str, ctx: ComposeContext) -> ComposeResult:
    return compose_tree(parse_utterance(tokenize(line)), ctx)
