"""Sequential discourse processing: center tracking, definition substitution,
constraint checking, full derivations, and strict/sloppy reading pairs.

Each utterance composes to a term, definitions recorded so far are
substituted into its condition-level register applications (never into
defining equations, which is what keeps stored meanings re-evaluable after a
center shift), the result is beta-reduced, and its boxes are folded into the
running program.  A box that (re)introduces the center register is never
merged past an earlier occurrence, so every center shift leaves a sequencing
boundary behind.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    App,
    Box,
    BoxLit,
    DoubleIntroduction,
    EngineError,
    Eq,
    KindMismatch,
    Lam,
    NoDefinition,
    RegRef,
    Register,
    RegisterKind,
    Term,
    UnresolvedAnaphor,
    preg,
    ureg,
    xreg,
    is_seq_app,
    seq_parts,
)
from .drt import BoxProgram, merge, registers_in_box, registers_in_term
from .fragment import (
    ComposeContext,
    GENITIVE_PRONOUNS,
    INFLS,
    INFLECTED,
    INTRANSITIVE,
    NOUNS,
    NOUN_COMPLEMENT,
    PERSON_PRONOUNS,
    PRONOUNS,
    PROPERTY_COMPLEMENT_VERBS,
    TRANSITIVE,
    Token,
    compose_tree,
    parse_utterance,
    tokenize,
)
from .typelogic import beta_reduce, condition_terms, map_condition


class Transition(enum.Enum):
    ESTABLISH = "Establish"
    CONTINUATION = "Continuation"
    SHIFT = "Shift"


@dataclass(frozen=True)
class Violation:
    kind: str  # NoCenter | NoPronounOnCenter
    utterance: int

    def __str__(self):
        return f"{self.kind}@{self.utterance}"


class ConstraintViolationError(EngineError):
    def __init__(self, violations):
        self.violations = list(violations)
        inner = ", ".join(str(v) for v in self.violations)
        super().__init__(f"centering constraints violated: {inner}")


@dataclass(frozen=True)
class IntroRecord:
    utterance: int
    defining: Optional[Eq]


@dataclass
class DiscourseState:
    """Registers in play, their defining equations, and the center link."""

    introduced: dict = field(default_factory=dict)  # (kind, index) -> IntroRecord
    center: Optional[Register] = None  # the register the center is linked to
    definitions: dict = field(default_factory=dict)  # Register -> [(utt, Term)]
    history: list = field(default_factory=list)

    def copy(self) -> "DiscourseState":
        return DiscourseState(
            dict(self.introduced),
            self.center,
            {k: list(v) for k, v in self.definitions.items()},
            list(self.history),
        )

    def known_keys(self) -> set:
        return set(self.introduced)


def resolve_anaphor(kind: RegisterKind, index, ds: DiscourseState, star: bool = False) -> Register:
    """Resolve an anaphor to its register; ``star`` means the center."""
    if star:
        if ds.center is None:
            raise UnresolvedAnaphor(kind, None)
        if ds.center.kind != kind:
            raise KindMismatch(kind, 0, Register(ds.center.kind, 0))
        return Register(kind, 0)
    if kind == RegisterKind.ENTITY and (RegisterKind.DYNAMIC, index) in ds.introduced:
        return xreg(index)
    if (kind, index) in ds.introduced:
        return Register(kind, index)
    for other in RegisterKind:
        if other != kind and (other, index) in ds.introduced:
            raise KindMismatch(kind, index, Register(other, index))
    raise UnresolvedAnaphor(kind, index)


def lookup_definition(reg: Register, source) -> Term:
    """Most recent defining equation right-hand side for a register."""
    if isinstance(source, Derivation):
        defs = source.state.definitions
    elif isinstance(source, DiscourseState):
        defs = source.definitions
    else:
        defs = source
    entries = defs.get(reg)
    if not entries:
        raise NoDefinition(reg)
    return entries[-1][1]


# ---------------------------------------------------------------------------
# Definition substitution


_EXPANSION_CAP = 200


def _latest(defs: dict, reg: Register) -> Optional[Term]:
    entries = defs.get(reg)
    return entries[-1][1] if entries else None


def _expand_once(t: Term, defs: dict):
    if isinstance(t, App):
        fn, c1 = _expand_once(t.fn, defs)
        arg, c2 = _expand_once(t.arg, defs)
        t2 = App(fn, arg)
        head = t2
        while isinstance(head, App):
            head = head.fn
        if isinstance(head, RegRef) and head.reg.kind != RegisterKind.ENTITY:
            d = _latest(defs, head.reg)
            if d is not None:
                return _replace_head(t2, d), True
        return t2, c1 or c2
    if isinstance(t, Lam):
        body, ch = _expand_once(t.body, defs)
        return Lam(t.var, body), ch
    if isinstance(t, BoxLit):
        changed = False
        conds = []
        for c in t.box.conditions:
            if isinstance(c, Eq):
                conds.append(c)
                continue

            def sub_expand(sub):
                nonlocal changed
                sub2, ch = _expand_once(sub, defs)
                changed = changed or ch
                return sub2

            conds.append(map_condition(c, sub_expand))
        return BoxLit(Box(t.box.universe, conds)), changed
    return t, False


def _replace_head(t: Term, replacement: Term) -> Term:
    if isinstance(t, App):
        return App(_replace_head(t.fn, replacement), t.arg)
    return replacement


def expand_definitions(t: Term, defs: dict) -> Term:
    """Substitute stored meanings into register applications, innermost
    antecedent next, and beta-reduce; defining equations stay untouched."""
    for _ in range(_EXPANSION_CAP):
        t, changed = _expand_once(t, defs)
        t = beta_reduce(t)
        if not changed:
            return t
    raise EngineError("definition expansion did not terminate")


# ---------------------------------------------------------------------------
# Derivation records


@dataclass
class UtteranceRecord:
    number: int
    text: str
    term: Term
    transition: Transition
    violations: list
    merged_with_previous: bool
    leaf_range: tuple
    center: Optional[Register]
    pronouns: list
    vpe_uses: list


@dataclass
class Derivation:
    program: BoxProgram
    utterances: list
    state: DiscourseState
    reading_info: Optional[dict] = None

    @property
    def transitions(self) -> list:
        return [u.transition for u in self.utterances]


# ---------------------------------------------------------------------------
# Utterance processing


def _record_definitions(box: Box, utt_no: int, defs: dict):
    for c in box.conditions:
        if isinstance(c, Eq):
            defs.setdefault(c.lhs, []).append((utt_no, c.rhs))


def _expand_box_conditions(box: Box, defs: dict) -> Box:
    conds = []
    for c in box.conditions:
        if isinstance(c, Eq):
            conds.append(c)
        else:
            conds.append(map_condition(c, lambda sub: expand_definitions(sub, defs)))
    return Box(box.universe, conds)


def _flatten(term: Term) -> list:
    return seq_parts(term) if is_seq_app(term) else [term]


def _expand_leaves(parts, utt_no: int, defs: dict) -> list:
    """Expand pending applications and condition-level applications, leaf by
    leaf, registering defining equations as they appear."""
    out = []
    for part in parts:
        if isinstance(part, BoxLit):
            _record_definitions(part.box, utt_no, defs)
            box = _expand_box_conditions(part.box, defs)
            if out:
                merged = merge(out[-1], box)
                if merged is not None:
                    out[-1] = merged
                    continue
            out.append(box)
        else:
            expanded = expand_definitions(part, defs)
            if expanded == part:
                head = part
                while isinstance(head, App):
                    head = head.fn
                if isinstance(head, RegRef):
                    raise NoDefinition(head.reg)
                raise EngineError(f"cannot reduce program leaf: {part!r}")
            out.extend(_expand_leaves(_flatten(expanded), utt_no, defs))
    return out


def process_utterance(ds: DiscourseState, term: Term):
    """Record a composed utterance's registers and classify the transition.

    Pure: returns a new state and the transition.  Intended for terms whose
    definitions are already substituted; pending applications contribute no
    introductions.
    """
    ds2 = ds.copy()
    utt_no = len(ds.history) + 1
    leaves = [p.box for p in _flatten(term) if isinstance(p, BoxLit)]
    transition = _record_utterance(ds2, leaves, utt_no)
    ds2.history.append((utt_no, transition))
    return ds2, transition


def _record_utterance(ds: DiscourseState, leaves, utt_no: int) -> Transition:
    before = ds.center
    seen = set()
    new_center = None
    for box in leaves:
        eq_by_reg = {}
        for c in box.conditions:
            if isinstance(c, Eq):
                eq_by_reg.setdefault(c.lhs, c)
        for reg in box.universe:
            key = (reg.kind, reg.index)
            if key in seen and not reg.is_center:
                raise DoubleIntroduction(reg)
            if key in seen and reg.is_center:
                raise DoubleIntroduction(reg)
            seen.add(key)
            ds.introduced[key] = IntroRecord(utt_no, eq_by_reg.get(reg))
            if reg.is_center:
                link = eq_by_reg.get(reg)
                if link is not None and isinstance(link.rhs, RegRef):
                    new_center = link.rhs.reg
        _record_definitions(box, utt_no, ds.definitions)
    if new_center is not None:
        ds.center = new_center
    if utt_no == 1:
        return Transition.ESTABLISH
    if ds.center == before:
        return Transition.CONTINUATION
    return Transition.SHIFT


# ---------------------------------------------------------------------------
# Centering constraints


def _dynamic_mentions_center(reg: Register, defs: dict) -> bool:
    d = _latest(defs, reg)
    if d is None:
        return False
    return any(r.is_center for r in registers_in_term(d))


def check_centering_constraints(record: UtteranceRecord, ds: DiscourseState) -> list:
    """Both constraints; violations are values, never faults.

    A non-initial utterance must have a center.  When the center is an
    entity, an utterance containing pronouns must have at least one pronoun
    referring to it (a dynamic-individual pronoun whose stored meaning reads
    the center counts).
    """
    violations = []
    if record.number > 1 and ds.center is None:
        violations.append(Violation("NoCenter", record.number))
    if record.pronouns and ds.center is not None and ds.center.kind == RegisterKind.ENTITY:
        def refers(use) -> bool:
            reg = use.resolved
            if reg.is_center:
                return True
            if reg == ds.center:
                return True
            if reg.kind == RegisterKind.DYNAMIC:
                return _dynamic_mentions_center(reg, ds.definitions)
            return False

        if not any(refers(u) for u in record.pronouns):
            violations.append(Violation("NoPronounOnCenter", record.number))
    return violations


# ---------------------------------------------------------------------------
# Program assembly


def _center_regs(box: Box):
    return [r for r in box.universe if r.is_center]


def _fold_program(leaves: list, new_box: Box) -> bool:
    """Append ``new_box``, merging into the last leaf when sound.

    Merging follows the binary merging rule, except that a box reintroducing
    the center register never merges past any earlier occurrence of it: the
    center is a discourse-level object and its reassignment must stay visible
    as a sequencing boundary.
    """
    if leaves:
        blocked = False
        for creg in _center_regs(new_box):
            if any(creg in registers_in_box(prev) for prev in leaves):
                blocked = True
                break
        if not blocked:
            merged = merge(leaves[-1], new_box)
            if merged is not None:
                leaves[-1] = merged
                return True
    leaves.append(new_box)
    return False


# ---------------------------------------------------------------------------
# Dynamic-route inference


def _genitive_possessed_indices(lines_tokens) -> set:
    out = set()
    for tokens in lines_tokens:
        for i, tok in enumerate(tokens):
            if tok.surface in GENITIVE_PRONOUNS and i + 1 < len(tokens):
                noun = tokens[i + 1]
                if (noun.surface in NOUNS or noun.surface in NOUN_COMPLEMENT) and noun.index is not None:
                    out.add(noun.index)
    return out


def _pronoun_indices(lines_tokens) -> set:
    out = set()
    for tokens in lines_tokens:
        for i, tok in enumerate(tokens):
            if tok.surface in PRONOUNS and tok.index is not None:
                nxt = tokens[i + 1] if i + 1 < len(tokens) else None
                heads_genitive = (
                    tok.surface in GENITIVE_PRONOUNS
                    and nxt is not None
                    and (nxt.surface in NOUNS or nxt.surface in NOUN_COMPLEMENT)
                )
                if not heads_genitive:
                    out.add(tok.index)
    return out


def infer_dynamic_indices(lines_tokens) -> frozenset:
    """A genitive takes the dynamic-individual route exactly when a pronoun
    somewhere in the discourse picks up the possessed index."""
    return frozenset(_genitive_possessed_indices(lines_tokens) & _pronoun_indices(lines_tokens))


# ---------------------------------------------------------------------------
# Full derivation


def derive_discourse(lines, policy: str = "warn", dynamic_indices=None) -> Derivation:
    """Compose, resolve, sequence, substitute and classify a whole discourse.

    ``policy`` is ``warn`` (violations recorded) or ``strict`` (violations
    abort).  ``dynamic_indices`` overrides the lookahead inference of which
    genitives introduce dynamic individuals.
    """
    if isinstance(lines, str):
        lines = [ln for ln in lines.splitlines()]
    lines = [ln for ln in lines if ln.strip() and not ln.strip().startswith("#")]
    lines_tokens = [tokenize(ln) for ln in lines]
    if dynamic_indices is None:
        dynamic_indices = infer_dynamic_indices(lines_tokens)
    else:
        dynamic_indices = frozenset(dynamic_indices)

    ds = DiscourseState()
    leaves: list = []
    records: list = []
    for utt_no, (line, tokens) in enumerate(zip(lines, lines_tokens), start=1):
        try:
            tree = parse_utterance(tokens)
            ctx = ComposeContext(ds.known_keys(), ds.center, dynamic_indices)
            res = compose_tree(tree, ctx)
            expanded = _expand_leaves(_flatten(res.term), utt_no, ds.definitions)
        except EngineError as err:
            raise type(err)(*err.args) from err if not hasattr(err, "utterance") else err
        transition = _record_utterance(ds, expanded, utt_no)

        start = len(leaves)
        merged_boundary = False
        for k, box in enumerate(expanded):
            merged = _fold_program(leaves, box)
            if k == 0:
                merged_boundary = merged and start > 0
        record = UtteranceRecord(
            number=utt_no,
            text=line.strip(),
            term=res.term,
            transition=transition,
            violations=[],
            merged_with_previous=merged_boundary,
            leaf_range=(start if not merged_boundary else start - 1, len(leaves)),
            center=ds.center,
            pronouns=res.pronouns,
            vpe_uses=res.vpe_uses,
        )
        record.violations = check_centering_constraints(record, ds)
        ds.history.append((utt_no, transition))
        records.append(record)
        if policy == "strict" and record.violations:
            raise ConstraintViolationError(record.violations)

    return Derivation(BoxProgram(tuple(leaves)), records, ds)


# ---------------------------------------------------------------------------
# Strict/sloppy reading pairs


@dataclass
class ReadingPair:
    site: tuple
    yp_token: Token
    controller_index: Optional[int]
    sloppy_lines: list
    strict_lines: list
    sloppy: Derivation
    strict: Derivation
    equivalent: bool
    dynamic_antecedent: bool


def _rewrite_token(tok: Token, *, star: bool, index) -> str:
    suffix = f"_{index}" if index is not None else ""
    if star and index is None:
        suffix = "_*"
    elif star:
        suffix += "*"
    text = f"{tok.surface}{suffix}"
    return f"[{text}]" if tok.bracketed else text


def _line_with_replacement(tokens, position: int, replacement: str) -> str:
    parts = []
    for tok in tokens:
        if tok.position == position:
            parts.append(replacement)
        else:
            parts.append(repr(tok))
    return " ".join(parts)


def _is_anaphoric_token(tok: Token) -> bool:
    if tok.bracketed:
        return False
    if tok.surface in PRONOUNS or tok.surface in GENITIVE_PRONOUNS:
        return True
    if tok.surface in PERSON_PRONOUNS:
        return tok.star or tok.index is not None
    if tok.surface in INFLS:
        return tok.index is not None or tok.star
    return False


def _find_introducing_span(lines_tokens, kind: RegisterKind, index: int):
    """Utterance and token range where a register's introducer sits."""
    for u, tokens in enumerate(lines_tokens):
        for i, tok in enumerate(tokens):
            if kind == RegisterKind.PROPERTY and tok.surface in INFLS and tok.index == index:
                nxt = tokens[i + 1] if i + 1 < len(tokens) else None
                introducing = nxt is not None and not nxt.bracketed and (
                    nxt.surface in __import__("centershift.fragment", fromlist=["INFLECTED"]).INFLECTED
                    or nxt.surface in __import__("centershift.fragment", fromlist=["INTRANSITIVE"]).INTRANSITIVE
                    or nxt.surface in __import__("centershift.fragment", fromlist=["TRANSITIVE"]).TRANSITIVE
                    or nxt.surface == "want"
                    or nxt.surface == "NOT"
                )
                if introducing:
                    return u, i
            if kind != RegisterKind.PROPERTY and tok.index == index:
                if tok.surface in GENITIVE_PRONOUNS and i + 1 < len(tokens):
                    continue  # possessor index, not an introducer
                noun_like = tok.surface in NOUNS or tok.surface in NOUN_COMPLEMENT
                if noun_like and i > 0 and tokens[i - 1].surface in GENITIVE_PRONOUNS:
                    return u, i - 1  # the genitive construction introduces it
    return None


def _clause_anaphor(lines_tokens, utt: int, start: int, center_index):
    """The center-controlled anaphor in the span starting after ``start``."""
    tokens = lines_tokens[utt]
    best = None
    for tok in tokens[start + 1:]:
        if tok.bracketed:
            break
        if not _is_anaphoric_token(tok):
            continue
        if tok.star and tok.index is None:
            return tok
        if center_index is not None and tok.index == center_index:
            best = best or tok
    return best


def enumerate_readings(lines, site, policy: str = "warn") -> ReadingPair:
    """Build the sloppy/strict derivation pair for an anaphoric site.

    ``site`` is (utterance, token position), 1-based.  The sloppy variant
    star-annotates the controlled anaphor; the strict variant pins it to the
    controller's own register.  When the site is an outer proform (``it_3``,
    ``does_2``), the toggled token is the anaphor embedded in its
    antecedent's introducing phrase.
    """
    from .core import NotAnAnaphoricSite

    if isinstance(lines, str):
        lines = [ln for ln in lines.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    lines = list(lines)
    lines_tokens = [tokenize(ln) for ln in lines]
    u, pos = site[0] - 1, site[1]
    if u < 0 or u >= len(lines_tokens):
        raise NotAnAnaphoricSite(f"utterance {site[0]} out of range")
    try:
        tok = next(t for t in lines_tokens[u] if t.position == pos)
    except StopIteration:
        raise NotAnAnaphoricSite(f"no token at {site[0]}:{site[1]}")
    if not _is_anaphoric_token(tok):
        raise NotAnAnaphoricSite(f"token {tok!r} is not an anaphor")

    base = derive_discourse(lines, policy=policy)
    dynamic_antecedent = False

    yp_u, yp_tok = u, tok
    if tok.surface in PRONOUNS and tok.index is not None:
        key_dyn = (RegisterKind.DYNAMIC, tok.index)
        dynamic_antecedent = key_dyn in base.state.introduced
        span = _find_introducing_span(lines_tokens, RegisterKind.ENTITY, tok.index)
        if span is not None:
            yp_u = span[0]
            center_idx = _center_index_at(base, yp_u)
            inner = lines_tokens[yp_u][span[1]]
            if _is_anaphoric_token(inner):
                yp_tok = inner
    elif tok.surface in INFLS:
        introducing = _find_introducing_span(lines_tokens, RegisterKind.PROPERTY, tok.index) if tok.index is not None else None
        here = (u, next(i for i, t in enumerate(lines_tokens[u]) if t.position == pos))
        if introducing is not None and introducing != here:
            yp_u = introducing[0]
            center_idx = _center_index_at(base, yp_u)
            inner = _clause_anaphor(lines_tokens, yp_u, introducing[1], center_idx)
            if inner is not None:
                yp_tok = inner

    controller = _center_index_at(base, yp_u)
    if yp_tok.star and yp_tok.index is None and controller is None:
        raise NotAnAnaphoricSite("no center to control the sloppy variable")

    strict_index = yp_tok.index if yp_tok.index is not None else controller
    sloppy_repl = _rewrite_token(yp_tok, star=True, index=None)
    strict_repl = _rewrite_token(yp_tok, star=False, index=strict_index)

    sloppy_lines = list(lines)
    strict_lines = list(lines)
    sloppy_lines[yp_u] = _line_with_replacement(lines_tokens[yp_u], yp_tok.position, sloppy_repl)
    strict_lines[yp_u] = _line_with_replacement(lines_tokens[yp_u], yp_tok.position, strict_repl)

    sloppy = derive_discourse(sloppy_lines, policy=policy)
    strict = derive_discourse(strict_lines, policy=policy)

    from .drt import canonical_text

    equivalent = canonical_text(sloppy.program) == canonical_text(strict.program)
    info = {
        "site": site,
        "yp": repr(yp_tok),
        "controller": controller,
        "dynamic_antecedent": dynamic_antecedent,
    }
    sloppy.reading_info = dict(info, annotation=sloppy_repl, reading="sloppy")
    strict.reading_info = dict(info, annotation=strict_repl, reading="strict")
    return ReadingPair(
        site=tuple(site),
        yp_token=yp_tok,
        controller_index=controller,
        sloppy_lines=sloppy_lines,
        strict_lines=strict_lines,
        sloppy=sloppy,
        strict=strict,
        equivalent=equivalent,
        dynamic_antecedent=dynamic_antecedent,
    )


def _center_index_at(derivation: Derivation, utt_zero_based: int):
    record = derivation.utterances[utt_zero_based]
    if record.center is not None:
        return record.center.index
    return None
