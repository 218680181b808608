"""Extended belief state: data model, text-span grammar, gold-label extension.

A belief state is a set of domain-slot-value triples plus an optional topic
word sequence. The reserved slot ``ruk`` marks a turn that needs free-text
knowledge; its value names the entity of interest, and the topic words
abstract what the user asked about.

Span grammar (normative for corpus files and CLI I/O)::

    span   := block* topic?
    block  := DOMAIN '{' pair (',' pair)* '}'
    pair   := SLOT... '=' VALUE...
    topic  := '||' WORD...

All delimiters are whitespace-separated tokens; ``{ } , = ||`` are reserved
and cannot appear inside names or values. Canonical order is: domains in
first-mention order, slots alphabetical within their domain with ``ruk``
last, topic words in given order. A repeated (domain, slot) pair keeps the
last occurrence.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

from .errors import EvaluationError, LabelError, ParseError
from .text import normalize

RUK_SLOT = "ruk"

_RESERVED = {"{", "}", ",", "=", "||"}
TOPIC_SEPARATOR = "||"


@dataclass(frozen=True)
class DsvTriple:
    domain: str
    slot: str
    value: str


@dataclass(frozen=True)
class ExtendedBeliefState:
    triples: tuple[DsvTriple, ...] = ()
    topic: tuple[str, ...] = ()

    def domains(self) -> tuple[str, ...]:
        seen = []
        for t in self.triples:
            if t.domain not in seen:
                seen.append(t.domain)
        return tuple(seen)

    def constraints(self) -> dict[str, dict[str, str]]:
        """Non-ruk triples grouped by domain, in canonical order."""
        grouped: dict[str, dict[str, str]] = {}
        for t in self.triples:
            if t.slot != RUK_SLOT:
                grouped.setdefault(t.domain, {})[t.slot] = t.value
        return grouped

    def ruk_triple(self) -> DsvTriple | None:
        for t in self.triples:
            if t.slot == RUK_SLOT:
                return t
        return None

    def has_ruk(self) -> bool:
        return self.ruk_triple() is not None

    def non_ruk_triples(self) -> frozenset[DsvTriple]:
        return frozenset(t for t in self.triples if t.slot != RUK_SLOT)

    def without_extension(self) -> "ExtendedBeliefState":
        """Drop the ruk triples and the topic, recovering the original state."""
        return ExtendedBeliefState(
            triples=tuple(t for t in self.triples if t.slot != RUK_SLOT), topic=())


def make_state(triples: Iterable[DsvTriple | tuple[str, str, str]],
               topic: Iterable[str] = ()) -> ExtendedBeliefState:
    """Build a canonical state: normalized fields, deduplicated, ordered.

    A repeated (domain, slot) keeps its last value. A nonempty topic
    requires a ruk triple.
    """
    latest: dict[tuple[str, str], str] = {}
    domain_order: list[str] = []
    for item in triples:
        domain, slot, value = (item.domain, item.slot, item.value) \
            if isinstance(item, DsvTriple) else item
        domain, slot, value = normalize(domain), normalize(slot), normalize(value)
        if not (domain and slot and value):
            raise ValueError("belief triples need nonempty domain, slot and value")
        if domain not in domain_order:
            domain_order.append(domain)
        latest[(domain, slot)] = value
    ordered = []
    for domain in domain_order:
        slots = sorted((s for d, s in latest if d == domain),
                       key=lambda s: (s == RUK_SLOT, s))
        ordered.extend(DsvTriple(domain, s, latest[(domain, s)]) for s in slots)
    topic_tokens = tuple(normalize(t) for t in topic if normalize(t))
    state = ExtendedBeliefState(triples=tuple(ordered), topic=topic_tokens)
    if state.topic and not state.has_ruk():
        raise ValueError("a topic requires a ruk triple")
    return state


EMPTY_STATE = ExtendedBeliefState()


def serialize_belief(state: ExtendedBeliefState) -> str:
    """Render a state as its canonical text span (empty state gives '')."""
    blocks = []
    for domain, pairs in _grouped(state):
        inner = " , ".join(f"{slot} = {value}" for slot, value in pairs)
        blocks.append(f"{domain} {{ {inner} }}")
    out = " ".join(blocks)
    if state.topic:
        out = f"{out} {TOPIC_SEPARATOR} {' '.join(state.topic)}" if out \
            else f"{TOPIC_SEPARATOR} {' '.join(state.topic)}"
    return out


def _grouped(state: ExtendedBeliefState) -> list[tuple[str, list[tuple[str, str]]]]:
    groups: list[tuple[str, list[tuple[str, str]]]] = []
    for t in state.triples:
        if not groups or groups[-1][0] != t.domain:
            groups.append((t.domain, []))
        groups[-1][1].append((t.slot, t.value))
    return groups


class _Tokens:
    """Whitespace tokens of a span with their byte offsets."""

    def __init__(self, text: str):
        self.items = [(m.group(0), len(text[:m.start()].encode("utf-8")))
                      for m in re.finditer(r"\S+", text)]
        self.pos = 0
        self.end_offset = len(text.encode("utf-8"))

    def peek(self) -> str | None:
        return self.items[self.pos][0] if self.pos < len(self.items) else None

    def offset(self) -> int:
        return self.items[self.pos][1] if self.pos < len(self.items) else self.end_offset

    def take(self) -> str:
        token = self.items[self.pos][0]
        self.pos += 1
        return token


def _take_words(toks: _Tokens, stop: set[str], what: str) -> str:
    words = []
    while toks.peek() is not None and toks.peek() not in _RESERVED:
        words.append(toks.take())
    if not words:
        found = toks.peek()
        raise ParseError(f"empty {what}" if found in stop or found is None
                         else f"expected {what}, found '{found}'", toks.offset())
    return " ".join(words)


def parse_belief_span(text: str) -> ExtendedBeliefState:
    """Parse a belief span; inverse of :func:`serialize_belief` on its image.

    Tolerates repeated whitespace. Raises :class:`ParseError` with a byte
    offset on malformed input (unbalanced braces, missing ``=``, empty
    values, stray tokens outside a ``||`` topic segment).
    """
    toks = _Tokens(text)
    triples: list[tuple[str, str, str]] = []
    topic: list[str] = []
    while toks.peek() is not None and toks.peek() != TOPIC_SEPARATOR:
        domain = _take_words(toks, {"{"}, "domain name")
        if toks.peek() != "{":
            raise ParseError(f"expected '{{' after domain '{domain}'", toks.offset())
        toks.take()
        while toks.peek() != "}":
            if toks.peek() is None:
                raise ParseError("unbalanced braces: missing '}'", toks.offset())
            slot = _take_words(toks, {"="}, "slot name")
            if toks.peek() != "=":
                raise ParseError(f"missing '=' after slot '{slot}'", toks.offset())
            toks.take()
            value = _take_words(toks, {",", "}"}, "value")
            triples.append((domain, slot, value))
            if toks.peek() == ",":
                toks.take()
                if toks.peek() == "}":
                    raise ParseError("trailing ',' before '}'", toks.offset())
        toks.take()
    if toks.peek() == TOPIC_SEPARATOR:
        toks.take()
        if toks.peek() is None:
            raise ParseError("empty topic segment", toks.offset())
        while toks.peek() is not None:
            token = toks.take()
            if token in _RESERVED:
                raise ParseError(f"reserved token '{token}' in topic", toks.offset())
            topic.append(token)
    try:
        return make_state(triples, topic)
    except ValueError as exc:
        raise ParseError(str(exc), toks.end_offset) from exc


def extend_gold_label(original: ExtendedBeliefState,
                      doc_annotation: tuple[str, str, str] | None,
                      index) -> ExtendedBeliefState:
    """Extend a gold state with the annotated document's entity and topics.

    Adds the ``(domain, ruk, entity)`` triple and sets the topic to the
    document's indexed topic words; the original triples are untouched. A
    missing annotation returns the state unchanged; replaces any previous
    extension, so the operation is idempotent for a fixed annotation.
    """
    if doc_annotation is None:
        return original
    domain, entity, doc_id = doc_annotation
    topics = index.topics(domain, entity, doc_id)
    if topics is None:
        raise LabelError(
            f"annotated document ({domain!r}, {entity!r}, {doc_id!r}) is not in the index")
    base = original.without_extension()
    return make_state(base.triples + (DsvTriple(domain, RUK_SLOT, entity),), topics)


def joint_goal_match(pred: ExtendedBeliefState, gold: ExtendedBeliefState) -> bool:
    """Exact match of the non-ruk triple sets; extension and topic ignored."""
    return pred.non_ruk_triples() == gold.non_ruk_triples()


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


def _prf(correct: int, predicted: int, gold: int) -> PRF:
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return PRF(p, r, f1)


def extended_prf(preds: Sequence[ExtendedBeliefState],
                 golds: Sequence[ExtendedBeliefState]) -> dict[str, PRF]:
    """Precision/recall/F1 (as fractions) of the ruk triple and the topic.

    A ruk prediction counts as correct when its (domain, value) pair equals
    the gold ruk triple; a topic prediction counts when the predicted token
    set equals the gold set. Undefined precision or recall reports as 0.
    """
    if len(preds) != len(golds):
        raise EvaluationError(
            f"prediction/gold length mismatch ({len(preds)} vs {len(golds)})")
    ruk_correct = ruk_pred = ruk_gold = 0
    top_correct = top_pred = top_gold = 0
    for pred, gold in zip(preds, golds):
        p_ruk, g_ruk = pred.ruk_triple(), gold.ruk_triple()
        ruk_pred += p_ruk is not None
        ruk_gold += g_ruk is not None
        if p_ruk is not None and g_ruk is not None \
                and (p_ruk.domain, p_ruk.value) == (g_ruk.domain, g_ruk.value):
            ruk_correct += 1
        top_pred += bool(pred.topic)
        top_gold += bool(gold.topic)
        if pred.topic and gold.topic and set(pred.topic) == set(gold.topic):
            top_correct += 1
    return {
        "ruk": _prf(ruk_correct, ruk_pred, ruk_gold),
        "topic": _prf(top_correct, top_pred, top_gold),
    }


@dataclass(frozen=True)
class DialogContext:
    """Alternating (speaker, text) turns ending with a user utterance."""

    utterances: tuple[tuple[str, str], ...]
    window: int | None = None

    def __post_init__(self):
        if not self.utterances or self.utterances[-1][0] != "user":
            raise ValueError("context must end with a user utterance")

    def latest_user(self) -> str:
        return self.utterances[-1][1]

    def windowed(self) -> tuple[tuple[str, str], ...]:
        """The last ``window`` exchanges plus the current user utterance."""
        if self.window is None:
            return self.utterances
        keep = 2 * self.window + 1
        return self.utterances[-keep:]
