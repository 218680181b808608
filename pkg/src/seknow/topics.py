"""Topic index construction: TF-IDF candidates filtered by cumulative-average score.

Each document gets one to three topic words that serve as its retrieval
index. Per domain, the top three tokens by TF-IDF are taken as candidates;
a candidate survives when its cumulative average score (the sum of its
TF-IDF scores over every document where it is a candidate, divided by the
number of entities in the domain) clears the domain threshold. Documents
whose candidates are all filtered out keep their single best candidate so
every document ends up with at least one topic word.

TF-IDF here is the unsmoothed textbook form: raw term count times
``ln(N / df)`` with ``N`` the number of documents in the domain and ``df``
the number of those documents containing the token. Title tokens are
prepended to the body's token stream.
"""

from __future__ import annotations

import json
import math
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace

from .errors import ConfigError, IndexingError, LoadError
from .kb import KnowledgeBase
from .text import stopwords_digest, tokenize

# Per-domain filter thresholds: restaurant, hotel, taxi, train.
DEFAULT_THRESHOLDS: dict[str, float] = {
    "restaurant": 2.3,
    "hotel": 2.7,
    "taxi": 6.9,
    "train": 7.3,
}

MAX_TOPICS = 3

DocKey = tuple[str, str, str]  # (domain, entity_id, doc_id)


@dataclass(frozen=True)
class TopicWord:
    token: str
    tfidf: float
    ca_tfidf: float = 0.0
    survived_filter: bool = False


@dataclass(frozen=True)
class TopicIndex:
    entries: dict[DocKey, tuple[TopicWord, ...]]
    thresholds: dict[str, float]
    stopwords_sha256: str = ""

    def topics(self, domain: str, entity_id: str, doc_id: str) -> tuple[str, ...] | None:
        entry = self.entries.get((domain, entity_id, doc_id))
        if entry is None:
            return None
        return tuple(tw.token for tw in entry)

    def docs_for_entity(self, domain: str, entity_id: str) -> list[tuple[str, tuple[str, ...]]]:
        """(doc_id, topic words) pairs for one entity, ascending by doc_id."""
        found = [
            (key[2], tuple(tw.token for tw in words))
            for key, words in self.entries.items()
            if key[0] == domain and key[1] == entity_id
        ]
        return sorted(found)


def compute_tfidf(doc_tokens: Mapping) -> dict[tuple[object, str], float]:
    """Score every (document, token) pair of one domain.

    ``doc_tokens`` maps an opaque document key to its token stream. The
    score is ``tf * ln(N / df)`` with raw counts; a token present in every
    document scores zero.
    """
    n_docs = len(doc_tokens)
    df: dict[str, int] = {}
    for tokens in doc_tokens.values():
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    scores: dict[tuple[object, str], float] = {}
    for key, tokens in doc_tokens.items():
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for token, tf in counts.items():
            scores[(key, token)] = tf * math.log(n_docs / df[token])
    return scores


def extract_candidates(tokens: Sequence[str], scores: Mapping[str, float]) -> list[TopicWord]:
    """Top three tokens of one document by TF-IDF.

    Ties break by earlier first occurrence in the token stream, then
    lexicographically. Cumulative scores and the filter flag are filled in
    later by :func:`build_topic_index`.
    """
    if not tokens:
        raise IndexingError("document has no usable tokens")
    first_pos = {}
    for pos, token in enumerate(tokens):
        first_pos.setdefault(token, pos)
    ranked = sorted(first_pos, key=lambda t: (-scores.get(t, 0.0), first_pos[t], t))
    return [TopicWord(token=t, tfidf=scores.get(t, 0.0)) for t in ranked[:MAX_TOPICS]]


def compute_ca_tfidf(candidates: Mapping[object, Sequence[TopicWord]],
                     entity_count: int) -> dict[str, float]:
    """Cumulative average score per candidate token of one domain.

    Sums the TF-IDF score of each occurrence of a token across every
    document's candidate list and divides by the number of entities in the
    domain (not the number of documents).
    """
    if entity_count < 1:
        raise ConfigError("entity_count must be at least 1")
    totals: dict[str, float] = {}
    for words in candidates.values():
        for tw in words:
            totals[tw.token] = totals.get(tw.token, 0.0) + tw.tfidf
    return {token: total / entity_count for token, total in totals.items()}


def build_topic_index(kb: KnowledgeBase,
                      thresholds: Mapping[str, float] | None = None,
                      stopwords: frozenset[str] | None = None) -> TopicIndex:
    """Index every document of the knowledge base with 1-3 topic words.

    ``thresholds`` must cover every domain that has documents; it defaults
    to :data:`DEFAULT_THRESHOLDS`.
    """
    if thresholds is None:
        thresholds = DEFAULT_THRESHOLDS
    entries: dict[DocKey, tuple[TopicWord, ...]] = {}
    for dom_name, domain in kb.domains.items():
        doc_tokens: dict[tuple[str, str], list[str]] = {}
        for ent in domain.entities:
            for doc in ent.documents:
                stream = tokenize(doc.title, stopwords) + tokenize(doc.body, stopwords)
                doc_tokens[(ent.id, doc.doc_id)] = stream
        if not doc_tokens:
            continue
        if dom_name not in thresholds:
            raise ConfigError(f"no topic threshold configured for domain '{dom_name}'")
        threshold = thresholds[dom_name]

        scores = compute_tfidf(doc_tokens)
        candidates: dict[tuple[str, str], list[TopicWord]] = {}
        for key, tokens in doc_tokens.items():
            per_doc = {tok: val for (k, tok), val in scores.items() if k == key}
            try:
                candidates[key] = extract_candidates(tokens, per_doc)
            except IndexingError as exc:
                raise IndexingError(
                    f"domain '{dom_name}' entity '{key[0]}' document '{key[1]}': "
                    f"{exc.detail}") from exc
        ca = compute_ca_tfidf(candidates, entity_count=len(domain.entities))

        for (entity_id, doc_id), words in candidates.items():
            scored = [
                replace(tw, ca_tfidf=ca[tw.token], survived_filter=ca[tw.token] >= threshold)
                for tw in words
            ]
            kept = [tw for tw in scored if tw.survived_filter]
            if not kept:
                kept = [scored[0]]  # keep the best candidate so the doc stays indexed
            entries[(dom_name, entity_id, doc_id)] = tuple(kept)

    used = {dom: float(thresholds[dom]) for dom in sorted(
        {key[0] for key in entries})}
    return TopicIndex(entries=entries, thresholds=used,
                      stopwords_sha256=stopwords_digest())


def write_index(index: TopicIndex, path: str):
    """Write the index file plus its ``<path>.meta.json`` sidecar.

    Index lines are ``domain<TAB>entity_id<TAB>doc_id<TAB>topic1[,topic2[,topic3]]``
    sorted lexicographically, so identical indexes are byte-identical files.
    """
    lines = []
    for (domain, entity_id, doc_id), words in sorted(index.entries.items()):
        topics = ",".join(tw.token for tw in words)
        lines.append(f"{domain}\t{entity_id}\t{doc_id}\t{topics}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))
    sidecar = {
        "thresholds": {k: index.thresholds[k] for k in sorted(index.thresholds)},
        "stopwords_sha256": index.stopwords_sha256,
    }
    with open(sidecar_path(path), "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sidecar_path(index_path: str) -> str:
    return index_path + ".meta.json"


def read_index(path: str) -> TopicIndex:
    """Load an index file written by :func:`write_index`.

    Score provenance is not persisted, so loaded entries carry zero scores
    and an unset filter flag; only the topic tokens matter downstream.
    """
    entries: dict[DocKey, tuple[TopicWord, ...]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4 or not parts[3]:
                raise LoadError("expected 'domain\\tentity\\tdoc\\ttopics'",
                                file=path, line=lineno)
            topics = tuple(TopicWord(token=t, tfidf=0.0) for t in parts[3].split(","))
            if not 1 <= len(topics) <= MAX_TOPICS:
                raise LoadError(f"{len(topics)} topic words (expected 1-{MAX_TOPICS})",
                                file=path, line=lineno)
            entries[(parts[0], parts[1], parts[2])] = topics
    thresholds: dict[str, float] = {}
    digest = ""
    meta = sidecar_path(path)
    if os.path.exists(meta):
        with open(meta, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        thresholds = {str(k): float(v) for k, v in raw.get("thresholds", {}).items()}
        digest = raw.get("stopwords_sha256", "")
    return TopicIndex(entries=entries, thresholds=thresholds, stopwords_sha256=digest)
