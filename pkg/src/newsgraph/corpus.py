"""Corpus ingestion: the tab-separated article format, tokenization, entity
mentions, and the frequency-ordered vocabulary.

One record per line, UTF-8::

    id<TAB>label<TAB>text<TAB>entities

label is 0 (real), 1 (fake) or ? (unlabeled); entities is a |-separated list
of surface strings, or empty to let the capitalization heuristic find them.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass

__all__ = [
    "CorpusError",
    "RawArticle",
    "Document",
    "Vocabulary",
    "EntityTable",
    "load_corpus",
    "write_corpus",
    "build_vocab",
    "build_entity_table",
    "annotate",
]

_SENT_SPLIT = re.compile(r"(?<=[.?!])\s+")
_STRIP = string.punctuation


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class RawArticle:
    id: str
    label: int | None  # 1 fake, 0 real, None unlabeled
    text: str
    entities: tuple[str, ...] | None = None  # None -> heuristic extraction


@dataclass(frozen=True)
class Document:
    """A tokenized article: sentences of vocabulary ids plus entity mentions
    as (entity id, sentence index) pairs."""

    id: str
    label: int | None
    sentences: tuple[tuple[int, ...], ...]
    entity_mentions: tuple[tuple[int, int], ...]

    def tokens(self) -> list[int]:
        return [t for s in self.sentences for t in s]

    def entity_ids(self) -> set[int]:
        return {e for e, _ in self.entity_mentions}


def _sentence_tokens(text: str) -> list[list[str]]:
    """Split into sentences, then whitespace tokens with edge punctuation
    stripped. Empty tokens and empty sentences are dropped, casing kept."""
    out = []
    for sent in _SENT_SPLIT.split(text):
        toks = [t.strip(_STRIP) for t in sent.split()]
        toks = [t for t in toks if t]
        if toks:
            out.append(toks)
    return out


def load_corpus(path: str) -> list[RawArticle]:
    articles: list[RawArticle] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise CorpusError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
            art_id, label_s, text, ents_s = parts
            if not art_id:
                raise CorpusError(f"{path}:{lineno}: empty id")
            if art_id in seen_ids:
                raise CorpusError(f"{path}:{lineno}: duplicate id {art_id!r}")
            seen_ids.add(art_id)
            if label_s == "?":
                label = None
            elif label_s in ("0", "1"):
                label = int(label_s)
            else:
                raise CorpusError(
                    f"{path}:{lineno}: label must be 0, 1 or ?, got {label_s!r}")
            if not text.strip():
                raise CorpusError(f"{path}:{lineno}: empty text")
            ents = tuple(e.strip() for e in ents_s.split("|") if e.strip())
            articles.append(RawArticle(art_id, label, text, ents or None))
    return articles


def write_corpus(articles: list[RawArticle], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in articles:
            label = "?" if a.label is None else str(a.label)
            ents = "|".join(a.entities) if a.entities else ""
            for fieldval in (a.id, label, a.text):
                if "\t" in fieldval or "\n" in fieldval:
                    raise CorpusError(f"article {a.id!r}: field contains tab/newline")
            fh.write(f"{a.id}\t{label}\t{a.text}\t{ents}\n")


# ------------------------------------------------------------- vocabulary


@dataclass
class Vocabulary:
    """Ids ordered by descending frequency, ties broken lexicographically.
    Id 0 is reserved for padding/unknown."""

    token_to_id: dict[str, int]
    id_to_token: list[str]
    freq: dict[str, int]

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token.lower(), 0)


def build_vocab(articles: list[RawArticle], min_freq: int = 2) -> Vocabulary:
    counts: Counter[str] = Counter()
    for a in articles:
        for sent in _sentence_tokens(a.text):
            counts.update(t.lower() for t in sent)
    if not counts:
        raise CorpusError("cannot build a vocabulary from an empty corpus")
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    token_to_id: dict[str, int] = {}
    id_to_token = ["<unk>"]
    freq: dict[str, int] = {}
    for token, n in ordered:
        if n < min_freq:
            continue
        token_to_id[token] = len(id_to_token)
        id_to_token.append(token)
        freq[token] = n
    return Vocabulary(token_to_id, id_to_token, freq)


# ---------------------------------------------------------------- entities


@dataclass
class EntityTable:
    surface_to_id: dict[str, int]
    id_to_surface: list[str]
    doc_freq: list[int]
    # tokens that appear fully lowercased somewhere in the corpus; used by the
    # sentence-initial discard rule below
    lowercase_forms: frozenset[str]

    def __len__(self) -> int:
        return len(self.id_to_surface)


def _capitalized_runs(sent: list[str]) -> list[tuple[int, list[str]]]:
    """Maximal runs of capitalized alphabetic tokens, as (start, tokens)."""
    runs = []
    i = 0
    while i < len(sent):
        tok = sent[i]
        if tok.isalpha() and tok[0].isupper():
            j = i
            while j < len(sent) and sent[j].isalpha() and sent[j][0].isupper():
                j += 1
            runs.append((i, sent[i:j]))
            i = j
        else:
            i += 1
    return runs


def _heuristic_surfaces(sentences: list[list[str]],
                        lowercase_forms: frozenset[str]) -> list[tuple[str, int]]:
    """(casefolded surface, sentence index) pairs in document order.

    A lone capitalized token at the start of a sentence is discarded when its
    lowercase form occurs elsewhere in the corpus: that is ordinary
    sentence-casing, not a name.
    """
    found = []
    for s_idx, sent in enumerate(sentences):
        for start, run in _capitalized_runs(sent):
            if start == 0 and len(run) == 1 and run[0].lower() in lowercase_forms:
                continue
            found.append((" ".join(t.casefold() for t in run), s_idx))
    return found


def _article_surfaces(a: RawArticle, sentences: list[list[str]],
                      lowercase_forms: frozenset[str]) -> list[tuple[str, int]]:
    if a.entities:
        out = []
        for surface in a.entities:
            folded = " ".join(surface.casefold().split())
            out.append((folded, _locate_surface(folded, sentences)))
        return out
    return _heuristic_surfaces(sentences, lowercase_forms)


def _locate_surface(folded: str, sentences: list[list[str]]) -> int:
    """First sentence containing the surface as a contiguous token run, else 0."""
    want = folded.split()
    for s_idx, sent in enumerate(sentences):
        low = [t.casefold() for t in sent]
        for i in range(len(low) - len(want) + 1):
            if low[i:i + len(want)] == want:
                return s_idx
    return 0


def build_entity_table(articles: list[RawArticle]) -> EntityTable:
    lowercase_forms = frozenset(
        t.lower() for a in articles for sent in _sentence_tokens(a.text)
        for t in sent if t == t.lower())
    surface_to_id: dict[str, int] = {}
    id_to_surface: list[str] = []
    doc_freq: list[int] = []
    for a in articles:
        sentences = _sentence_tokens(a.text)
        per_doc: set[int] = set()
        for surface, _ in _article_surfaces(a, sentences, lowercase_forms):
            eid = surface_to_id.get(surface)
            if eid is None:
                eid = len(id_to_surface)
                surface_to_id[surface] = eid
                id_to_surface.append(surface)
                doc_freq.append(0)
            per_doc.add(eid)
        for eid in per_doc:
            doc_freq[eid] += 1
    return EntityTable(surface_to_id, id_to_surface, doc_freq, lowercase_forms)


def annotate(article: RawArticle, vocab: Vocabulary, entities: EntityTable,
             strict: bool = True) -> Document:
    """Tokenize one article against a prebuilt vocabulary and entity table.

    With strict=False, surfaces missing from the table are skipped instead of
    raising; that is what evaluation on a fresh corpus wants.
    """
    sentences = _sentence_tokens(article.text)
    if not sentences:
        raise CorpusError(f"article {article.id!r}: no tokenizable sentences")
    sent_ids = tuple(
        tuple(vocab.lookup(tok) for tok in sent) for sent in sentences)
    mentions: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for surface, s_idx in _article_surfaces(article, sentences,
                                            entities.lowercase_forms):
        eid = entities.surface_to_id.get(surface)
        if eid is None:
            if strict:
                raise CorpusError(
                    f"article {article.id!r}: entity {surface!r} not in table")
            continue
        pair = (eid, s_idx)
        if pair not in seen:
            seen.add(pair)
            mentions.append(pair)
    return Document(article.id, article.label, sent_ids, tuple(mentions))
