"""Substitution-candidate generators for a target token position.

Four interchangeable strategies: a desk-scale context-count model, a
character-level baseline, an embedding-cosine word baseline, and a remote
fill-mask client.  All of them return the same `CandidateList` shape: top-k
surfaces, descending score, ties broken lexicographically, with the original
surface, special tokens and pure punctuation filtered out.
"""
from __future__ import annotations

import math
import time
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import requests

from .errors import EmbeddingParseError, GeneratorUnavailable
from .tokenizer import SPECIAL_SURFACES, UNK_ID, TokenizedText, Vocabulary

BOUNDARY = "\x02<s>"


def is_content_surface(surface: str) -> bool:
    """True when the surface contains at least one letter (any script)."""
    return any(unicodedata.category(ch).startswith("L") for ch in surface)


@dataclass(frozen=True)
class Candidate:
    surface: str
    score: float


@dataclass
class CandidateList:
    position: int
    original: str
    items: list[Candidate]


def _finalize(position: int, original: str, scored: Iterable[tuple[str, float]],
              k: int) -> CandidateList:
    seen = set()
    items = []
    for surface, score in scored:
        if not surface or surface == original or surface in seen:
            continue
        if surface in SPECIAL_SURFACES or not is_content_surface(surface):
            continue
        seen.add(surface)
        items.append(Candidate(surface, float(score)))
    items.sort(key=lambda c: (-c.score, c.surface))
    return CandidateList(position=position, original=original, items=items[:k])


class Generator:
    """Candidate-producing interface; granularity tells the attack how to tokenize."""

    granularity = "piece"

    def candidates(self, tokens: TokenizedText, position: int, k: int) -> CandidateList:
        raise NotImplementedError

    def tokenize(self, text: str, vocab: Vocabulary) -> TokenizedText | None:
        """Non-piece generators override this to supply their own tokenization."""
        return None


class ContextCountGenerator(Generator):
    """Scores vocabulary pieces by how often they occur in the same
    (left neighbor, right neighbor) context in a reference corpus."""

    def __init__(self, corpus: Sequence[str], vocab: Vocabulary):
        from .tokenizer import encode

        self.vocab = vocab
        self.bigram: Counter = Counter()
        self.unigram: Counter = Counter()
        for line in corpus:
            if not line:
                continue
            toks = encode(line, vocab)
            seq = [BOUNDARY] + [toks.surface(i) for i in range(len(toks))] + [BOUNDARY]
            for a, b in zip(seq, seq[1:]):
                self.bigram[(a, b)] += 1
            for s in seq[1:-1]:
                self.unigram[s] += 1
        self.pool = [p.surface for p in vocab.pieces if not p.is_special]

    def candidates(self, tokens, position, k):
        original = tokens.surface(position)
        if len(tokens) == 1:
            scored = ((s, math.log(self.unigram.get(s, 0) + 1)) for s in self.pool)
        else:
            left = tokens.surface(position - 1) if position > 0 else BOUNDARY
            right = tokens.surface(position + 1) if position + 1 < len(tokens) else BOUNDARY
            scored = (
                (
                    s,
                    math.log(self.bigram.get((left, s), 0) + 1)
                    + math.log(self.bigram.get((s, right), 0) + 1),
                )
                for s in self.pool
            )
        return _finalize(position, original, scored, k)


def make_context_count_generator(corpus: Sequence[str], vocab: Vocabulary) -> ContextCountGenerator:
    return ContextCountGenerator(corpus, vocab)


class CharGenerator(Generator):
    """Char-Replace baseline: single-character substitutes over a
    character-tokenized input."""

    granularity = "char"

    def __init__(self, corpus: Sequence[str], confusion: dict[str, dict[str, float]]):
        self.confusion = confusion
        self.bigram: Counter = Counter()
        self.charset: set[str] = set()
        for line in corpus:
            if not line:
                continue
            seq = [BOUNDARY] + list(line) + [BOUNDARY]
            for a, b in zip(seq, seq[1:]):
                self.bigram[(a, b)] += 1
            self.charset.update(line)

    def tokenize(self, text, vocab):
        ids = []
        spans = []
        for i, ch in enumerate(text):
            p = vocab.lookup(ch)
            ids.append(p.id if p is not None else UNK_ID)
            spans.append((i, i + 1))
        return TokenizedText(ids, spans, text)

    def candidates(self, tokens, position, k):
        original = tokens.surface(position)
        table = self.confusion.get(original)
        if table:
            scored = list(table.items())
        else:
            left = tokens.surface(position - 1) if position > 0 else BOUNDARY
            right = tokens.surface(position + 1) if position + 1 < len(tokens) else BOUNDARY
            scored = [
                (
                    ch,
                    math.log(self.bigram.get((left, ch), 0) + 1)
                    + math.log(self.bigram.get((ch, right), 0) + 1),
                )
                for ch in self.charset
            ]
        return _finalize(position, original, scored, k)


def make_char_generator(corpus: Sequence[str],
                        confusion: dict[str, dict[str, float]] | None = None) -> CharGenerator:
    return CharGenerator(corpus, confusion or {})


def load_embeddings(path) -> dict[str, np.ndarray]:
    table: dict[str, np.ndarray] = {}
    dim = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(" ")
            if len(parts) < 2:
                raise EmbeddingParseError(f"line {lineno}: no vector", lineno)
            try:
                vec = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise EmbeddingParseError(f"line {lineno}: non-numeric value", lineno)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise EmbeddingParseError(
                    f"line {lineno}: dimension {vec.size} != {dim}", lineno
                )
            table[parts[0]] = vec
    return table


class EmbeddingGenerator(Generator):
    """Word-Replace baseline: cosine-similar words above a threshold,
    over a greedy longest-match word tokenization."""

    granularity = "word"

    def __init__(self, embeddings: dict[str, np.ndarray], similarity_threshold: float):
        if not -1.0 <= similarity_threshold <= 1.0:
            raise ValueError("similarity threshold must be in [-1, 1]")
        self.threshold = similarity_threshold
        self.words = sorted(embeddings)
        self.matrix = np.stack([embeddings[w] for w in self.words])
        norms = np.linalg.norm(self.matrix, axis=1)
        norms[norms == 0] = 1.0
        self.matrix = self.matrix / norms[:, None]
        self.index = {w: i for i, w in enumerate(self.words)}
        self.max_word_len = max((len(w) for w in self.words), default=1)

    def tokenize(self, text, vocab):
        ids = []
        spans = []
        i = 0
        n = len(text)
        while i < n:
            match = None
            for L in range(min(self.max_word_len, n - i), 0, -1):
                if text[i : i + L] in self.index:
                    match = L
                    break
            L = match or 1
            surface = text[i : i + L]
            p = vocab.lookup(surface)
            ids.append(p.id if p is not None else UNK_ID)
            spans.append((i, i + L))
            i += L
        return TokenizedText(ids, spans, text)

    def candidates(self, tokens, position, k):
        original = tokens.surface(position)
        idx = self.index.get(original)
        if idx is None:
            return CandidateList(position=position, original=original, items=[])
        sims = self.matrix @ self.matrix[idx]
        scored = (
            (w, float(sims[i]))
            for i, w in enumerate(self.words)
            if sims[i] >= self.threshold
        )
        return _finalize(position, original, scored, k)


def make_embedding_generator(path, similarity_threshold: float) -> EmbeddingGenerator:
    return EmbeddingGenerator(load_embeddings(path), similarity_threshold)


class RemoteGenerator(Generator):
    """HTTP client for the /fill_mask wire protocol."""

    def __init__(self, endpoint: str, timeout: float = 10.0, retries: int = 2,
                 backoff: float = 0.25):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._session = requests.Session()

    def candidates(self, tokens, position, k):
        a, b = tokens.spans[position]
        payload = {
            "text": tokens.original,
            "char_start": a,
            "char_end": b,
            "k": k,
            "keep_original": True,
        }
        last = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._session.post(
                    f"{self.endpoint}/fill_mask", json=payload, timeout=self.timeout
                )
                resp.raise_for_status()
                body = resp.json()
                break
            except (requests.RequestException, ValueError) as exc:
                last = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * 2**attempt)
        else:
            raise GeneratorUnavailable(f"remote generator at {self.endpoint}: {last}")
        cands = body.get("candidates")
        if not isinstance(cands, list):
            raise GeneratorUnavailable("malformed fill_mask response")
        scored = [(c.get("piece", ""), float(c.get("score", 0.0))) for c in cands]
        return _finalize(position, tokens.surface(position), scored, k)
