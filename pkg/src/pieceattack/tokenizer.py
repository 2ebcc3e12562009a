"""Sentence-piece tokenizer trained directly from raw text.

Training follows the unigram-LM recipe: seed a large candidate set from
frequent substrings, alternate EM rounds (forward-backward over each
sentence's segmentation lattice) with pruning of low-value multi-character
pieces, until the vocabulary hits the target size.  Encoding is Viterbi
segmentation over the trained piece probabilities; decoding is lossless via
the recorded character spans.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import CorruptTokenization, InvalidCorpus, VocabTooSmall

PAD, UNK, CLS, MASK = "[PAD]", "[UNK]", "[CLS]", "[MASK]"
SPECIAL_SURFACES = (PAD, UNK, CLS, MASK)
PAD_ID, UNK_ID, CLS_ID, MASK_ID = 0, 1, 2, 3

# Score charged for an uncovered character; covered characters always have a
# real edge, so this constant never competes with trained pieces.
UNK_LOG_PROB = -100.0

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class Piece:
    id: int
    surface: str
    log_prob: float
    is_special: bool = False


@dataclass
class Vocabulary:
    pieces: list[Piece]
    max_piece_chars: int
    char_cover: frozenset[str]
    em_history: list[list[float]] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        by_surface = {}
        for p in self.pieces:
            if p.surface in by_surface:
                raise ValueError(f"duplicate piece surface: {p.surface!r}")
            by_surface[p.surface] = p
        self._by_surface = by_surface

    def __len__(self) -> int:
        return len(self.pieces)

    def lookup(self, surface: str) -> Piece | None:
        return self._by_surface.get(surface)

    def surface_of(self, piece_id: int) -> str:
        return self.pieces[piece_id].surface

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for p in self.pieces:
                f.write(f"{p.surface}\t{p.log_prob:.17g}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        pieces = []
        with open(path, "r", encoding="utf-8") as f:
            for i, line in enumerate(f):
                line = line.rstrip("\n")
                if not line:
                    continue
                surface, _, lp = line.rpartition("\t")
                pieces.append(
                    Piece(id=i, surface=surface, log_prob=float(lp), is_special=i < 4)
                )
        return cls._from_pieces(pieces)

    @classmethod
    def _from_pieces(cls, pieces: list[Piece]) -> "Vocabulary":
        non_special = [p for p in pieces if not p.is_special]
        cover = frozenset(p.surface for p in non_special if len(p.surface) == 1)
        max_chars = max((len(p.surface) for p in non_special), default=1)
        return cls(pieces=pieces, max_piece_chars=max_chars, char_cover=cover)


@dataclass
class TokenizedText:
    piece_ids: list[int]
    spans: list[tuple[int, int]]
    original: str

    def __len__(self) -> int:
        return len(self.piece_ids)

    def surface(self, i: int) -> str:
        a, b = self.spans[i]
        return self.original[a:b]


@dataclass
class VocabStats:
    # bucket (1..4, 5 meaning "5+") -> (count, percentage)
    histogram: dict[int, tuple[int, float]]


def _logsumexp(values) -> float:
    m = max(values)
    if m == _NEG_INF:
        return _NEG_INF
    return m + math.log(sum(math.exp(v - m) for v in values))


# ---------------------------------------------------------------------------
# Lattice primitives over a plain {surface: log_prob} table.
# ---------------------------------------------------------------------------

def _lattice_loglik(line: str, logp: dict[str, float], max_len: int) -> float:
    """log of the total probability mass over all segmentations of `line`."""
    n = len(line)
    alpha = [_NEG_INF] * (n + 1)
    alpha[0] = 0.0
    for j in range(1, n + 1):
        terms = []
        for i in range(max(0, j - max_len), j):
            lp = logp.get(line[i:j])
            if lp is not None and alpha[i] > _NEG_INF:
                terms.append(alpha[i] + lp)
        if terms:
            alpha[j] = _logsumexp(terms)
    return alpha[n]


def _lattice_expectations(line: str, weight: float, logp: dict[str, float],
                          max_len: int, expected: dict[str, float]) -> float:
    """Accumulate expected piece counts for one sentence; returns its loglik."""
    n = len(line)
    alpha = [_NEG_INF] * (n + 1)
    alpha[0] = 0.0
    edges = []  # (i, j, surface, lp)
    for j in range(1, n + 1):
        terms = []
        for i in range(max(0, j - max_len), j):
            sub = line[i:j]
            lp = logp.get(sub)
            if lp is not None and alpha[i] > _NEG_INF:
                terms.append(alpha[i] + lp)
                edges.append((i, j, sub, lp))
        if terms:
            alpha[j] = _logsumexp(terms)
    z = alpha[n]
    if z == _NEG_INF:
        return z
    beta = [_NEG_INF] * (n + 1)
    beta[n] = 0.0
    for i in range(n - 1, -1, -1):
        terms = []
        for j in range(i + 1, min(n, i + max_len) + 1):
            lp = logp.get(line[i:j])
            if lp is not None and beta[j] > _NEG_INF:
                terms.append(lp + beta[j])
        if terms:
            beta[i] = _logsumexp(terms)
    for i, j, sub, lp in edges:
        if beta[j] > _NEG_INF:
            expected[sub] = expected.get(sub, 0.0) + weight * math.exp(alpha[i] + lp + beta[j] - z)
    return z


def _viterbi_score(line: str, logp: dict[str, float], max_len: int,
                   banned: str | None = None):
    """Best segmentation score and its pieces; edges equal to `banned` are skipped."""
    n = len(line)
    best = [_NEG_INF] * (n + 1)
    back = [None] * (n + 1)
    best[0] = 0.0
    for j in range(1, n + 1):
        for i in range(max(0, j - max_len), j):
            sub = line[i:j]
            if sub == banned:
                continue
            lp = logp.get(sub)
            if lp is not None and best[i] > _NEG_INF:
                s = best[i] + lp
                if s > best[j]:
                    best[j] = s
                    back[j] = i
    if best[n] == _NEG_INF:
        return _NEG_INF, []
    pieces = []
    j = n
    while j > 0:
        i = back[j]
        pieces.append(line[i:j])
        j = i
    pieces.reverse()
    return best[n], pieces


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def train_vocabulary(corpus: Iterable[str], target_size: int,
                     max_piece_chars: int = 8, seed_size: int = 4000) -> Vocabulary:
    lines = [l for l in corpus if l]
    if not lines:
        raise InvalidCorpus("training corpus is empty")
    if max_piece_chars < 2:
        raise ValueError("max_piece_chars must be >= 2")

    line_counts = Counter(lines)
    char_counts: Counter = Counter()
    sub_counts: Counter = Counter()
    for line, c in line_counts.items():
        n = len(line)
        for i in range(n):
            char_counts[line[i]] += c
            for L in range(2, min(max_piece_chars, n - i) + 1):
                sub_counts[line[i : i + L]] += c

    floor = len(SPECIAL_SURFACES) + len(char_counts)
    if target_size < floor:
        raise VocabTooSmall(
            f"target_size {target_size} below forced coverage of {floor} pieces"
        )

    ranked = sorted(sub_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    seeds = [(s, c) for s, c in ranked if c >= 2][:seed_size]
    # Fall back to singleton substrings only if the frequent ones cannot fill
    # the requested size.
    needed = target_size - floor
    if len(seeds) < needed:
        have = {s for s, _ in seeds}
        for s, c in ranked:
            if len(seeds) >= needed:
                break
            if s not in have:
                seeds.append((s, c))

    total = sum(char_counts.values()) + sum(c for _, c in seeds)
    logp = {s: math.log(c / total) for s, c in char_counts.items()}
    for s, c in seeds:
        logp[s] = math.log(c / total)

    em_history: list[list[float]] = []
    while True:
        stage = []
        for _ in range(2):
            expected: dict[str, float] = {}
            ll = 0.0
            for line, c in line_counts.items():
                ll += c * _lattice_expectations(line, c, logp, max_piece_chars, expected)
            stage.append(ll)
            tot = sum(expected.values())
            logp = {
                s: math.log(max(e, 1e-300)) - math.log(tot) for s, e in expected.items()
            }
        ll_final = sum(
            c * _lattice_loglik(line, logp, max_piece_chars)
            for line, c in line_counts.items()
        )
        stage.append(ll_final)
        em_history.append(stage)

        excess = len(SPECIAL_SURFACES) + len(logp) - target_size
        if excess <= 0:
            break
        logp = _prune(line_counts, logp, max_piece_chars, excess)

    specials = [
        Piece(id=i, surface=s, log_prob=0.0, is_special=True)
        for i, s in enumerate(SPECIAL_SURFACES)
    ]
    ordered = sorted(logp.items(), key=lambda kv: (-kv[1], kv[0]))
    pieces = specials + [
        Piece(id=len(specials) + i, surface=s, log_prob=lp)
        for i, (s, lp) in enumerate(ordered)
    ]
    vocab = Vocabulary(
        pieces=pieces,
        max_piece_chars=max_piece_chars,
        char_cover=frozenset(char_counts),
        em_history=em_history,
    )
    return vocab


def _prune(line_counts, logp, max_len, excess):
    """Drop the multi-char pieces whose removal costs the least Viterbi loglik."""
    usage: dict[str, set] = {}
    base_scores = {}
    for line in line_counts:
        score, pieces = _viterbi_score(line, logp, max_len)
        base_scores[line] = score
        for s in pieces:
            if len(s) > 1:
                usage.setdefault(s, set()).add(line)

    multi = [s for s in logp if len(s) > 1]
    losses = {}
    for s in multi:
        loss = 0.0
        for line in usage.get(s, ()):
            alt, _ = _viterbi_score(line, logp, max_len, banned=s)
            loss += line_counts[line] * (base_scores[line] - alt)
        losses[s] = loss

    n_drop = min(math.ceil(0.25 * len(multi)), excess)
    drop = set(sorted(multi, key=lambda s: (losses[s], s))[:n_drop])
    kept = {s: lp for s, lp in logp.items() if s not in drop}
    z = _logsumexp(list(kept.values()))
    return {s: lp - z for s, lp in kept.items()}


# ---------------------------------------------------------------------------
# Encoding / decoding
# ---------------------------------------------------------------------------

def encode(text: str, vocab: Vocabulary) -> TokenizedText:
    """Viterbi segmentation; ties pick the lexicographically smallest surface.

    Characters outside the vocabulary become UNK positions whose spans keep
    the raw characters, so decoding is always lossless.
    """
    n = len(text)
    if n == 0:
        return TokenizedText([], [], text)
    table = vocab._by_surface
    max_len = max(vocab.max_piece_chars, max(len(s) for s in SPECIAL_SURFACES))

    best = [_NEG_INF] * (n + 1)
    best[n] = 0.0
    for i in range(n - 1, -1, -1):
        b = _NEG_INF
        for L in range(1, min(max_len, n - i) + 1):
            p = table.get(text[i : i + L])
            if p is not None and best[i + L] > _NEG_INF:
                s = p.log_prob + best[i + L]
                if s > b:
                    b = s
        if text[i] not in table:
            s = UNK_LOG_PROB + best[i + 1]
            if s > b:
                b = s
        best[i] = b

    ids: list[int] = []
    spans: list[tuple[int, int]] = []
    i = 0
    while i < n:
        options = []  # (surface, id, end)
        for L in range(1, min(max_len, n - i) + 1):
            p = table.get(text[i : i + L])
            if p is not None and p.log_prob + best[i + L] == best[i]:
                options.append((text[i : i + L], p.id, i + L))
        if text[i] not in table and UNK_LOG_PROB + best[i + 1] == best[i]:
            options.append((text[i], UNK_ID, i + 1))
        surface, pid, j = min(options)
        ids.append(pid)
        spans.append((i, j))
        i = j
    return TokenizedText(ids, spans, text)


def decode(tokens: TokenizedText) -> str:
    if len(tokens.piece_ids) != len(tokens.spans):
        raise CorruptTokenization("piece_ids and spans length mismatch")
    pos = 0
    for a, b in tokens.spans:
        if a != pos or b <= a:
            raise CorruptTokenization(f"span ({a}, {b}) breaks contiguous coverage")
        pos = b
    if pos != len(tokens.original):
        raise CorruptTokenization("spans do not cover the full text")
    return "".join(tokens.original[a:b] for a, b in tokens.spans)


def vocab_stats(vocab: Vocabulary) -> VocabStats:
    counts: Counter = Counter()
    for p in vocab.pieces:
        if p.is_special:
            continue
        counts[min(len(p.surface), 5)] += 1
    total = sum(counts.values())
    hist = {}
    for bucket in (1, 2, 3, 4, 5):
        c = counts.get(bucket, 0)
        hist[bucket] = (c, 100.0 * c / total if total else 0.0)
    return VocabStats(histogram=hist)


def corpus_viterbi_loglik(lines: Sequence[str], vocab: Vocabulary) -> float:
    """Total best-segmentation loglik of a corpus under a trained vocabulary."""
    logp = {p.surface: p.log_prob for p in vocab.pieces if not p.is_special}
    return sum(_viterbi_score(l, logp, vocab.max_piece_chars)[0] for l in lines if l)
