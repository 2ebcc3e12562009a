"""Independent oracles used by the tests.

Everything here recomputes expected values by brute force or direct
re-derivation, never by calling the code paths under test.
"""
from __future__ import annotations

from functools import reduce

from pieceattack.attack import is_eligible
from pieceattack.tokenizer import (
    MASK,
    SPECIAL_SURFACES,
    UNK_LOG_PROB,
    Piece,
    Vocabulary,
    encode,
)


def toy_vocab(logps):
    """Vocabulary straight from a {surface: log_prob} dict (plus specials)."""
    pieces = [
        Piece(id=i, surface=s, log_prob=0.0, is_special=True)
        for i, s in enumerate(SPECIAL_SURFACES)
    ]
    for surface, lp in sorted(logps.items()):
        pieces.append(Piece(id=len(pieces), surface=surface, log_prob=lp))
    return Vocabulary._from_pieces(pieces)


def enumerate_best_segmentation(text, vocab):
    """Exhaustive max over all segmentations; ties pick the lexicographically
    smallest surface sequence.  Scores are folded right-to-left so float sums
    match the suffix-DP exactly."""
    table = vocab._by_surface
    memo = {}

    def segs(i):
        if i == len(text):
            return [()]
        if i in memo:
            return memo[i]
        out = []
        for j in range(i + 1, len(text) + 1):
            sub = text[i:j]
            p = table.get(sub)
            if p is not None:
                for rest in segs(j):
                    out.append(((sub, p.log_prob),) + rest)
        if text[i] not in table:
            for rest in segs(i + 1):
                out.append((((text[i]), UNK_LOG_PROB),) + rest)
        memo[i] = out
        return out

    def score(seg):
        return reduce(lambda acc, piece: piece[1] + acc, reversed(seg), 0.0)

    best = None
    for seg in segs(0):
        s = score(seg)
        surfaces = tuple(p[0] for p in seg)
        key = (-s, surfaces)
        if best is None or key < best:
            best = key
    return -best[0], best[1]


def direct_importance(tokens, victim, label, skip_punctuation=True):
    """Eq-style re-derivation: one masked probe per eligible position,
    scored one text at a time."""
    base = victim.score(tokens.original).probs[label]
    scores = []
    for i in range(len(tokens)):
        if not is_eligible(tokens, i, skip_punctuation):
            scores.append(float("-inf"))
            continue
        a, b = tokens.spans[i]
        masked = tokens.original[:a] + MASK + tokens.original[b:]
        scores.append(base - victim.score(masked).probs[label])
    return scores


def exhaustive_flip_exists(text, label, victim, generator, vocab, k, max_steps=2):
    """Breadth-first search over all sequences of at most `max_steps`
    single-position replacements (re-tokenizing after each step, exactly the
    state space greedy search can reach)."""

    def tokenize(t):
        custom = generator.tokenize(t, vocab)
        return custom if custom is not None else encode(t, vocab)

    frontier = {text}
    seen = {text}
    for _ in range(max_steps):
        nxt = set()
        for cur in frontier:
            toks = tokenize(cur)
            for i in range(len(toks)):
                if not is_eligible(toks, i):
                    continue
                clist = generator.candidates(toks, i, k)
                a, b = toks.spans[i]
                for cand in clist.items:
                    trial = cur[:a] + cand.surface + cur[b:]
                    if trial in seen:
                        continue
                    seen.add(trial)
                    if victim.score(trial).predicted != label:
                        return True
                    nxt.add(trial)
        frontier = nxt
    return False
