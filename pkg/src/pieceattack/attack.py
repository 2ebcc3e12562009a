"""Two-step black-box attack: mask-based importance ranking, then greedy
top-k substitution until the victim's prediction flips."""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import GeneratorUnavailable, VictimUnavailable
from .generator import Generator, is_content_surface
from .tokenizer import MASK, UNK_ID, TokenizedText, Vocabulary, encode
from .victim import CountingVictim, Victim

_NEG_INF = float("-inf")


class AttackStatus(str, Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"
    SKIPPED_ORIGINALLY_WRONG = "SkippedOriginallyWrong"
    ERROR = "Error"


@dataclass
class AttackConfig:
    k: int = 12
    max_replacements: Optional[int] = None  # None = all eligible positions
    skip_punctuation: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_replacements is not None and self.max_replacements < 1:
            raise ValueError("max_replacements must be >= 1 or None")


@dataclass
class ImportanceRanking:
    scores: list[float]
    order: list[int]


@dataclass
class Replacement:
    position: int
    original: str
    substitute: str
    score_drop: float


@dataclass
class AttackResult:
    status: AttackStatus
    original_text: str
    adversarial_text: str
    replacements: list[Replacement]
    queries: int
    original_label: int
    token_count: int
    error: str = ""

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "original_text": self.original_text,
            "adversarial_text": self.adversarial_text,
            "replacements": [
                {
                    "position": r.position,
                    "original": r.original,
                    "substitute": r.substitute,
                    "score_drop": r.score_drop,
                }
                for r in self.replacements
            ],
            "queries": self.queries,
            "original_label": self.original_label,
            "token_count": self.token_count,
            "error": self.error,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True)


def is_eligible(tokens: TokenizedText, i: int, skip_punctuation: bool = True) -> bool:
    if tokens.piece_ids[i] == UNK_ID:
        return False
    if skip_punctuation and not is_content_surface(tokens.surface(i)):
        return False
    return True


def rank_importance(tokens: TokenizedText, victim: Victim, label: int,
                    skip_punctuation: bool = True) -> ImportanceRanking:
    """Per-position score drop when the piece is replaced by the mask token.

    Issues exactly one victim call for the unmodified text plus one per
    eligible position, all through a single batch.
    """
    n = len(tokens)
    eligible = [i for i in range(n) if is_eligible(tokens, i, skip_punctuation)]
    texts = [tokens.original]
    for i in eligible:
        a, b = tokens.spans[i]
        texts.append(tokens.original[:a] + MASK + tokens.original[b:])
    dists = victim.batch_score(texts)
    base = dists[0].probs[label]
    scores = [_NEG_INF] * n
    for j, i in enumerate(eligible):
        scores[i] = base - dists[j + 1].probs[label]
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    return ImportanceRanking(scores=scores, order=order)


def _tokenize(text: str, generator: Generator, vocab: Vocabulary) -> TokenizedText:
    custom = generator.tokenize(text, vocab)
    return custom if custom is not None else encode(text, vocab)


def attack_example(text: str, label: int, victim: Victim, generator: Generator,
                   vocab: Vocabulary, config: AttackConfig) -> AttackResult:
    if not text:
        raise ValueError("cannot attack empty text")
    counted = CountingVictim(victim)
    tokens = _tokenize(text, generator, vocab)
    token_count = len(tokens)

    def result(status, adv, reps, err=""):
        return AttackResult(
            status=status,
            original_text=text,
            adversarial_text=adv,
            replacements=reps,
            queries=counted.calls,
            original_label=label,
            token_count=token_count,
            error=err,
        )

    try:
        first = counted.score(text)
        if first.predicted != label:
            return result(AttackStatus.SKIPPED_ORIGINALLY_WRONG, text, [])

        ranking = rank_importance(tokens, counted, label, config.skip_punctuation)
        # Targets tracked as character spans in the *current* text so they
        # survive length-changing replacements.
        targets = [
            list(tokens.spans[i]) for i in ranking.order if ranking.scores[i] > _NEG_INF
        ]

        current = text
        cur_tokens = tokens
        cur_p = first.probs[label]
        replacements: list[Replacement] = []
        budget = config.max_replacements

        for target in targets:
            if target is None:
                continue
            a, b = target
            # Re-locate against the current tokenization; drop targets whose
            # spans no longer align to a piece boundary.
            try:
                idx = cur_tokens.spans.index((a, b))
            except ValueError:
                continue
            original_surface = cur_tokens.surface(idx)
            clist = generator.candidates(cur_tokens, idx, config.k)
            if not clist.items:
                continue
            trials = [current[:a] + c.surface + current[b:] for c in clist.items]
            dists = counted.batch_score(trials)

            flips = [
                (dists[j].probs[label], j)
                for j in range(len(trials))
                if dists[j].predicted != label
            ]
            if flips:
                _, j = min(flips)
                adv = trials[j]
                replacements.append(
                    Replacement(
                        position=idx,
                        original=original_surface,
                        substitute=clist.items[j].surface,
                        score_drop=cur_p - dists[j].probs[label],
                    )
                )
                # Re-verify the flip with one fresh scoring call.
                final = counted.score(adv)
                if final.predicted == label:
                    return result(AttackStatus.FAILURE, adv, replacements)
                return result(AttackStatus.SUCCESS, adv, replacements)

            best_j = min(range(len(trials)), key=lambda j: (dists[j].probs[label], j))
            drop = cur_p - dists[best_j].probs[label]
            if drop <= 0:
                continue
            sub = clist.items[best_j].surface
            replacements.append(
                Replacement(
                    position=idx,
                    original=original_surface,
                    substitute=sub,
                    score_drop=drop,
                )
            )
            delta = len(sub) - (b - a)
            current = trials[best_j]
            cur_p = dists[best_j].probs[label]
            for t in targets:
                if t is None or t is target:
                    continue
                if t[0] >= b:
                    t[0] += delta
                    t[1] += delta
                elif t[1] > a:
                    # overlaps the replaced span; cannot be targeted anymore
                    t[0] = t[1] = -1
            cur_tokens = _tokenize(current, generator, vocab)
            if budget is not None and len(replacements) >= budget:
                break

        return result(AttackStatus.FAILURE, current, replacements)
    except (VictimUnavailable, GeneratorUnavailable) as exc:
        return result(AttackStatus.ERROR, text, [], err=str(exc))


def change_rate(result: AttackResult) -> float:
    if result.status == AttackStatus.SKIPPED_ORIGINALLY_WRONG:
        raise ValueError("change rate is undefined for skipped examples")
    if result.token_count == 0:
        return 0.0
    return len(result.replacements) / result.token_count
