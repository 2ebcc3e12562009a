"""Piece-level black-box adversarial attacks on Chinese text classifiers."""

from .attack import (
    AttackConfig,
    AttackResult,
    AttackStatus,
    Replacement,
    attack_example,
    change_rate,
    rank_importance,
)
from .evaluate import run_campaign, select_samples, sweep_k
from .generator import (
    CandidateList,
    make_char_generator,
    make_context_count_generator,
    make_embedding_generator,
    RemoteGenerator,
)
from .tokenizer import (
    TokenizedText,
    Vocabulary,
    decode,
    encode,
    train_vocabulary,
    vocab_stats,
)
from .victim import (
    ClassDistribution,
    LabeledExample,
    RemoteVictim,
    ToyVictim,
    train_toy_victim,
)

__all__ = [
    "AttackConfig",
    "AttackResult",
    "AttackStatus",
    "CandidateList",
    "ClassDistribution",
    "LabeledExample",
    "RemoteGenerator",
    "RemoteVictim",
    "Replacement",
    "TokenizedText",
    "ToyVictim",
    "Vocabulary",
    "attack_example",
    "change_rate",
    "decode",
    "encode",
    "make_char_generator",
    "make_context_count_generator",
    "make_embedding_generator",
    "rank_importance",
    "run_campaign",
    "select_samples",
    "sweep_k",
    "train_toy_victim",
    "train_vocabulary",
    "vocab_stats",
]
