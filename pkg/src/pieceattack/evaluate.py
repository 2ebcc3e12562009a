"""Campaign runner: attacks a sample set, aggregates the paper-style metrics
(original/attacked accuracy, success rate, change rate, queries) and sweeps
the candidate-list size k."""
from __future__ import annotations

import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

from .attack import AttackConfig, AttackResult, AttackStatus, attack_example, change_rate
from .errors import InsufficientData
from .generator import Generator
from .tokenizer import Vocabulary
from .victim import LabeledExample, Victim


@dataclass
class CampaignReport:
    dataset: str
    n_total: int
    n_errors: int
    n_originally_correct: int
    n_successes: int
    n_failures: int
    n_skipped: int
    original_accuracy: float
    attacked_accuracy: float
    success_rate: float
    mean_change_rate: float
    mean_queries: float
    config: dict
    seed: int
    results: list[AttackResult]

    def summary(self) -> dict:
        d = {
            "dataset": self.dataset,
            "n_total": self.n_total,
            "n_errors": self.n_errors,
            "n_originally_correct": self.n_originally_correct,
            "n_successes": self.n_successes,
            "n_failures": self.n_failures,
            "n_skipped": self.n_skipped,
            "original_accuracy": self.original_accuracy,
            "attacked_accuracy": self.attacked_accuracy,
            "success_rate": self.success_rate,
            "mean_change_rate": self.mean_change_rate,
            "mean_queries": self.mean_queries,
            "consist_pct": "n/a",
            "fluency": "n/a",
            "config": self.config,
            "seed": self.seed,
        }
        return d


def select_samples(dataset: Sequence[LabeledExample], n: int, seed: int) -> list[LabeledExample]:
    if n > len(dataset):
        raise InsufficientData(f"requested {n} samples from {len(dataset)} examples")
    return random.Random(seed).sample(list(dataset), n)


def run_campaign(samples: Sequence[LabeledExample], victim: Victim,
                 generator: Generator, vocab: Vocabulary, config: AttackConfig,
                 out_dir: Optional[str] = None, workers: int = 1,
                 dataset_name: str = "desk") -> CampaignReport:
    if not samples:
        raise InsufficientData("no samples to attack")

    def attack_one(ex: LabeledExample) -> AttackResult:
        return attack_example(ex.text, ex.label, victim, generator, vocab, config)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(attack_one, samples))
    else:
        results = [attack_one(ex) for ex in samples]

    n_total = len(results)
    n_errors = sum(r.status == AttackStatus.ERROR for r in results)
    n_skipped = sum(r.status == AttackStatus.SKIPPED_ORIGINALLY_WRONG for r in results)
    n_success = sum(r.status == AttackStatus.SUCCESS for r in results)
    n_failure = sum(r.status == AttackStatus.FAILURE for r in results)
    n_correct = n_success + n_failure
    evaluated = n_total - n_errors

    success_results = [r for r in results if r.status == AttackStatus.SUCCESS]
    scored = [r for r in results if r.status != AttackStatus.ERROR]
    report = CampaignReport(
        dataset=dataset_name,
        n_total=n_total,
        n_errors=n_errors,
        n_originally_correct=n_correct,
        n_successes=n_success,
        n_failures=n_failure,
        n_skipped=n_skipped,
        original_accuracy=n_correct / evaluated if evaluated else 0.0,
        attacked_accuracy=(n_correct - n_success) / evaluated if evaluated else 0.0,
        success_rate=n_success / n_correct if n_correct else 0.0,
        mean_change_rate=(
            sum(change_rate(r) for r in success_results) / len(success_results)
            if success_results
            else 0.0
        ),
        mean_queries=sum(r.queries for r in scored) / len(scored) if scored else 0.0,
        config=asdict(config),
        seed=config.seed,
        results=results,
    )
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def write_report(report: CampaignReport, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "results.jsonl", "w", encoding="utf-8") as f:
        for i, r in enumerate(report.results):
            row = {"index": i}
            row.update(r.to_dict())
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    with open(out / "report.json", "w", encoding="utf-8") as f:
        json.dump(report.summary(), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def sweep_k(samples: Sequence[LabeledExample], victim: Victim, generator: Generator,
            vocab: Vocabulary, ks: Sequence[int], config: AttackConfig,
            out_dir: Optional[str] = None, workers: int = 1,
            dataset_name: str = "desk") -> list[tuple[int, float, float]]:
    if not samples:
        raise InsufficientData("no samples to attack")
    if any(b <= a for a, b in zip(ks, list(ks)[1:])):
        raise ValueError("ks must be strictly increasing")
    rows = []
    for k in ks:
        cfg = replace(config, k=k)
        sub_dir = None if out_dir is None else Path(out_dir) / f"k{k}"
        rep = run_campaign(
            samples, victim, generator, vocab, cfg,
            out_dir=sub_dir, workers=workers, dataset_name=dataset_name,
        )
        rows.append((k, rep.success_rate, rep.mean_change_rate))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "curve.tsv", "w", encoding="utf-8") as f:
            for k, sr, cr in rows:
                f.write(f"{k}\t{sr:.6f}\t{cr:.6f}\n")
    return rows
