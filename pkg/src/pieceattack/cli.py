"""Command-line entry point.

Subcommands map onto the library: `tokenizer` (train/encode/stats),
`victim` (train/score), `attack run`, `eval run|sweep`.  Options can come
from a flat key=value config file (--config); explicit flags win.

Exit codes: 0 success, 2 usage/config error, 3 runtime/endpoint error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import attack as attack_mod
from . import evaluate, generator as gen_mod, tokenizer, victim as victim_mod
from .errors import GeneratorUnavailable, PieceAttackError, VictimUnavailable

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


def _read_config_file(path):
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, _, val = line.partition("=")
            values[key.strip().replace("-", "_")] = val.strip()
    return values


def _apply_config_file(args):
    if getattr(args, "config", None):
        try:
            file_values = _read_config_file(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}")
        for key, val in file_values.items():
            if getattr(args, key, None) in (None, False):
                cur = getattr(args, key, None)
                if isinstance(cur, bool):
                    setattr(args, key, val.lower() in ("1", "true", "yes"))
                else:
                    setattr(args, key, _coerce(val))
    return args


def _coerce(val: str):
    for conv in (int, float):
        try:
            return conv(val)
        except ValueError:
            continue
    return val


def _require(args, *names):
    for name in names:
        if getattr(args, name, None) is None:
            raise UsageError(f"missing required option --{name.replace('_', '-')}")


def _load_vocab(args):
    _require(args, "vocab")
    path = Path(args.vocab)
    if not path.exists():
        raise UsageError(f"vocab file not found: {path}")
    return tokenizer.Vocabulary.load(path)


def _build_victim(args, vocab):
    kind = args.victim or "toy"
    if kind == "toy":
        _require(args, "model")
        if not Path(args.model).exists():
            raise UsageError(f"model file not found: {args.model}")
        return victim_mod.ToyVictim.load(args.model, vocab)
    if kind == "remote":
        _require(args, "endpoint")
        return victim_mod.RemoteVictim(args.endpoint)
    raise UsageError(f"unknown victim kind: {kind}")


def _build_generator(args, vocab):
    kind = args.generator or "count"
    if kind == "count":
        _require(args, "corpus")
        lines = _read_lines(args.corpus)
        return gen_mod.make_context_count_generator(lines, vocab)
    if kind == "char":
        _require(args, "corpus")
        return gen_mod.make_char_generator(_read_lines(args.corpus))
    if kind == "embed":
        _require(args, "embeddings")
        return gen_mod.make_embedding_generator(args.embeddings, args.threshold)
    if kind == "remote":
        _require(args, "endpoint")
        return gen_mod.RemoteGenerator(args.endpoint)
    raise UsageError(f"unknown generator kind: {kind}")


def _read_lines(path):
    p = Path(path)
    if not p.exists():
        raise UsageError(f"file not found: {p}")
    with open(p, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _attack_config(args):
    budget = args.budget if getattr(args, "budget", None) else None
    try:
        return attack_mod.AttackConfig(
            k=args.k, max_replacements=budget, seed=args.seed
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def _write_resolved_config(args, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    with open(out / "run_config.json", "w", encoding="utf-8") as f:
        json.dump(resolved, f, ensure_ascii=False, indent=2, sort_keys=True, default=str)
        f.write("\n")


# ---------------------------------------------------------------------------
# tokenizer subcommands
# ---------------------------------------------------------------------------

def cmd_tokenizer(args):
    if args.action == "train":
        _require(args, "corpus", "vocab")
        lines = _read_lines(args.corpus)
        vocab = tokenizer.train_vocabulary(
            lines, target_size=args.target_size,
            max_piece_chars=args.max_piece_chars, seed_size=args.seed_size,
        )
        vocab.save(args.vocab)
        print(f"trained {len(vocab)} pieces -> {args.vocab}")
        return EXIT_OK
    if args.action == "encode":
        vocab = _load_vocab(args)
        _require(args, "input")
        for line in _read_lines(args.input):
            toks = tokenizer.encode(line, vocab)
            print("\t".join(toks.surface(i) for i in range(len(toks))))
        return EXIT_OK
    if args.action == "stats":
        vocab = _load_vocab(args)
        stats = tokenizer.vocab_stats(vocab)
        print("chars\tcount\tpct")
        for bucket in (1, 2, 3, 4, 5):
            count, pct = stats.histogram[bucket]
            label = "5+" if bucket == 5 else str(bucket)
            print(f"{label}\t{count}\t{pct:.1f}")
        return EXIT_OK
    raise UsageError(f"unknown tokenizer action: {args.action}")


# ---------------------------------------------------------------------------
# victim subcommands
# ---------------------------------------------------------------------------

def cmd_victim(args):
    if args.action == "train":
        vocab = _load_vocab(args)
        _require(args, "dataset", "model")
        if not Path(args.dataset).exists():
            raise UsageError(f"dataset not found: {args.dataset}")
        examples = victim_mod.load_dataset(args.dataset)
        model = victim_mod.train_toy_victim(
            examples, vocab, epochs=args.epochs,
            learning_rate=args.learning_rate, l2=args.l2,
        )
        correct = sum(
            model.score(ex.text).predicted == ex.label for ex in examples
        )
        model.save(args.model)
        print(f"train accuracy {correct / len(examples):.4f} -> {args.model}")
        return EXIT_OK
    if args.action == "score":
        if not args.text:
            raise UsageError("--text must be non-empty")
        if (args.victim or "toy") == "toy":
            vocab = _load_vocab(args)
            victim = _build_victim(args, vocab)
        else:
            victim = _build_victim(args, None)
        dist = victim.score(args.text)
        print(json.dumps({"probs": dist.probs, "predicted": dist.predicted}))
        return EXIT_OK
    raise UsageError(f"unknown victim action: {args.action}")


# ---------------------------------------------------------------------------
# attack / eval subcommands
# ---------------------------------------------------------------------------

def _run_campaign(args, sweep=False):
    vocab = _load_vocab(args)
    _require(args, "dataset", "out")
    if not Path(args.dataset).exists():
        raise UsageError(f"dataset not found: {args.dataset}")
    examples = victim_mod.load_dataset(args.dataset)
    victim = _build_victim(args, vocab)
    generator = _build_generator(args, vocab)
    config = _attack_config(args)
    n = args.n_samples or len(examples)
    samples = evaluate.select_samples(examples, min(n, len(examples)), args.seed)
    _write_resolved_config(args, args.out)
    if sweep:
        ks = [int(x) for x in args.ks.split(",")]
        rows = evaluate.sweep_k(
            samples, victim, generator, vocab, ks, config,
            out_dir=args.out, workers=args.workers,
        )
        print("k\tsuccess_rate\tchange_rate")
        for k, sr, cr in rows:
            print(f"{k}\t{sr:.4f}\t{cr:.4f}")
    else:
        report = evaluate.run_campaign(
            samples, victim, generator, vocab, config,
            out_dir=args.out, workers=args.workers,
        )
        print(json.dumps(report.summary(), ensure_ascii=False, indent=2, sort_keys=True))
        if report.n_errors:
            completed = report.n_total - report.n_errors
            print(
                f"endpoint errors on {report.n_errors} examples; "
                f"{completed} completed examples preserved in {args.out}",
                file=sys.stderr,
            )
            return EXIT_RUNTIME
    return EXIT_OK


def cmd_attack(args):
    return _run_campaign(args, sweep=False)


def cmd_eval(args):
    return _run_campaign(args, sweep=args.action == "sweep")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="flat key=value config file; flags win")
    p.add_argument("--vocab")
    p.add_argument("--dataset")
    p.add_argument("--corpus")
    p.add_argument("--embeddings")
    p.add_argument("--model")
    p.add_argument("--victim", choices=["toy", "remote"])
    p.add_argument("--generator", choices=["count", "char", "embed", "remote"])
    p.add_argument("--endpoint")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--k", type=int, default=12)
    p.add_argument("--budget", type=int)
    p.add_argument("--n-samples", type=int, dest="n_samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")


def build_parser():
    parser = argparse.ArgumentParser(prog="pieceattack")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenizer")
    p.add_argument("action", choices=["train", "encode", "stats"])
    p.add_argument("--input")
    p.add_argument("--target-size", type=int, default=2000, dest="target_size")
    p.add_argument("--max-piece-chars", type=int, default=8, dest="max_piece_chars")
    p.add_argument("--seed-size", type=int, default=4000, dest="seed_size")
    _add_common(p)
    p.set_defaults(func=cmd_tokenizer)

    p = sub.add_parser("victim")
    p.add_argument("action", choices=["train", "score"])
    p.add_argument("--text")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--learning-rate", type=float, default=0.5, dest="learning_rate")
    p.add_argument("--l2", type=float, default=1e-4)
    _add_common(p)
    p.set_defaults(func=cmd_victim)

    p = sub.add_parser("attack")
    p.add_argument("action", choices=["run"])
    _add_common(p)
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval")
    p.add_argument("action", choices=["run", "sweep"])
    p.add_argument("--ks", default="1,4,12,48")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        args = _apply_config_file(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (VictimUnavailable, GeneratorUnavailable) as exc:
        print(f"endpoint error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except PieceAttackError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
