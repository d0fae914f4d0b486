"""Command-line front end: run a search, compare strategies, size the space.

Exit codes: 0 success, 1 configuration error, 2 evaluator failure (checkpoint
written), 3 interrupted (checkpoint written).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import shlex
import statistics
import sys
from dataclasses import replace
from pathlib import Path

from .baselines import STRATEGIES, run_strategy
from .config import RunConfig, load_run_config
from .engine import GaEngine
from .evaluators import EvaluatorError, SurrogateEvaluator
from .journal import RunJournal
from .model_graph import InvalidArchitecture, decode, graph_to_dict
from .search_space import ConfigError, phase0_space_size, total_space_size
from .worker_client import WorkerPool

#: Overrides the configured worker launch command when set.
WORKER_CMD_ENV = "VLGA_WORKER_CMD"

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_EVALUATOR = 2
EXIT_INTERRUPTED = 3


def _fmt(value: float) -> str:
    """Shortest exact decimal form; float() inverts it losslessly."""
    return repr(float(value))


# --- evaluator wiring ---

def _resolve_worker_cmd(args, cfg: RunConfig) -> tuple[str, ...]:
    if getattr(args, "worker_cmd", None):
        return tuple(shlex.split(args.worker_cmd))
    env = os.environ.get(WORKER_CMD_ENV)
    if env:
        return tuple(shlex.split(env))
    return cfg.evaluator.worker_cmd


def _make_evaluator(args, cfg: RunConfig):
    """Returns (evaluator, close callable)."""
    kind = getattr(args, "evaluator", None) or cfg.evaluator.kind
    if kind == "surrogate":
        return SurrogateEvaluator(cfg.evaluator.surrogate), lambda: None
    cmd = _resolve_worker_cmd(args, cfg)
    if not cmd:
        raise ConfigError(
            "external evaluator selected but no worker command given "
            f"(use --worker-cmd, ${WORKER_CMD_ENV}, or evaluator.worker_cmd)")
    pool = WorkerPool(
        list(cmd),
        size=cfg.evaluator.pool_size,
        dataset=cfg.evaluator.dataset,
        input_shape=cfg.ga.input_shape,
        num_classes=cfg.ga.num_classes,
        handshake_timeout=cfg.evaluator.handshake_timeout,
        eval_timeout=cfg.evaluator.eval_timeout,
    )
    pool.start()
    return pool, pool.shutdown


# --- report files ---

def _write_fitness_csv(path: Path, history) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phase", "generation", "best_fitness", "mean_fitness"])
        for record in history:
            for gen, fitnesses in enumerate(record.per_generation_fitnesses):
                writer.writerow([
                    record.phase_index,
                    gen,
                    _fmt(max(fitnesses)),
                    _fmt(sum(fitnesses) / len(fitnesses)),
                ])


def _write_best_json(path: Path, outcome, config) -> None:
    best = outcome.best
    payload = {
        "status": outcome.status,
        "stop_reason": outcome.stop_reason,
        "best": None,
    }
    if best is not None:
        entry = best.to_dict()
        try:
            graph = decode(best.chromosome, config.input_shape, config.num_classes)
            entry["graph"] = graph_to_dict(graph)
        except InvalidArchitecture:
            entry["graph"] = None
        payload["best"] = entry
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_trace_csv(path: Path, trace) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cost", "best_fitness"])
        for cost, fitness in trace:
            writer.writerow([_fmt(cost), _fmt(fitness)])


# --- subcommands ---

def cmd_search(args) -> int:
    try:
        cfg = load_run_config(args.config)
        ga = cfg.ga if args.seed is None else replace(cfg.ga, master_seed=args.seed)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        evaluator, close = _make_evaluator(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EvaluatorError as exc:
        print(f"evaluator failure: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out / "checkpoint.json"
    journal_path = out / "journal.jsonl"

    try:
        if args.resume:
            if not checkpoint_path.exists():
                print(f"error: no checkpoint at {checkpoint_path}", file=sys.stderr)
                return EXIT_CONFIG
            engine = GaEngine.resume(
                checkpoint_path, evaluator, journal=RunJournal.load(journal_path))
        else:
            journal_path.unlink(missing_ok=True)
            engine = GaEngine(
                ga, cfg.space, evaluator,
                journal=RunJournal(journal_path), checkpoint_path=checkpoint_path,
            )
        try:
            outcome = engine.run()
        except KeyboardInterrupt:
            # the last generation-boundary checkpoint is the resume point;
            # a mid-generation snapshot could not replay to the same journal
            print(f"interrupted; resume from {checkpoint_path}", file=sys.stderr)
            return EXIT_INTERRUPTED
        except EvaluatorError as exc:
            print(f"evaluator failure: {exc}; resume from {checkpoint_path}",
                  file=sys.stderr)
            return EXIT_EVALUATOR
    finally:
        close()

    _write_fitness_csv(out / "fitness.csv", outcome.history)
    _write_best_json(out / "best.json", outcome, engine.config)
    best = outcome.best
    if best is not None:
        print(f"best fitness {best.fitness:.6f} "
              f"({best.chromosome.layer_count} conv layers, "
              f"phase {best.chromosome.phase}); stop reason: {outcome.stop_reason}")
    else:
        print(f"no successful evaluations; stop reason: {outcome.stop_reason}")
    print(f"outputs in {out}")
    return EXIT_OK


def _parse_seeds(text: str) -> list[int]:
    if "," in text:
        return [int(part) for part in text.split(",") if part != ""]
    return list(range(int(text)))


def cmd_compare(args) -> int:
    try:
        cfg = load_run_config(args.config)
        compare = cfg.compare
        strategies = (tuple(s for s in args.strategies.split(",") if s)
                      if args.strategies else compare.strategies)
        unknown = [s for s in strategies if s not in STRATEGIES]
        if unknown:
            raise ConfigError(
                f"unknown strategies {unknown}; choose from {list(STRATEGIES)}")
        if not strategies:
            raise ConfigError("no strategies selected")
        seeds = _parse_seeds(args.seeds) if args.seeds else list(compare.seeds)
        if not seeds:
            raise ConfigError("no seeds selected")
        budget = args.budget if args.budget is not None else compare.budget_units
        if budget <= 0:
            raise ConfigError("budget must be positive")
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        evaluator, close = _make_evaluator(args, cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EvaluatorError as exc:
        print(f"evaluator failure: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    finals: dict[str, list[float]] = {s: [] for s in strategies}
    try:
        for strategy in strategies:
            for seed in seeds:
                run = run_strategy(
                    strategy, cfg.space, seed, budget, evaluator,
                    ga_config=cfg.ga,
                    layer_range=compare.layer_range,
                    fixed_phase=compare.fixed_phase,
                    epoch_multiplier=compare.epoch_multiplier,
                )
                _write_trace_csv(out / f"trace_{strategy}_s{seed}.csv",
                                 run.best_trace)
                finals[strategy].append(run.best_fitness)
    except EvaluatorError as exc:
        print(f"evaluator failure: {exc}", file=sys.stderr)
        return EXIT_EVALUATOR
    finally:
        close()

    with (out / "summary.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "runs", "mean_best", "min_best", "max_best"])
        for strategy in strategies:
            values = finals[strategy]
            writer.writerow([
                strategy, len(values),
                _fmt(statistics.fmean(values)),
                _fmt(min(values)), _fmt(max(values)),
            ])

    width = max(len(s) for s in strategies)
    for strategy in strategies:
        values = finals[strategy]
        print(f"{strategy:<{width}}  mean {statistics.fmean(values):.6f}  "
              f"min {min(values):.6f}  max {max(values):.6f}  ({len(values)} runs)")
    print(f"outputs in {out}")
    return EXIT_OK


def _parse_phases(text: str | None) -> list[int]:
    if not text:
        return list(range(7))
    if ".." in text:
        lo, hi = text.split("..", 1)
        phases = list(range(int(lo), int(hi) + 1))
    elif "," in text:
        phases = [int(part) for part in text.split(",") if part != ""]
    else:
        phases = list(range(int(text) + 1))
    if not phases or any(p < 0 for p in phases):
        raise ConfigError(f"phases must be non-negative: {text!r}")
    return phases


def cmd_space(args) -> int:
    try:
        cfg = load_run_config(args.config)
        phases = _parse_phases(args.phases)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for phase in phases:
        count = total_space_size(cfg.space, phase)
        print(f"phase {phase}: layers {2 + phase}..{2 + 2 * phase} "
              f"genotypes {count}")
    return EXIT_OK


# --- argument parsing ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vlga",
        description="Variable-length genetic search over CNN architectures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    search = sub.add_parser("search", help="run the phased search")
    search.add_argument("--config", help="YAML run configuration")
    search.add_argument("--out", required=True, help="output directory")
    search.add_argument("--seed", type=int, help="override ga.master_seed")
    search.add_argument("--evaluator", choices=["surrogate", "external"],
                        help="override evaluator.kind")
    search.add_argument("--worker-cmd",
                        help="external worker launch command (shell syntax); "
                             f"${WORKER_CMD_ENV} overrides the config too")
    search.add_argument("--resume", action="store_true",
                        help="resume from OUT/checkpoint.json")
    search.set_defaults(func=cmd_search)

    compare = sub.add_parser("compare", help="budget-matched strategy comparison")
    compare.add_argument("--config", help="YAML run configuration")
    compare.add_argument("--out", required=True, help="output directory")
    compare.add_argument("--strategies",
                         help=f"comma list from {','.join(STRATEGIES)}")
    compare.add_argument("--seeds",
                         help="a count N (runs seeds 0..N-1) or a comma list")
    compare.add_argument("--budget", type=float, help="epoch-units per run")
    compare.add_argument("--evaluator", choices=["surrogate", "external"])
    compare.add_argument("--worker-cmd")
    compare.set_defaults(func=cmd_compare)

    space = sub.add_parser("space", help="print exact search-space sizes")
    space.add_argument("--config", help="YAML run configuration")
    space.add_argument("--phases",
                       help="N (phases 0..N), a..b, or a comma list; default 0..6")
    space.set_defaults(func=cmd_space)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
