"""Command-line entry point for the trainer worker."""

from __future__ import annotations

import argparse
import sys

import torch

from .worker import TrainerWorker


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="vlga-worker",
        description="Architecture-graph trainer speaking newline-delimited "
                    "JSON on stdin/stdout.",
    )
    parser.add_argument("--smoke", action="store_true",
                        help="tiny dataset (500 train / 200 val images) for CI")
    parser.add_argument("--data-dir",
                        help="directory with the CIFAR-10 python batches; "
                             "falls back to a synthetic dataset if absent")
    parser.add_argument("--model-dir",
                        help="persist saved weights here (shared across workers); "
                             "default keeps them in memory")
    parser.add_argument("--seed", type=int, default=0,
                        help="torch seed for init, shuffling, dropout (default 0)")
    parser.add_argument("--batch-size", type=int, default=64,
                        help="minibatch size (default 64)")
    parser.add_argument("--lr", type=float, default=1e-3,
                        help="Adam learning rate (default 1e-3)")
    parser.add_argument("--threads", type=int, default=2,
                        help="torch CPU threads (default 2; evaluations are "
                             "parallelized across workers, not within one)")
    args = parser.parse_args(argv)

    torch.set_num_threads(args.threads)
    worker = TrainerWorker(
        smoke=args.smoke,
        data_dir=args.data_dir,
        model_dir=args.model_dir,
        seed=args.seed,
        batch_size=args.batch_size,
        learning_rate=args.lr,
    )
    return worker.run(sys.stdin, sys.stdout)


if __name__ == "__main__":
    sys.exit(main())
