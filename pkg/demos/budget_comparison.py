#!/usr/bin/env python3
"""Four strategies, identical budgets, same landscape.

Every strategy pays for training epochs from the same kind of ledger, so the
comparison is compute-fair: the phased GA's edge has to come from reusing
structure, not from sneaking in extra evaluations.
"""

import statistics

from vlga.baselines import STRATEGIES, run_strategy
from vlga.evaluators import SurrogateEvaluator
from vlga.search_space import SearchSpace

BUDGET = 1500.0
SEEDS = range(5)

space = SearchSpace()
evaluator = SurrogateEvaluator()

results = {}
for strategy in STRATEGIES:
    finals = [run_strategy(strategy, space, seed, BUDGET, evaluator).best_fitness
              for seed in SEEDS]
    results[strategy] = finals

print(f"budget {BUDGET:.0f} epoch-units, {len(list(SEEDS))} seeds\n")
print(f"{'strategy':<15} {'mean':>8} {'min':>8} {'max':>8}")
for strategy, finals in sorted(results.items(),
                               key=lambda kv: -statistics.fmean(kv[1])):
    print(f"{strategy:<15} {statistics.fmean(finals):>8.4f}"
          f" {min(finals):>8.4f} {max(finals):>8.4f}")

print("\n(classical buys 16x longer training per evaluation, so it sees the")
print(" fewest candidates; random search sees the most but reuses nothing)")
