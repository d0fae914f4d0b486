#!/usr/bin/env python3
"""One full phased search on the surrogate landscape.

Watch the population grow a block per phase, fitness climb while the drop
rule stays quiet, and the warm-start chain accumulate training epochs in the
winner's model reference.
"""

from vlga.engine import GaConfig, GaEngine
from vlga.evaluators import BudgetLedger, EvalCache, SurrogateEvaluator
from vlga.journal import RunJournal
from vlga.search_space import SearchSpace

config = GaConfig(
    population_size=12,
    generations_per_phase=4,
    master_seed=2,
    max_phases=6,
)
journal = RunJournal(None)
ledger = BudgetLedger(None)
engine = GaEngine(config, SearchSpace(), SurrogateEvaluator(),
                  journal=journal, ledger=ledger)
outcome = engine.run()

print(f"{'phase':>5}  {'gen bests':<40}  {'phase best':>10}")
for record in outcome.history:
    bests = "  ".join(f"{max(v):.4f}" for v in record.per_generation_fitnesses)
    print(f"{record.phase_index:>5}  {bests:<40}  {record.best.fitness:>10.4f}")

best = outcome.best
print()
print(f"stopped: {outcome.stop_reason}")
print(f"best: {best.fitness:.4f} with {best.chromosome.layer_count} conv layers"
      f" after {best.chromosome.phase} growth phases")
print(f"model ref {best.model_ref} (the -e suffix counts warm-started epochs)")

evals = sum(1 for e in journal.events if e.kind == "individual_evaluated")
cached = sum(1 for e in journal.events
             if e.kind == "individual_evaluated" and e.data["cached"])
print(f"{evals} evaluations ({cached} served from cache),"
      f" {ledger.charged:.0f} epoch-units charged")
