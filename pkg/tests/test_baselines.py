"""Budget-matched strategies: cost accounting, traces, and reproducibility."""

import random

import pytest

from vlga.baselines import (
    BudgetedRun,
    achievable_length_combos,
    classical_ga,
    mutation_only_evolution,
    random_search,
    run_strategy,
    run_vlga_budgeted,
)
from vlga.engine import GaConfig
from vlga.evaluators import SurrogateEvaluator
from vlga.search_space import SearchSpace

SPACE = SearchSpace()


class RecordingEvaluator:
    """Surrogate wrapper remembering the conv-layer count of every request."""

    name = "surrogate"

    def __init__(self):
        self.inner = SurrogateEvaluator()
        self.layer_counts = []

    def evaluate(self, req):
        self.layer_counts.append(
            sum(1 for n in req.graph["nodes"] if n["op"] == "conv")
        )
        return self.inner.evaluate(req)


def test_achievable_combos_cover_the_layer_range():
    combos = achievable_length_combos(SPACE, (2, 10))
    assert len(combos) == 88
    layer_counts = {2 + phase + sum(flags) for phase, flags in combos}
    assert layer_counts == set(range(2, 11))
    assert (0, ()) in combos
    assert all(2 <= 2 + p + sum(f) <= 10 for p, f in combos)


def test_achievable_combos_validation():
    with pytest.raises(ValueError):
        achievable_length_combos(SPACE, (1, 10))
    with pytest.raises(ValueError):
        achievable_length_combos(SPACE, (5, 4))
    assert achievable_length_combos(SPACE, (2, 2)) == [(0, ())]


def test_trace_invariants_are_enforced():
    with pytest.raises(ValueError):
        BudgetedRun("random", 0, 10.0, [(5.0, 0.5), (5.0, 0.6)],
                    0.6, None, 2, 10.0)
    with pytest.raises(ValueError):
        BudgetedRun("random", 0, 10.0, [(5.0, 0.5), (10.0, 0.4)],
                    0.5, None, 2, 10.0)


# --- random search ---

def test_random_search_single_evaluation_budget():
    run = random_search(SPACE, (2, 10), 5.0, SurrogateEvaluator(), random.Random(0))
    assert len(run.best_trace) == 1
    assert run.evaluations == 1
    assert run.charged == 5.0
    assert run.best_fitness == run.best_trace[0][1]


def test_random_search_reproducible():
    a = random_search(SPACE, (2, 10), 100.0, SurrogateEvaluator(), random.Random(7))
    b = random_search(SPACE, (2, 10), 100.0, SurrogateEvaluator(), random.Random(7))
    assert a.best_trace == b.best_trace
    assert a.best_fitness == b.best_fitness


def test_random_search_respects_layer_range():
    recorder = RecordingEvaluator()
    random_search(SPACE, (3, 6), 300.0, recorder, random.Random(1))
    assert recorder.layer_counts
    assert all(3 <= n <= 6 for n in recorder.layer_counts)


def test_random_search_overrun_bounded():
    run = random_search(SPACE, (2, 10), 42.0, SurrogateEvaluator(), random.Random(2))
    assert run.charged <= 42.0 + 5.0
    assert run.best_individual is not None
    assert run.best_individual.fitness == run.best_fitness


# --- classical fixed-length GA ---

def test_classical_keeps_length_fixed():
    recorder = RecordingEvaluator()
    cfg = GaConfig(population_size=6, master_seed=3)
    classical_ga(SPACE, 0, cfg, 2000.0, recorder, random.Random(3))
    # phase 0 decodes to exactly two conv layers
    assert recorder.layer_counts
    assert all(n == 2 for n in recorder.layer_counts)


def test_classical_population_50_stops_in_second_generation():
    cfg = GaConfig(population_size=50, master_seed=5)
    run = classical_ga(SPACE, 1, cfg, 75 * 80.0, SurrogateEvaluator(),
                       random.Random(5))
    assert run.evaluations == 75
    assert run.charged == 6000.0
    # 50 evaluations fill the first generation; the rest die partway through
    # the second
    assert 50 < run.evaluations < 50 + 50


def test_classical_reproducible():
    cfg = GaConfig(population_size=10, master_seed=6)
    a = classical_ga(SPACE, 1, cfg, 4000.0, SurrogateEvaluator())
    b = classical_ga(SPACE, 1, cfg, 4000.0, SurrogateEvaluator())
    assert a.best_trace == b.best_trace


def test_classical_charges_multiplied_epochs():
    cfg = GaConfig(population_size=4, master_seed=7)
    run = classical_ga(SPACE, 1, cfg, 500.0, SurrogateEvaluator(), random.Random(7))
    assert all(cost % 80.0 == 0.0 for cost, _ in run.best_trace)


# --- mutation-only evolution ---

def test_mutation_only_single_tournament_budget():
    # population of 4 costs 20 units up front; 5 more covers exactly 1 child
    run = mutation_only_evolution(SPACE, 4, 25.0, SurrogateEvaluator(),
                                  random.Random(8))
    assert run.evaluations == 5
    assert len(run.best_trace) == 5


def test_mutation_only_without_grow_stays_short():
    recorder = RecordingEvaluator()
    mutation_only_evolution(SPACE, 4, 300.0, recorder, random.Random(9),
                            grow_probability=0.0)
    assert all(n == 2 for n in recorder.layer_counts)


def test_mutation_only_grows_over_time():
    recorder = RecordingEvaluator()
    mutation_only_evolution(SPACE, 6, 1200.0, recorder, random.Random(10))
    assert max(recorder.layer_counts) > 2


def test_mutation_only_reproducible():
    a = mutation_only_evolution(SPACE, 6, 400.0, SurrogateEvaluator(),
                                random.Random(11))
    b = mutation_only_evolution(SPACE, 6, 400.0, SurrogateEvaluator(),
                                random.Random(11))
    assert a.best_trace == b.best_trace


# --- the phased GA under budget, and the dispatcher ---

def test_vlga_budgeted_accounting():
    cfg = GaConfig(population_size=8, generations_per_phase=3, master_seed=12)
    run = run_vlga_budgeted(SPACE, cfg, 300.0, SurrogateEvaluator())
    assert run.charged <= 300.0 + 5.0
    assert run.best_trace
    assert run.best_fitness == run.best_trace[-1][1]
    assert run.best_individual is not None


def test_all_strategies_share_cost_model():
    for strategy in ("vlga", "random", "mutation_only"):
        run = run_strategy(strategy, SPACE, 1, 200.0, SurrogateEvaluator(),
                           ga_config=GaConfig(population_size=6,
                                              generations_per_phase=2))
        assert run.charged <= 200.0 + 5.0, strategy
        assert run.strategy in ("vlga", "random", "mutation_only")
    classical = run_strategy("classical", SPACE, 1, 500.0, SurrogateEvaluator(),
                             ga_config=GaConfig(population_size=4))
    assert classical.charged <= 500.0 + 80.0


def test_run_strategy_is_seed_reproducible():
    for strategy in ("vlga", "random", "classical", "mutation_only"):
        a = run_strategy(strategy, SPACE, 21, 300.0, SurrogateEvaluator(),
                         ga_config=GaConfig(population_size=6,
                                            generations_per_phase=2))
        b = run_strategy(strategy, SPACE, 21, 300.0, SurrogateEvaluator(),
                         ga_config=GaConfig(population_size=6,
                                            generations_per_phase=2))
        assert a.best_trace == b.best_trace, strategy


def test_run_strategy_rejects_unknown_name():
    with pytest.raises(ValueError):
        run_strategy("annealing", SPACE, 0, 100.0, SurrogateEvaluator())


def test_traces_monotone_for_every_strategy():
    for strategy in ("vlga", "random", "classical", "mutation_only"):
        run = run_strategy(strategy, SPACE, 5, 400.0, SurrogateEvaluator(),
                           ga_config=GaConfig(population_size=5,
                                              generations_per_phase=2))
        costs = [c for c, _ in run.best_trace]
        fits = [f for _, f in run.best_trace]
        assert costs == sorted(costs) and len(set(costs)) == len(costs)
        assert fits == sorted(fits)
