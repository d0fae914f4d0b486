"""Budget-matched comparison strategies.

Every strategy spends the same abstract budget (cost units, one per training
epoch) through its own ledger and cache, and reports a trace of
(cumulative cost, best fitness so far) sampled at every evaluation that
actually charged the budget.  That makes final-best comparisons across
strategies an apples-to-apples read, the way wall-clock-matched experiments
compare methods.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace

from .chromosome import Chromosome, extend, mutate, random_chromosome, with_gene
from .engine import (
    EvalContext,
    GaConfig,
    GaEngine,
    Individual,
    evaluate_individuals,
    next_generation,
)
from .evaluators import BudgetExhausted, BudgetLedger, CachingEvaluator
from .journal import RunJournal
from .search_space import SearchSpace

STRATEGIES = ("vlga", "random", "classical", "mutation_only")

# generous stop for degenerate loops that stop consuming budget (all-cached
# or all-invalid streaks); normal runs never get near it
_MAX_IDLE_STEPS = 10_000


@dataclass
class BudgetedRun:
    strategy: str
    seed: int
    budget_units: float
    best_trace: list[tuple[float, float]]
    best_fitness: float
    best_individual: Individual | None
    evaluations: int
    charged: float

    def __post_init__(self) -> None:
        last_cost = 0.0
        last_fit = -1.0
        for cost, fitness in self.best_trace:
            if cost <= last_cost:
                raise ValueError("trace cost must be strictly increasing")
            if fitness < last_fit:
                raise ValueError("trace fitness must be non-decreasing")
            last_cost, last_fit = cost, fitness


def _trace_from_journal(journal: RunJournal) -> tuple[list[tuple[float, float]], float]:
    trace: list[tuple[float, float]] = []
    cumulative = 0.0
    best = 0.0
    for event in journal.events:
        if event.kind != "individual_evaluated":
            continue
        best = max(best, event.data["fitness"])
        cost = event.data["cost"]
        if cost > 0:
            cumulative += cost
            trace.append((cumulative, best))
    return trace, best


def _finish(strategy, seed, budget, journal, best_individual, ledger) -> BudgetedRun:
    trace, best = _trace_from_journal(journal)
    return BudgetedRun(
        strategy=strategy,
        seed=seed,
        budget_units=budget,
        best_trace=trace,
        best_fitness=best,
        best_individual=best_individual,
        evaluations=ledger.evaluations,
        charged=ledger.charged,
    )


def _candidate_ctx(space, base_evaluator, budget, epochs, journal) -> EvalContext:
    return EvalContext(
        space=space,
        caching=CachingEvaluator(base_evaluator, ledger=BudgetLedger(budget)),
        epochs=epochs,
        journal=journal,
    )


def achievable_length_combos(
    space: SearchSpace, layer_range: tuple[int, int]
) -> list[tuple[int, tuple[bool, ...]]]:
    """All (phase, include-layer-b flags) pairs whose layer count fits the range.

    Layer count is 2 for the starting block plus 1 or 2 per extension, so the
    flags decide where in the range a given phase lands.
    """
    lo, hi = layer_range
    if lo < 2:
        raise ValueError(f"minimum layer count is 2, got {lo}")
    if hi < lo:
        raise ValueError(f"empty layer range {layer_range}")
    combos: list[tuple[int, tuple[bool, ...]]] = []
    for phase in range(hi - 2 + 1):
        for flags in itertools.product((False, True), repeat=phase):
            layers = 2 + phase + sum(flags)
            if lo <= layers <= hi:
                combos.append((phase, flags))
    return combos


def random_search(
    space: SearchSpace,
    layer_range: tuple[int, int],
    budget: float,
    evaluator,
    rng: random.Random,
    *,
    seed: int = 0,
    fitness_epochs: int = 5,
) -> BudgetedRun:
    """Sample architectures uniformly over achievable lengths until the money runs out."""
    combos = achievable_length_combos(space, layer_range)
    journal = RunJournal(None)
    ctx = _candidate_ctx(space, evaluator, budget, fitness_epochs, journal)
    best: Individual | None = None
    step = 0
    idle = 0
    while ctx.caching.ledger.can_start() and idle < _MAX_IDLE_STEPS:
        phase, flags = combos[rng.randrange(len(combos))]
        chromosome = random_chromosome(space, phase, rng)
        for i, flag in enumerate(flags):
            chromosome = with_gene(chromosome, f"ext{i}.include_layer_b", flag)
        ind = Individual(chromosome)
        before = ctx.caching.ledger.charged
        evaluate_individuals([ind], ctx, id_prefix=f"s{step}")
        idle = idle + 1 if ctx.caching.ledger.charged == before else 0
        if best is None or ind.fitness > best.fitness:
            best = ind
        step += 1
    return _finish("random", seed, budget, journal, best, ctx.caching.ledger)


def classical_ga(
    space: SearchSpace,
    fixed_phase: int,
    cfg: GaConfig,
    budget: float,
    evaluator,
    rng: random.Random | None = None,
    *,
    seed: int = 0,
    epoch_multiplier: int = 16,
) -> BudgetedRun:
    """Fixed-length GA with long per-model training, run until budget exhaustion.

    Chromosomes stay at ``fixed_phase`` forever; there are no phases and no
    warm starts.  Each evaluation costs ``epoch_multiplier`` times the usual
    epochs, modeling long from-scratch training per candidate.
    """
    rng = rng if rng is not None else random.Random(cfg.master_seed)
    journal = RunJournal(None)
    epochs = cfg.fitness_epochs * epoch_multiplier
    ctx = _candidate_ctx(space, evaluator, budget, epochs, journal)
    population = [
        Individual(random_chromosome(space, fixed_phase, rng))
        for _ in range(cfg.population_size)
    ]
    best: Individual | None = None
    generation = 0
    while ctx.caching.ledger.can_start():
        ctx.journal_extra = {"generation": generation}
        try:
            evaluate_individuals(population, ctx, id_prefix=f"g{generation}")
        except BudgetExhausted:
            break
        for ind in population:
            if best is None or ind.fitness > best.fitness:
                best = ind
        population = next_generation(population, cfg, space, rng)
        generation += 1
    return _finish("classical", seed, budget, journal, best, ctx.caching.ledger)


def mutation_only_evolution(
    space: SearchSpace,
    population_size: int,
    budget: float,
    evaluator,
    rng: random.Random,
    *,
    seed: int = 0,
    fitness_epochs: int = 5,
    grow_probability: float | None = None,
) -> BudgetedRun:
    """Pairwise-tournament evolution with single mutations and no crossover.

    Starts from the shortest chromosomes.  Each step picks two individuals,
    kills the worse, and replaces it with a copy of the better carrying one
    mutation; the mutation is either a single gene change or, with
    probability 1/(gene fields + 1) by default, a grow step appending a
    random extension block.
    """
    if population_size < 2:
        raise ValueError("population_size must be at least 2")
    journal = RunJournal(None)
    ctx = _candidate_ctx(space, evaluator, budget, fitness_epochs, journal)
    population = [
        Individual(random_chromosome(space, 0, rng)) for _ in range(population_size)
    ]
    try:
        evaluate_individuals(population, ctx, id_prefix="init")
    except BudgetExhausted:
        pass
    best: Individual | None = None
    for ind in population:
        if ind.fitness is not None and (best is None or ind.fitness > best.fitness):
            best = ind

    step = 0
    idle = 0
    while ctx.caching.ledger.can_start() and idle < _MAX_IDLE_STEPS:
        i, j = rng.sample(range(population_size), 2)
        a, b = population[i], population[j]
        if (a.fitness, -i) >= (b.fitness, -j):
            winner, loser_index = a, j
        else:
            winner, loser_index = b, i
        child = _mutate_or_grow(winner.chromosome, space, rng, grow_probability)
        ind = Individual(child)
        before = ctx.caching.ledger.charged
        evaluate_individuals([ind], ctx, id_prefix=f"t{step}")
        idle = idle + 1 if ctx.caching.ledger.charged == before else 0
        population[loser_index] = ind
        if best is None or ind.fitness > best.fitness:
            best = ind
        step += 1
    return _finish("mutation_only", seed, budget, journal, best, ctx.caching.ledger)


def _mutate_or_grow(
    chromosome: Chromosome,
    space: SearchSpace,
    rng: random.Random,
    grow_probability: float | None,
) -> Chromosome:
    fields = 10 + 10 * chromosome.phase
    grow_p = grow_probability if grow_probability is not None else 1.0 / (fields + 1)
    if rng.random() < grow_p:
        return extend(chromosome, space, rng)
    return mutate(chromosome, space, rng)


def run_vlga_budgeted(
    space: SearchSpace,
    cfg: GaConfig,
    budget: float,
    evaluator,
    *,
    seed: int = 0,
) -> BudgetedRun:
    """The phased GA under the shared budget, traced like every other strategy."""
    journal = RunJournal(None)
    engine = GaEngine(
        replace(cfg, finalize_epochs=0),  # keep all budget inside the search
        space,
        evaluator,
        journal=journal,
        ledger=BudgetLedger(budget),
    )
    outcome = engine.run()
    return _finish("vlga", seed, budget, journal, outcome.best, engine.caching.ledger)


def run_strategy(
    strategy: str,
    space: SearchSpace,
    seed: int,
    budget: float,
    evaluator,
    *,
    ga_config: GaConfig | None = None,
    layer_range: tuple[int, int] = (2, 10),
    fixed_phase: int = 1,
    epoch_multiplier: int = 16,
) -> BudgetedRun:
    """Run one named strategy with per-seed randomness and a fresh ledger."""
    cfg = ga_config if ga_config is not None else GaConfig()
    cfg = replace(cfg, master_seed=seed)
    rng = random.Random(seed)
    if strategy == "vlga":
        return run_vlga_budgeted(space, cfg, budget, evaluator, seed=seed)
    if strategy == "random":
        return random_search(
            space, layer_range, budget, evaluator, rng,
            seed=seed, fitness_epochs=cfg.fitness_epochs,
        )
    if strategy == "classical":
        return classical_ga(
            space, fixed_phase, cfg, budget, evaluator, rng,
            seed=seed, epoch_multiplier=epoch_multiplier,
        )
    if strategy == "mutation_only":
        return mutation_only_evolution(
            space, cfg.population_size, budget, evaluator, rng,
            seed=seed, fitness_epochs=cfg.fitness_epochs,
        )
    raise ValueError(f"unknown strategy {strategy!r}, expected one of {STRATEGIES}")
