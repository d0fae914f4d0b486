"""The phased variable-length GA.

A search runs phase by phase.  Within a phase every chromosome has the same
length and evolves through a fixed number of generations: evaluate, keep the
elite, let a few lucky others survive, mutate survivors, refill by uniform
crossover.  On a phase transition the whole next population extends the best
individual found so far, and each extension warm starts from that parent's
trained weights as long as its prefix genes are untouched.  The search ends
when a phase's best fitness drops more than the threshold below the best of
all earlier phases (or at the phase cap, or when the evaluation budget runs
out).

All randomness flows through one ``random.Random`` whose state is saved in
every checkpoint, so a resumed run replays the interrupted part of the search
decision for decision.
"""

from __future__ import annotations

import json
import math
import os
import random
from dataclasses import dataclass, field
from pathlib import Path

from .chromosome import (
    Chromosome,
    chromosome_hash,
    crossover,
    extend,
    from_dict as chromosome_from_dict,
    is_prefix_of,
    mutate,
    random_chromosome,
    to_dict as chromosome_to_dict,
)
from .evaluators import (
    BudgetExhausted,
    BudgetLedger,
    CachingEvaluator,
    EvalCache,
    EvalRequest,
    EvaluatorUnavailable,
)
from .journal import RunJournal
from .model_graph import (
    ArchitectureGraph,
    InvalidArchitecture,
    build_transfer_map,
    decode,
    graph_to_dict,
    with_transfer_map,
)
from .search_space import SearchSpace


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    generations_per_phase: int = 5
    elite_fraction: float = 0.5
    lucky_survival_prob: float = 0.2
    mutation_rate: float = 0.2
    fitness_epochs: int = 5
    stop_threshold: float = 0.01
    master_seed: int = 0
    max_phases: int = 50
    finalize_epochs: int = 0
    input_shape: tuple[int, int, int] = (32, 32, 3)
    num_classes: int = 10

    def __post_init__(self) -> None:
        if not isinstance(self.input_shape, tuple):
            object.__setattr__(self, "input_shape", tuple(self.input_shape))
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if self.generations_per_phase < 1:
            raise ValueError("generations_per_phase must be positive")
        if not 0.0 < self.elite_fraction <= 1.0:
            raise ValueError("elite_fraction must be in (0, 1]")
        for name in ("lucky_survival_prob", "mutation_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.fitness_epochs < 1:
            raise ValueError("fitness_epochs must be positive")
        if self.stop_threshold < 0.0:
            raise ValueError("stop_threshold must be non-negative")
        if self.max_phases < 0:
            raise ValueError("max_phases must be non-negative")
        if self.finalize_epochs < 0:
            raise ValueError("finalize_epochs must be non-negative")

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "generations_per_phase": self.generations_per_phase,
            "elite_fraction": self.elite_fraction,
            "lucky_survival_prob": self.lucky_survival_prob,
            "mutation_rate": self.mutation_rate,
            "fitness_epochs": self.fitness_epochs,
            "stop_threshold": self.stop_threshold,
            "master_seed": self.master_seed,
            "max_phases": self.max_phases,
            "finalize_epochs": self.finalize_epochs,
            "input_shape": list(self.input_shape),
            "num_classes": self.num_classes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GaConfig":
        data = dict(data)
        if "input_shape" in data:
            data["input_shape"] = tuple(data["input_shape"])
        return cls(**data)


@dataclass
class Individual:
    chromosome: Chromosome
    fitness: float | None = None
    model_ref: str | None = None

    def __post_init__(self) -> None:
        if self.fitness is not None and self.model_ref is None:
            raise ValueError("an evaluated individual must carry a model_ref")

    def to_dict(self) -> dict:
        return {
            "chromosome": chromosome_to_dict(self.chromosome),
            "fitness": self.fitness,
            "model_ref": self.model_ref,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Individual":
        return cls(
            chromosome=chromosome_from_dict(data["chromosome"]),
            fitness=data["fitness"],
            model_ref=data["model_ref"],
        )


@dataclass
class PhaseRecord:
    phase_index: int
    per_generation_fitnesses: list[list[float]]
    best: Individual

    def to_dict(self) -> dict:
        return {
            "phase_index": self.phase_index,
            "per_generation_fitnesses": self.per_generation_fitnesses,
            "best": self.best.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PhaseRecord":
        return cls(
            phase_index=data["phase_index"],
            per_generation_fitnesses=[list(v) for v in data["per_generation_fitnesses"]],
            best=Individual.from_dict(data["best"]),
        )


@dataclass
class SearchOutcome:
    best: Individual | None
    history: list[PhaseRecord]
    status: str
    stop_reason: str | None


def should_stop(history: list[PhaseRecord], threshold: float) -> bool:
    """Fitness-drop rule: the latest phase fell too far behind the best so far."""
    if len(history) < 2:
        return False
    previous_best = max(r.best.fitness for r in history[:-1])
    return previous_best - history[-1].best.fitness > threshold


@dataclass
class EvalContext:
    """Everything needed to score a list of individuals."""

    space: SearchSpace
    caching: CachingEvaluator
    epochs: int
    input_shape: tuple[int, int, int] = (32, 32, 3)
    num_classes: int = 10
    parent_best: Individual | None = None
    parent_graph: ArchitectureGraph | None = None
    journal: RunJournal | None = None
    journal_extra: dict = field(default_factory=dict)
    use_cache: bool = True


def build_request(chromosome: Chromosome, request_id: str, ctx: EvalContext) -> EvalRequest:
    """Serialize a chromosome for evaluation, warm starting when the parent
    best's genes survive as an untouched prefix.  Raises InvalidArchitecture
    for chromosomes that do not decode.
    """
    graph = decode(chromosome, ctx.input_shape, ctx.num_classes)
    warm_ref = None
    transfer_map: dict = {}
    if (
        ctx.parent_best is not None
        and ctx.parent_graph is not None
        and ctx.parent_best.model_ref is not None
        and is_prefix_of(ctx.parent_best.chromosome, chromosome)
    ):
        transfer_map = build_transfer_map(graph, ctx.parent_graph)
        if transfer_map:
            warm_ref = ctx.parent_best.model_ref
    return EvalRequest(
        request_id=request_id,
        graph=graph_to_dict(with_transfer_map(graph, transfer_map)),
        epochs=ctx.epochs,
        warm_start_from=warm_ref,
        transfer_map=transfer_map,
    )


def evaluate_individuals(
    population: list[Individual], ctx: EvalContext, id_prefix: str
) -> None:
    """Fill in fitness for every unevaluated individual, in population order.

    Undecodable chromosomes score 0 without touching the evaluator or the
    budget.  Per-request evaluator errors also score 0 and are journaled;
    EvaluatorUnavailable and BudgetExhausted propagate to the caller.
    """
    for index, ind in enumerate(population):
        if ind.fitness is not None:
            continue
        chash = chromosome_hash(ind.chromosome)
        entry = {
            **ctx.journal_extra,
            "index": index,
            "chromosome_hash": chash,
        }
        try:
            request = build_request(ind.chromosome, f"{id_prefix}i{index}", ctx)
        except InvalidArchitecture as exc:
            ind.fitness = 0.0
            ind.model_ref = f"invalid-{chash[:12]}"
            _journal(ctx, {**entry, "fitness": 0.0, "cost": 0.0, "cached": False,
                           "error": f"invalid architecture: {exc}"})
            continue
        result, cached = ctx.caching.evaluate(chash, request, use_cache=ctx.use_cache)
        if result.error is not None:
            ind.fitness = 0.0
            ind.model_ref = f"failed-{chash[:12]}"
            _journal(ctx, {**entry, "fitness": 0.0, "cost": result.cost_units,
                           "cached": cached, "error": result.error})
            continue
        ind.fitness = result.fitness
        ind.model_ref = result.model_ref
        _journal(ctx, {**entry, "fitness": result.fitness, "cost": result.cost_units,
                       "cached": cached, "error": None})


def _journal(ctx: EvalContext, data: dict) -> None:
    if ctx.journal is not None:
        ctx.journal.append("individual_evaluated", data)


def next_generation(
    population: list[Individual],
    config: GaConfig,
    space: SearchSpace,
    rng: random.Random,
) -> list[Individual]:
    """Breed one generation from a fully evaluated population.

    Sort by fitness (stable, so earlier individuals win ties), keep the top
    ceil(elite_fraction * p) unchanged, give every other individual an
    independent lucky chance, mutate each survivor with the configured
    probability (a mutated survivor loses its fitness and is re-scored), then
    refill to p children by uniform crossover over the survivors.
    """
    p = config.population_size
    ranked = sorted(population, key=lambda ind: -ind.fitness)
    elite_count = math.ceil(config.elite_fraction * p)
    survivors = list(ranked[:elite_count])
    for ind in ranked[elite_count:]:
        if rng.random() < config.lucky_survival_prob:
            survivors.append(ind)

    next_pop: list[Individual] = []
    for ind in survivors:
        if rng.random() < config.mutation_rate:
            next_pop.append(Individual(mutate(ind.chromosome, space, rng)))
        else:
            next_pop.append(ind)

    pool = list(next_pop)
    while len(next_pop) < p:
        mother = rng.choice(pool)
        father = rng.choice(pool)
        child = crossover(mother.chromosome, father.chromosome, rng)
        next_pop.append(Individual(child))
    return next_pop


class GaEngine:
    """Checkpointable state machine driving the phased search."""

    def __init__(
        self,
        config: GaConfig,
        space: SearchSpace,
        evaluator,
        *,
        journal: RunJournal | None = None,
        cache: EvalCache | None = None,
        ledger: BudgetLedger | None = None,
        checkpoint_path: str | Path | None = None,
    ):
        self.config = config
        self.space = space
        self.caching = CachingEvaluator(evaluator, cache=cache, ledger=ledger)
        self.journal = journal if journal is not None else RunJournal(None)
        self.checkpoint_path = Path(checkpoint_path) if checkpoint_path else None
        self.rng = random.Random(config.master_seed)
        self.population: list[Individual] = []
        self.phase_index = 0
        self.generation_index = 0
        self.phase_fitnesses: list[list[float]] = []
        self.phase_best: Individual | None = None
        self.history: list[PhaseRecord] = []
        self.parent_best: Individual | None = None
        self.parent_graph: ArchitectureGraph | None = None
        self.best: Individual | None = None
        self.status = "new"
        self.stop_reason: str | None = None

    # --- public API ---

    def run(self) -> SearchOutcome:
        try:
            if self.status == "new":
                self._start()
            while self.status == "running":
                self._run_generation()
        except BudgetExhausted:
            self._absorb_partial_phase()
            self._stop("budget_exhausted")
        if self.status == "stopped":
            self._finalize()
        return self.outcome()

    def outcome(self) -> SearchOutcome:
        return SearchOutcome(
            best=self.best,
            history=list(self.history),
            status=self.status,
            stop_reason=self.stop_reason,
        )

    # --- search steps ---

    def _start(self) -> None:
        self.journal.append("run_started", {
            "config": self.config.to_dict(),
            "space": self.space.to_dict(),
            "evaluator": getattr(self.caching.base, "name", type(self.caching.base).__name__),
        })
        self.population = [
            Individual(random_chromosome(self.space, 0, self.rng))
            for _ in range(self.config.population_size)
        ]
        self.journal.append("phase_started", {"phase_index": 0})
        self.status = "running"
        self.checkpoint()

    def _eval_context(self) -> EvalContext:
        return EvalContext(
            space=self.space,
            caching=self.caching,
            epochs=self.config.fitness_epochs,
            input_shape=self.config.input_shape,
            num_classes=self.config.num_classes,
            parent_best=self.parent_best,
            parent_graph=self.parent_graph,
            journal=self.journal,
            journal_extra={
                "phase": self.phase_index,
                "generation": self.generation_index,
            },
        )

    def _run_generation(self) -> None:
        assert len(self.population) == self.config.population_size
        evaluate_individuals(
            self.population,
            self._eval_context(),
            id_prefix=f"p{self.phase_index}g{self.generation_index}",
        )
        fitnesses = [ind.fitness for ind in self.population]
        self.phase_fitnesses.append(fitnesses)
        generation_best = max(self.population, key=lambda ind: ind.fitness)
        if self.phase_best is None or generation_best.fitness > self.phase_best.fitness:
            self.phase_best = generation_best
        self.journal.append("generation_completed", {
            "phase": self.phase_index,
            "generation": self.generation_index,
            "fitnesses": fitnesses,
            "best_fitness": self.phase_best.fitness,
        })
        self.generation_index += 1
        if self.generation_index < self.config.generations_per_phase:
            self.population = next_generation(
                self.population, self.config, self.space, self.rng
            )
            self.checkpoint()
        else:
            self._complete_phase()

    def _complete_phase(self) -> None:
        record = PhaseRecord(
            phase_index=self.phase_index,
            per_generation_fitnesses=self.phase_fitnesses,
            best=self.phase_best,
        )
        self.history.append(record)
        self.journal.append("phase_completed", {
            "phase_index": self.phase_index,
            "best": {
                "chromosome_hash": chromosome_hash(record.best.chromosome),
                "fitness": record.best.fitness,
                "model_ref": record.best.model_ref,
            },
        })
        if self.best is None or record.best.fitness > self.best.fitness:
            self.best = record.best

        if should_stop(self.history, self.config.stop_threshold):
            self._stop("fitness_drop")
            return
        if self.phase_index >= self.config.max_phases:
            self._stop("max_phases")
            return
        self._enter_next_phase(record.best)

    def _enter_next_phase(self, parent: Individual) -> None:
        self.parent_best = parent
        try:
            self.parent_graph = decode(
                parent.chromosome, self.config.input_shape, self.config.num_classes
            )
        except InvalidArchitecture:
            self.parent_graph = None
        self.population = [
            Individual(extend(parent.chromosome, self.space, self.rng))
            for _ in range(self.config.population_size)
        ]
        self.phase_index += 1
        self.generation_index = 0
        self.phase_fitnesses = []
        self.phase_best = None
        self.journal.append("phase_started", {"phase_index": self.phase_index})
        self.checkpoint()

    def _absorb_partial_phase(self) -> None:
        """Fold whatever got evaluated before the budget ran out into best."""
        candidates = [self.phase_best] + [
            ind for ind in self.population if ind.fitness is not None
        ]
        for candidate in candidates:
            if candidate is None:
                continue
            if self.best is None or candidate.fitness > self.best.fitness:
                self.best = candidate

    def _stop(self, reason: str) -> None:
        self.status = "stopped"
        self.stop_reason = reason
        self.journal.append("search_stopped", {"reason": reason})
        self.checkpoint()

    def _finalize(self) -> None:
        """Give the winner its longer training run, then close the journal."""
        best = self.best
        extra = self.config.finalize_epochs
        error = None
        if (
            best is not None
            and extra > 0
            and best.model_ref is not None
            and self.stop_reason != "budget_exhausted"
        ):
            error = self._extended_training(best, extra)
        self.journal.append("finalized", {
            "extra_epochs": extra,
            "error": error,
            "best": self._best_summary(),
        })
        self.status = "finished"
        self.checkpoint()

    def _extended_training(self, best: Individual, extra: int) -> str | None:
        """Warm start the best model from itself; returns an error note or None."""
        try:
            graph = decode(
                best.chromosome, self.config.input_shape, self.config.num_classes
            )
            transfer_map = build_transfer_map(graph, graph)
            request = EvalRequest(
                request_id="finalize",
                graph=graph_to_dict(with_transfer_map(graph, transfer_map)),
                epochs=extra,
                warm_start_from=best.model_ref,
                transfer_map=transfer_map,
            )
            result, _ = self.caching.evaluate(
                chromosome_hash(best.chromosome), request, use_cache=False
            )
        except (InvalidArchitecture, BudgetExhausted) as exc:
            return str(exc)
        if result.error is not None:
            return result.error
        self.best = Individual(
            chromosome=best.chromosome,
            fitness=result.fitness,
            model_ref=result.model_ref,
        )
        return None

    def _best_summary(self) -> dict | None:
        if self.best is None:
            return None
        return {
            "chromosome_hash": chromosome_hash(self.best.chromosome),
            "fitness": self.best.fitness,
            "model_ref": self.best.model_ref,
        }

    # --- checkpointing ---

    def checkpoint(self) -> None:
        if self.checkpoint_path is None:
            return
        state = self.state_dict()
        tmp = self.checkpoint_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(state, sort_keys=True))
        os.replace(tmp, self.checkpoint_path)

    def state_dict(self) -> dict:
        rng_state = self.rng.getstate()
        return {
            "config": self.config.to_dict(),
            "space": self.space.to_dict(),
            "rng_state": [rng_state[0], list(rng_state[1]), rng_state[2]],
            "population": [ind.to_dict() for ind in self.population],
            "phase_index": self.phase_index,
            "generation_index": self.generation_index,
            "phase_fitnesses": self.phase_fitnesses,
            "phase_best": self.phase_best.to_dict() if self.phase_best else None,
            "history": [record.to_dict() for record in self.history],
            "parent_best": self.parent_best.to_dict() if self.parent_best else None,
            "best": self.best.to_dict() if self.best else None,
            "cache": self.caching.cache.to_dict(),
            "ledger": self.caching.ledger.to_dict(),
            "journal_seq": self.journal.events[-1].seq if self.journal.events else 0,
            "status": self.status,
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def resume(
        cls,
        checkpoint_path: str | Path,
        evaluator,
        *,
        journal: RunJournal | None = None,
    ) -> "GaEngine":
        """Rebuild an engine from a checkpoint, truncating the journal back to
        the checkpoint's last event so re-executed work is not double-logged.
        """
        state = json.loads(Path(checkpoint_path).read_text())
        engine = cls(
            GaConfig.from_dict(state["config"]),
            SearchSpace.from_dict(state["space"]),
            evaluator,
            journal=journal,
            cache=EvalCache.from_dict(state["cache"]),
            ledger=BudgetLedger.from_dict(state["ledger"]),
            checkpoint_path=checkpoint_path,
        )
        raw_rng = state["rng_state"]
        engine.rng.setstate((raw_rng[0], tuple(raw_rng[1]), raw_rng[2]))
        engine.population = [Individual.from_dict(d) for d in state["population"]]
        engine.phase_index = state["phase_index"]
        engine.generation_index = state["generation_index"]
        engine.phase_fitnesses = [list(v) for v in state["phase_fitnesses"]]
        engine.phase_best = (
            Individual.from_dict(state["phase_best"]) if state["phase_best"] else None
        )
        engine.history = [PhaseRecord.from_dict(d) for d in state["history"]]
        engine.parent_best = (
            Individual.from_dict(state["parent_best"]) if state["parent_best"] else None
        )
        if engine.parent_best is not None:
            try:
                engine.parent_graph = decode(
                    engine.parent_best.chromosome,
                    engine.config.input_shape,
                    engine.config.num_classes,
                )
            except InvalidArchitecture:
                engine.parent_graph = None
        engine.best = Individual.from_dict(state["best"]) if state["best"] else None
        engine.status = state["status"]
        engine.stop_reason = state["stop_reason"]
        if engine.journal is not None and state["journal_seq"]:
            engine.journal.truncate_to(state["journal_seq"])
        return engine


def run_search(
    config: GaConfig,
    space: SearchSpace,
    evaluator,
    *,
    journal: RunJournal | None = None,
    cache: EvalCache | None = None,
    ledger: BudgetLedger | None = None,
    checkpoint_path: str | Path | None = None,
) -> SearchOutcome:
    engine = GaEngine(
        config, space, evaluator,
        journal=journal, cache=cache, ledger=ledger,
        checkpoint_path=checkpoint_path,
    )
    return engine.run()
