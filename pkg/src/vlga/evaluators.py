"""Fitness evaluation: contract types, deterministic surrogate, cache, budget.

An evaluator is anything with ``evaluate(EvalRequest) -> EvalResult``.  The
surrogate here is a closed-form stand-in for short training runs: it rewards
depth with diminishing returns, gives every active gene a small fixed bonus
or penalty derived from a stable hash, and rewards accumulated training
epochs (which is what makes warm starting pay off).  It is exactly
reproducible, which the determinism and accounting tests rely on.

The cache remembers results per chromosome hash and epoch count so survivors
are never retrained, and the ledger charges only evaluations that actually
ran.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import re
import threading
from dataclasses import dataclass, field, replace

from .model_graph import InvalidArchitecture, graph_from_dict

PROTOCOL_VERSION = 1
COST_PER_EPOCH = 1.0


class EvaluatorError(Exception):
    pass


class ProtocolError(EvaluatorError):
    """The other end of the wire violated the message protocol."""


class EvaluatorUnavailable(EvaluatorError):
    """The evaluator cannot take requests at all (worker process gone)."""


class BudgetExhausted(Exception):
    pass


@dataclass(frozen=True)
class EvalRequest:
    request_id: str
    graph: dict
    epochs: int
    warm_start_from: str | None = None
    transfer_map: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be positive, got {self.epochs}")
        if (self.warm_start_from is None) != (not self.transfer_map):
            raise ValueError(
                "warm_start_from and a non-empty transfer_map go together"
            )

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "graph": self.graph,
            "epochs": self.epochs,
            "warm_start_from": self.warm_start_from,
            "transfer_map": self.transfer_map,
        }


@dataclass(frozen=True)
class EvalResult:
    request_id: str
    fitness: float
    model_ref: str | None
    cost_units: float
    error: str | None = None

    def __post_init__(self) -> None:
        if self.cost_units < 0:
            raise ValueError(f"cost_units must be non-negative, got {self.cost_units}")
        if self.error is None:
            if not 0.0 <= self.fitness <= 1.0:
                raise ValueError(f"fitness {self.fitness} outside [0, 1]")
            if self.model_ref is None:
                raise ValueError("successful result needs a model_ref")

    def to_dict(self) -> dict:
        return {
            "request_id": self.request_id,
            "fitness": self.fitness,
            "model_ref": self.model_ref,
            "cost_units": self.cost_units,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalResult":
        return cls(
            request_id=data["request_id"],
            fitness=float(data["fitness"]),
            model_ref=data["model_ref"],
            cost_units=float(data["cost_units"]),
            error=data.get("error"),
        )


# --- deterministic surrogate ---------------------------------------------------

@dataclass(frozen=True)
class SurrogateParams:
    base: float = 0.1
    depth_gain: float = 0.5
    depth_rate: float = 0.25
    gene_amplitude: float = 0.05
    epoch_gain: float = 0.2
    epoch_rate: float = 0.3
    noise_sigma: float = 0.0
    landscape_seed: int = 0

    def to_dict(self) -> dict:
        return {
            "base": self.base,
            "depth_gain": self.depth_gain,
            "depth_rate": self.depth_rate,
            "gene_amplitude": self.gene_amplitude,
            "epoch_gain": self.epoch_gain,
            "epoch_rate": self.epoch_rate,
            "noise_sigma": self.noise_sigma,
            "landscape_seed": self.landscape_seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SurrogateParams":
        return cls(**data)


def active_genes_from_graph(graph: dict) -> list[tuple[str, object]]:
    """Recover the expressed gene settings from a serialized graph.

    Genes hidden behind a disabled flag (a pooling type with no pooling, layer
    b settings when layer b is off) have no node and therefore do not appear;
    the flags themselves always do.
    """
    nodes = {n["id"]: n for n in graph["nodes"]}
    block_count = 0
    while f"block{block_count}/conv_a" in nodes:
        block_count += 1
    if block_count == 0:
        raise ValueError("graph has no block0/conv_a node")

    genes: list[tuple[str, object]] = []
    activation = None
    for node in graph["nodes"]:
        if node["op"] == "activation":
            activation = node["attrs"]["kind"]
            break
    genes.append(("phase0.activation", activation))

    for i in range(block_count):
        prefix = "phase0" if i == 0 else f"ext{i - 1}"
        has_b = f"block{i}/conv_b" in nodes
        if i > 0:
            genes.append((f"{prefix}.include_layer_b", has_b))

        conv_a = nodes[f"block{i}/conv_a"]["attrs"]
        genes.append((f"{prefix}.layer_a.out_channels", conv_a["out_channels"]))
        genes.append((f"{prefix}.layer_a.filter_size", conv_a["filter_size"]))
        genes.append((f"{prefix}.layer_a.batch_norm", f"block{i}/bn_a" in nodes))

        if has_b:
            conv_b = nodes[f"block{i}/conv_b"]["attrs"]
            genes.append((f"{prefix}.layer_b.out_channels", conv_b["out_channels"]))
            genes.append((f"{prefix}.layer_b.filter_size", conv_b["filter_size"]))
            genes.append((f"{prefix}.layer_b.batch_norm", f"block{i}/bn_b" in nodes))

        pooled = f"block{i}/pool" in nodes
        genes.append((f"{prefix}.pooling_present", pooled))
        if pooled:
            genes.append((f"{prefix}.pooling_type", nodes[f"block{i}/pool"]["attrs"]["kind"]))
        genes.append((f"{prefix}.skip_connection", f"block{i}/skip_conv" in nodes))
    return genes


def gene_hash_value(path: str, value: object, amplitude: float, seed: int) -> float:
    """Stable per-gene contribution in [-amplitude, +amplitude]."""
    text = f"{seed}|{path}|{json.dumps(value, sort_keys=True)}"
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    unit = int.from_bytes(digest[:8], "big") / 2**64
    return (2.0 * unit - 1.0) * amplitude


_MODEL_REF_EPOCHS = re.compile(r"-e(\d+)$")


def warm_start_epochs(model_ref: str | None) -> int:
    """Epochs already trained into the model a ref points at (0 if unknown)."""
    if model_ref is None:
        return 0
    match = _MODEL_REF_EPOCHS.search(model_ref)
    return int(match.group(1)) if match else 0


def surrogate_evaluate(req: EvalRequest, params: SurrogateParams) -> EvalResult:
    """Score a request analytically; see the module docstring for the shape.

    fitness = clamp(base + depth + genes + epochs, 0, 1) with
    depth  = depth_gain * (1 - exp(-depth_rate * conv_layer_count))
    genes  = mean-per-layer sum of per-gene hash values in [-amplitude, +amplitude]
    epochs = epoch_gain * (1 - exp(-epoch_rate * cumulative_epochs))
    where cumulative_epochs counts the warm-started parent's training too.
    """
    try:
        graph_from_dict(req.graph)
        genes = active_genes_from_graph(req.graph)
    except (InvalidArchitecture, KeyError, TypeError, ValueError) as exc:
        return EvalResult(
            request_id=req.request_id, fitness=0.0, model_ref=None,
            cost_units=0.0, error=f"invalid graph: {exc}",
        )

    layers = sum(1 for n in req.graph["nodes"] if n["op"] == "conv")
    if layers == 0:
        return EvalResult(
            request_id=req.request_id, fitness=0.0, model_ref=None,
            cost_units=0.0, error="graph has no conv layers",
        )

    cumulative = warm_start_epochs(req.warm_start_from) + req.epochs
    depth_term = params.depth_gain * (1.0 - math.exp(-params.depth_rate * layers))
    gene_term = sum(
        gene_hash_value(path, value, params.gene_amplitude, params.landscape_seed)
        for path, value in genes
    ) / layers
    epoch_term = params.epoch_gain * (1.0 - math.exp(-params.epoch_rate * cumulative))
    fitness = params.base + depth_term + gene_term + epoch_term

    if params.noise_sigma > 0.0:
        content = json.dumps(
            [req.graph, req.epochs, req.warm_start_from], sort_keys=True
        )
        seed_text = f"{params.landscape_seed}|noise|{content}"
        seed = int.from_bytes(hashlib.sha256(seed_text.encode()).digest()[:8], "big")
        fitness += random.Random(seed).gauss(0.0, params.noise_sigma)

    fitness = min(1.0, max(0.0, fitness))
    graph_tag = hashlib.sha256(
        json.dumps(req.graph["nodes"], sort_keys=True).encode()
    ).hexdigest()[:12]
    return EvalResult(
        request_id=req.request_id,
        fitness=fitness,
        model_ref=f"sur-{graph_tag}-e{cumulative}",
        cost_units=req.epochs * COST_PER_EPOCH,
    )


class SurrogateEvaluator:
    name = "surrogate"

    def __init__(self, params: SurrogateParams | None = None):
        self.params = params or SurrogateParams()

    def evaluate(self, req: EvalRequest) -> EvalResult:
        return surrogate_evaluate(req, self.params)


# --- cache and budget ----------------------------------------------------------

class EvalCache:
    """Thread-safe map (chromosome hash, epochs) -> EvalResult.

    A lookup for n epochs is satisfied by any stored result trained for at
    least n epochs; the least-trained such result is returned so repeated
    lookups stay stable as deeper entries appear.
    """

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._store: dict[str, dict[int, EvalResult]] = {}

    def store(self, chromosome_hash: str, epochs: int, result: EvalResult) -> None:
        with self._lock:
            self._store.setdefault(chromosome_hash, {})[epochs] = result

    def lookup(self, chromosome_hash: str, epochs: int) -> EvalResult | None:
        with self._lock:
            by_epochs = self._store.get(chromosome_hash)
            if not by_epochs:
                return None
            eligible = [e for e in by_epochs if e >= epochs]
            if not eligible:
                return None
            return by_epochs[min(eligible)]

    def __len__(self) -> int:
        with self._lock:
            return sum(len(v) for v in self._store.values())

    def to_dict(self) -> dict:
        with self._lock:
            return {
                chash: {str(e): res.to_dict() for e, res in by_epochs.items()}
                for chash, by_epochs in self._store.items()
            }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalCache":
        cache = cls()
        for chash, by_epochs in data.items():
            for epochs, res in by_epochs.items():
                cache.store(chash, int(epochs), EvalResult.from_dict(res))
        return cache


class BudgetLedger:
    """Accumulates evaluation cost against an optional budget.

    The overrun rule: an evaluation may start whenever any budget remains, so
    the final evaluation may push the total past the budget.
    """

    def __init__(self, budget: float | None = None):
        self.budget = budget
        self.charged = 0.0
        self.evaluations = 0

    def can_start(self) -> bool:
        return self.budget is None or self.charged < self.budget

    def charge(self, cost: float) -> None:
        if cost < 0:
            raise ValueError(f"cost must be non-negative, got {cost}")
        self.charged += cost
        self.evaluations += 1

    @property
    def remaining(self) -> float | None:
        if self.budget is None:
            return None
        return self.budget - self.charged

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "charged": self.charged,
            "evaluations": self.evaluations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BudgetLedger":
        ledger = cls(data["budget"])
        ledger.charged = data["charged"]
        ledger.evaluations = data["evaluations"]
        return ledger


class CachingEvaluator:
    """Evaluator wrapper adding the cache and the budget ledger.

    ``evaluate`` returns (result, served_from_cache).  Cache hits cost
    nothing and are re-stamped with the caller's request id; misses go to the
    wrapped evaluator and are charged.  Only error-free results are cached.
    """

    def __init__(self, base, cache: EvalCache | None = None,
                 ledger: BudgetLedger | None = None):
        self.base = base
        self.cache = cache if cache is not None else EvalCache()
        self.ledger = ledger if ledger is not None else BudgetLedger()

    def evaluate(self, chromosome_hash: str, req: EvalRequest,
                 use_cache: bool = True) -> tuple[EvalResult, bool]:
        if use_cache:
            hit = self.cache.lookup(chromosome_hash, req.epochs)
            if hit is not None:
                return replace(hit, request_id=req.request_id, cost_units=0.0), True
        if not self.ledger.can_start():
            raise BudgetExhausted(
                f"budget {self.ledger.budget} exhausted after "
                f"{self.ledger.evaluations} evaluations"
            )
        result = self.base.evaluate(req)
        self.ledger.charge(result.cost_units)
        if result.error is None:
            self.cache.store(chromosome_hash, req.epochs, result)
        return result, False
