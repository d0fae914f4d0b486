"""Hyperparameter domains: gene sampling and exact search-space cardinality.

The search space assigns a finite choice list to every gene kind that can
appear in a chromosome.  Cardinality arithmetic is exact (Python big ints):
a two-layer starting block admits

    |activations| * (|channels| * |filters| * 2)^2 * 2 * 2 * 2

genotypes, and every later growth phase multiplies the total by the size of
one extension block.  Counting is over genotypes: genes behind a disabled
flag (pooling type without pooling, a second layer that is switched off)
still occupy their slots.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


class ConfigError(ValueError):
    """Raised for invalid search-space or run configuration."""


#: Gene kinds understood by the encoding, with boolean kinds drawing from
#: BOOLEAN_CHOICES and the rest from the corresponding SearchSpace list.
GENE_KINDS = (
    "out_channels",
    "filter_size",
    "batch_norm",
    "activation",
    "pooling_present",
    "pooling_type",
    "skip_connection",
    "include_layer_b",
)

BOOLEAN_CHOICES = (False, True)

_BOOLEAN_KINDS = frozenset(
    {"batch_norm", "pooling_present", "skip_connection", "include_layer_b"}
)


def _check_choices(name: str, values: tuple, *, positive: bool = False) -> None:
    if len(values) == 0:
        raise ConfigError(f"{name}: choice list must be non-empty")
    if len(set(values)) != len(values):
        raise ConfigError(f"{name}: choice list has duplicates: {values!r}")
    if positive and any(not isinstance(v, int) or v < 1 for v in values):
        raise ConfigError(f"{name}: choices must be positive integers: {values!r}")


@dataclass(frozen=True)
class SearchSpace:
    """Allowed values per gene kind.  Immutable; safe to share across workers."""

    output_channel_choices: tuple[int, ...] = (8, 16, 32, 64, 128, 256, 512)
    filter_size_choices: tuple[int, ...] = (1, 3, 5, 7, 9)
    activation_choices: tuple[str, ...] = ("relu", "tanh", "elu", "selu")
    pooling_choices: tuple[str, ...] = ("max", "average")

    def __post_init__(self) -> None:
        for field_name in (
            "output_channel_choices",
            "filter_size_choices",
            "activation_choices",
            "pooling_choices",
        ):
            value = getattr(self, field_name)
            if not isinstance(value, tuple):
                object.__setattr__(self, field_name, tuple(value))
        _check_choices("output_channel_choices", self.output_channel_choices, positive=True)
        _check_choices("filter_size_choices", self.filter_size_choices, positive=True)
        _check_choices("activation_choices", self.activation_choices)
        _check_choices("pooling_choices", self.pooling_choices)

    def domain(self, kind: str) -> tuple:
        """Choice list for a gene kind (booleans included)."""
        if kind in _BOOLEAN_KINDS:
            return BOOLEAN_CHOICES
        if kind == "out_channels":
            return self.output_channel_choices
        if kind == "filter_size":
            return self.filter_size_choices
        if kind == "activation":
            return self.activation_choices
        if kind == "pooling_type":
            return self.pooling_choices
        raise ConfigError(f"unknown gene field {kind!r}")

    def to_dict(self) -> dict:
        return {
            "output_channels": list(self.output_channel_choices),
            "filter_sizes": list(self.filter_size_choices),
            "activations": list(self.activation_choices),
            "pooling_types": list(self.pooling_choices),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SearchSpace":
        known = {
            "output_channels": "output_channel_choices",
            "filter_sizes": "filter_size_choices",
            "activations": "activation_choices",
            "pooling_types": "pooling_choices",
        }
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown search_space keys: {sorted(unknown)}")
        kwargs = {known[k]: tuple(v) for k, v in data.items()}
        return cls(**kwargs)


def gene_kind(field: str) -> str:
    """Kind of a gene field given either a bare kind or a dotted path."""
    kind = field.rsplit(".", 1)[-1]
    if kind not in GENE_KINDS:
        raise ConfigError(f"unknown gene field {field!r}")
    return kind


def sample_gene(space: SearchSpace, field: str, rng: random.Random):
    """Draw one value for ``field`` uniformly from its domain.

    ``field`` may be a bare gene kind ("filter_size") or a dotted chromosome
    path ("phase0.layer_a.filter_size").  Identical RNG states yield
    identical draws.
    """
    return rng.choice(space.domain(gene_kind(field)))


def _conv_layer_combos(space: SearchSpace) -> int:
    # out_channels x filter_size x batch_norm
    return len(space.output_channel_choices) * len(space.filter_size_choices) * 2


def phase0_space_size(space: SearchSpace) -> int:
    """Exact number of starting (two-layer) genotypes."""
    conv = _conv_layer_combos(space)
    activations = len(space.activation_choices)
    # pooling_present x pooling_type x skip_connection
    block = 2 * len(space.pooling_choices) * 2
    return activations * conv * conv * block


def extension_block_size(space: SearchSpace) -> int:
    """Exact number of genotypes for one growth block (include flag included)."""
    conv = _conv_layer_combos(space)
    block = 2 * len(space.pooling_choices) * 2
    return 2 * conv * conv * block


def total_space_size(space: SearchSpace, num_phases: int) -> int:
    """Exact genotype count after ``num_phases`` growth phases (0 = start only)."""
    if num_phases < 0:
        raise ValueError(f"num_phases must be >= 0, got {num_phases}")
    return phase0_space_size(space) * extension_block_size(space) ** num_phases
