"""Variable-length chromosome encoding and the genetic operators on it.

A chromosome is a starting block (two convolutional layers plus a model-wide
activation gene) followed by zero or more extension blocks, one per growth
phase.  Every block keeps all of its gene slots populated even when a flag
disables the structure they describe (a pooling type with pooling off, a
second layer that is switched off): this keeps chromosomes of equal phase
field-aligned, which uniform crossover relies on.

Operators never modify their inputs; all types are frozen dataclasses.
"""

from __future__ import annotations

import hashlib
import json
import random
import warnings
from dataclasses import dataclass, replace

from .search_space import SearchSpace, gene_kind

PHASE0_FIELDS = (
    "activation",
    "layer_a.out_channels",
    "layer_a.filter_size",
    "layer_a.batch_norm",
    "layer_b.out_channels",
    "layer_b.filter_size",
    "layer_b.batch_norm",
    "pooling_present",
    "pooling_type",
    "skip_connection",
)

EXTENSION_FIELDS = (
    "include_layer_b",
    "layer_a.out_channels",
    "layer_a.filter_size",
    "layer_a.batch_norm",
    "layer_b.out_channels",
    "layer_b.filter_size",
    "layer_b.batch_norm",
    "pooling_present",
    "pooling_type",
    "skip_connection",
)


@dataclass(frozen=True)
class ConvLayerGenes:
    out_channels: int
    filter_size: int
    batch_norm: bool


@dataclass(frozen=True)
class Phase0Block:
    activation: str
    layer_a: ConvLayerGenes
    layer_b: ConvLayerGenes
    pooling_present: bool
    pooling_type: str
    skip_connection: bool


@dataclass(frozen=True)
class ExtensionBlock:
    include_layer_b: bool
    layer_a: ConvLayerGenes
    layer_b: ConvLayerGenes
    pooling_present: bool
    pooling_type: str
    skip_connection: bool


@dataclass(frozen=True)
class Chromosome:
    phase0: Phase0Block
    extensions: tuple[ExtensionBlock, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.extensions, tuple):
            object.__setattr__(self, "extensions", tuple(self.extensions))

    @property
    def phase(self) -> int:
        return len(self.extensions)

    @property
    def layer_count(self) -> int:
        return 2 + sum(1 + int(ext.include_layer_b) for ext in self.extensions)


def gene_fields(chromosome: Chromosome) -> list[str]:
    """All gene field paths of a chromosome, in canonical order."""
    fields = [f"phase0.{name}" for name in PHASE0_FIELDS]
    for i in range(len(chromosome.extensions)):
        fields.extend(f"ext{i}.{name}" for name in EXTENSION_FIELDS)
    return fields


def _split_path(path: str) -> tuple[object, str]:
    """(block, field-within-block) for a gene path like ``ext2.layer_a.filter_size``."""
    block_name, field = path.split(".", 1)
    if block_name == "phase0":
        return "phase0", field
    if block_name.startswith("ext"):
        return int(block_name[3:]), field
    raise KeyError(path)


def get_gene(chromosome: Chromosome, path: str):
    block_key, field = _split_path(path)
    block = chromosome.phase0 if block_key == "phase0" else chromosome.extensions[block_key]
    if field.startswith("layer_"):
        layer_name, attr = field.split(".", 1)
        return getattr(getattr(block, layer_name), attr)
    return getattr(block, field)


def with_gene(chromosome: Chromosome, path: str, value) -> Chromosome:
    """Copy of ``chromosome`` with one gene replaced."""
    block_key, field = _split_path(path)
    block = chromosome.phase0 if block_key == "phase0" else chromosome.extensions[block_key]
    if field.startswith("layer_"):
        layer_name, attr = field.split(".", 1)
        layer = replace(getattr(block, layer_name), **{attr: value})
        new_block = replace(block, **{layer_name: layer})
    else:
        new_block = replace(block, **{field: value})
    if block_key == "phase0":
        return replace(chromosome, phase0=new_block)
    exts = list(chromosome.extensions)
    exts[block_key] = new_block
    return replace(chromosome, extensions=tuple(exts))


def _random_layer(space: SearchSpace, rng: random.Random) -> ConvLayerGenes:
    return ConvLayerGenes(
        out_channels=rng.choice(space.output_channel_choices),
        filter_size=rng.choice(space.filter_size_choices),
        batch_norm=rng.choice((False, True)),
    )


def random_phase0(space: SearchSpace, rng: random.Random) -> Phase0Block:
    return Phase0Block(
        activation=rng.choice(space.activation_choices),
        layer_a=_random_layer(space, rng),
        layer_b=_random_layer(space, rng),
        pooling_present=rng.choice((False, True)),
        pooling_type=rng.choice(space.pooling_choices),
        skip_connection=rng.choice((False, True)),
    )


def random_extension(space: SearchSpace, rng: random.Random) -> ExtensionBlock:
    return ExtensionBlock(
        include_layer_b=rng.choice((False, True)),
        layer_a=_random_layer(space, rng),
        layer_b=_random_layer(space, rng),
        pooling_present=rng.choice((False, True)),
        pooling_type=rng.choice(space.pooling_choices),
        skip_connection=rng.choice((False, True)),
    )


def random_chromosome(space: SearchSpace, phase: int, rng: random.Random) -> Chromosome:
    """Fresh chromosome with every gene drawn independently from the space."""
    if phase < 0:
        raise ValueError(f"phase must be >= 0, got {phase}")
    return Chromosome(
        phase0=random_phase0(space, rng),
        extensions=tuple(random_extension(space, rng) for _ in range(phase)),
    )


def mutate(chromosome: Chromosome, space: SearchSpace, rng: random.Random) -> Chromosome:
    """Change exactly one gene to a different value from its domain.

    Fields whose domain is a singleton are never selected; if every domain is
    a singleton the chromosome is returned unchanged with a warning.
    """
    candidates = [
        path for path in gene_fields(chromosome)
        if len(space.domain(gene_kind(path))) > 1
    ]
    if not candidates:
        warnings.warn("all gene domains are singletons; mutation is a no-op")
        return chromosome
    path = rng.choice(candidates)
    current = get_gene(chromosome, path)
    alternatives = [v for v in space.domain(gene_kind(path)) if v != current]
    return with_gene(chromosome, path, rng.choice(alternatives))


def crossover(a: Chromosome, b: Chromosome, rng: random.Random) -> Chromosome:
    """Uniform crossover: each gene comes from either parent with probability 1/2."""
    if a.phase != b.phase:
        raise ValueError(
            f"crossover requires equal phases, got {a.phase} and {b.phase}"
        )
    child = a
    for path in gene_fields(a):
        if rng.random() < 0.5:
            continue  # keep a's value
        child = with_gene(child, path, get_gene(b, path))
    return child


def extend(best: Chromosome, space: SearchSpace, rng: random.Random) -> Chromosome:
    """Grow by one phase: copy ``best`` verbatim and append a random block."""
    return Chromosome(
        phase0=best.phase0,
        extensions=best.extensions + (random_extension(space, rng),),
    )


def is_prefix_of(prefix: Chromosome, chromosome: Chromosome) -> bool:
    """True if ``chromosome`` extends ``prefix`` gene-for-gene."""
    if chromosome.phase < prefix.phase:
        return False
    return (
        chromosome.phase0 == prefix.phase0
        and chromosome.extensions[: prefix.phase] == prefix.extensions
    )


# --- canonical serialized form -------------------------------------------------

def _layer_to_dict(layer: ConvLayerGenes) -> dict:
    return {
        "out_channels": layer.out_channels,
        "filter_size": layer.filter_size,
        "batch_norm": layer.batch_norm,
    }


def to_dict(chromosome: Chromosome) -> dict:
    return {
        "phase0": {
            "activation": chromosome.phase0.activation,
            "layer_a": _layer_to_dict(chromosome.phase0.layer_a),
            "layer_b": _layer_to_dict(chromosome.phase0.layer_b),
            "pooling_present": chromosome.phase0.pooling_present,
            "pooling_type": chromosome.phase0.pooling_type,
            "skip_connection": chromosome.phase0.skip_connection,
        },
        "extensions": [
            {
                "include_layer_b": ext.include_layer_b,
                "layer_a": _layer_to_dict(ext.layer_a),
                "layer_b": _layer_to_dict(ext.layer_b),
                "pooling_present": ext.pooling_present,
                "pooling_type": ext.pooling_type,
                "skip_connection": ext.skip_connection,
            }
            for ext in chromosome.extensions
        ],
    }


def _layer_from_dict(data: dict) -> ConvLayerGenes:
    return ConvLayerGenes(
        out_channels=int(data["out_channels"]),
        filter_size=int(data["filter_size"]),
        batch_norm=bool(data["batch_norm"]),
    )


def from_dict(data: dict) -> Chromosome:
    p0 = data["phase0"]
    return Chromosome(
        phase0=Phase0Block(
            activation=p0["activation"],
            layer_a=_layer_from_dict(p0["layer_a"]),
            layer_b=_layer_from_dict(p0["layer_b"]),
            pooling_present=bool(p0["pooling_present"]),
            pooling_type=p0["pooling_type"],
            skip_connection=bool(p0["skip_connection"]),
        ),
        extensions=tuple(
            ExtensionBlock(
                include_layer_b=bool(ext["include_layer_b"]),
                layer_a=_layer_from_dict(ext["layer_a"]),
                layer_b=_layer_from_dict(ext["layer_b"]),
                pooling_present=bool(ext["pooling_present"]),
                pooling_type=ext["pooling_type"],
                skip_connection=bool(ext["skip_connection"]),
            )
            for ext in data["extensions"]
        ),
    )


def canonical_json(chromosome: Chromosome) -> str:
    """Stable text form used for hashing and deduplication."""
    return json.dumps(to_dict(chromosome), sort_keys=True, separators=(",", ":"))


def chromosome_hash(chromosome: Chromosome) -> str:
    return hashlib.sha256(canonical_json(chromosome).encode("utf-8")).hexdigest()
