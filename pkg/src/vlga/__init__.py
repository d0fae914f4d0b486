"""Variable-length genetic algorithm for convolutional network hyperparameter search."""

__version__ = "0.1.0"

from .search_space import (
    SearchSpace,
    ConfigError,
    phase0_space_size,
    extension_block_size,
    total_space_size,
)
from .chromosome import (
    Chromosome,
    Phase0Block,
    ExtensionBlock,
    ConvLayerGenes,
    random_chromosome,
    mutate,
    crossover,
    extend,
    chromosome_hash,
)

__all__ = [
    "SearchSpace",
    "ConfigError",
    "phase0_space_size",
    "extension_block_size",
    "total_space_size",
    "Chromosome",
    "Phase0Block",
    "ExtensionBlock",
    "ConvLayerGenes",
    "random_chromosome",
    "mutate",
    "crossover",
    "extend",
    "chromosome_hash",
]
