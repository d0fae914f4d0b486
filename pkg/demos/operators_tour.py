#!/usr/bin/env python3
"""A walk through the three genetic operators on real chromosomes.

Mutation flips exactly one gene, crossover mixes two parents field by field,
and extension grows a network by one block while leaving the inherited genes
byte-for-byte intact (which is what makes warm-started training possible).
"""

import random

from vlga.chromosome import (
    crossover,
    extend,
    gene_fields,
    get_gene,
    is_prefix_of,
    mutate,
    random_chromosome,
)
from vlga.search_space import SearchSpace

space = SearchSpace()
rng = random.Random(7)


def diff(a, b):
    return [(f, get_gene(a, f), get_gene(b, f))
            for f in gene_fields(b) if f in gene_fields(a)
            and get_gene(a, f) != get_gene(b, f)]


parent = random_chromosome(space, 1, rng)
print(f"parent: phase {parent.phase}, {parent.layer_count} conv layers,"
      f" {len(gene_fields(parent))} genes")

print("\n-- mutation: exactly one gene moves --")
child = mutate(parent, space, rng)
for field, old, new in diff(parent, child):
    print(f"  {field}: {old!r} -> {new!r}")

print("\n-- crossover: every gene comes from one parent or the other --")
other = random_chromosome(space, 1, rng)
mixed = crossover(parent, other, rng)
from_other = sum(
    1 for f in gene_fields(mixed)
    if get_gene(mixed, f) == get_gene(other, f) != get_gene(parent, f))
print(f"  child took {from_other} gene(s) that only the second parent had")

print("\n-- extension: grow by one block, keep the prefix --")
grown = extend(parent, space, rng)
print(f"  {parent.layer_count} layers -> {grown.layer_count} layers"
      f" (phase {grown.phase})")
print(f"  parent is a byte-identical prefix: {is_prefix_of(parent, grown)}")
newest = grown.extensions[-1]
print(f"  new block: include_layer_b={newest.include_layer_b},"
      f" pooling={newest.pooling_present}, skip={newest.skip_connection}")
