#!/usr/bin/env python3
"""How fast the genotype space grows as phases add blocks.

The starting two-layer network already has 156,800 configurations; six growth
phases later the count passes 10^34.  Exhaustive search stops being a thought
experiment almost immediately, which is the whole reason the phased GA exists.
"""

from vlga.search_space import (
    SearchSpace,
    extension_block_size,
    phase0_space_size,
    total_space_size,
)

space = SearchSpace()

print("starting block genotypes :", f"{phase0_space_size(space):,}")
print("one growth block multiplies by :", f"{extension_block_size(space):,}")
print()
print(f"{'phase':>5}  {'conv layers':>11}  {'genotypes':>40}")
for phase in range(7):
    lo, hi = 2 + phase, 2 + 2 * phase
    layers = str(lo) if lo == hi else f"{lo}-{hi}"
    print(f"{phase:>5}  {layers:>11}  {total_space_size(space, phase):>40,}")

print()
total = total_space_size(space, 6)
print(f"at phase 6 that is about 10^{len(str(total)) - 1};")
print("evaluating one genotype per nanosecond would still take"
      f" {total / 1e9 / 3.15e7:.1e} years")
