"""Chromosome encoding, genetic operators, and canonical serialization."""

import random

import pytest

from vlga.chromosome import (
    EXTENSION_FIELDS,
    PHASE0_FIELDS,
    Chromosome,
    canonical_json,
    chromosome_hash,
    crossover,
    extend,
    from_dict,
    gene_fields,
    get_gene,
    is_prefix_of,
    mutate,
    random_chromosome,
    to_dict,
    with_gene,
)
from vlga.search_space import SearchSpace, gene_kind

SPACE = SearchSpace()


def hamming(a: Chromosome, b: Chromosome) -> int:
    assert a.phase == b.phase
    return sum(1 for f in gene_fields(a) if get_gene(a, f) != get_gene(b, f))


def test_field_counts():
    assert len(PHASE0_FIELDS) == 10
    assert len(EXTENSION_FIELDS) == 10
    rng = random.Random(0)
    for phase in range(5):
        c = random_chromosome(SPACE, phase, rng)
        assert len(gene_fields(c)) == 10 + 10 * phase


def test_layer_count():
    rng = random.Random(1)
    c = random_chromosome(SPACE, 0, rng)
    assert c.layer_count == 2
    c2 = random_chromosome(SPACE, 3, rng)
    expected = 2 + sum(1 + int(e.include_layer_b) for e in c2.extensions)
    assert c2.layer_count == expected
    assert 5 <= c2.layer_count <= 8


def test_random_chromosome_genes_in_domain():
    rng = random.Random(2)
    for _ in range(50):
        c = random_chromosome(SPACE, rng.randrange(4), rng)
        for path in gene_fields(c):
            assert get_gene(c, path) in SPACE.domain(gene_kind(path))


def test_random_chromosome_deterministic():
    a = random_chromosome(SPACE, 3, random.Random(99))
    b = random_chromosome(SPACE, 3, random.Random(99))
    assert a == b
    assert chromosome_hash(a) == chromosome_hash(b)


def test_get_with_gene_round_trip():
    rng = random.Random(3)
    c = random_chromosome(SPACE, 2, rng)
    for path in gene_fields(c):
        domain = SPACE.domain(gene_kind(path))
        other = next(v for v in domain if v != get_gene(c, path))
        c2 = with_gene(c, path, other)
        assert get_gene(c2, path) == other
        assert c2 is not c
        # only that one gene differs
        assert hamming(c, c2) == 1
        # original untouched
        assert get_gene(c, path) != other or len(domain) == 1


def test_mutation_changes_exactly_one_gene():
    rng = random.Random(4)
    for _ in range(1000):
        c = random_chromosome(SPACE, rng.randrange(4), rng)
        m = mutate(c, SPACE, rng)
        assert m.phase == c.phase
        assert hamming(c, m) == 1
        for path in gene_fields(m):
            assert get_gene(m, path) in SPACE.domain(gene_kind(path))


def test_mutation_touches_every_field_eventually():
    rng = random.Random(5)
    c = random_chromosome(SPACE, 2, rng)
    changed = set()
    for _ in range(2000):
        m = mutate(c, SPACE, rng)
        changed.update(f for f in gene_fields(c) if get_gene(c, f) != get_gene(m, f))
    assert changed == set(gene_fields(c))


def test_mutation_on_singleton_space_warns():
    tiny = SearchSpace(
        output_channel_choices=(8,),
        filter_size_choices=(3,),
        activation_choices=("relu",),
        pooling_choices=("max",),
    )
    # booleans still have two values, so mutation works on the flags
    rng = random.Random(6)
    c = random_chromosome(tiny, 0, rng)
    m = mutate(c, tiny, rng)
    assert hamming(c, m) == 1
    changed = [f for f in gene_fields(c) if get_gene(c, f) != get_gene(m, f)]
    assert gene_kind(changed[0]) in {
        "batch_norm", "pooling_present", "pooling_type", "skip_connection",
    } or gene_kind(changed[0]) == "include_layer_b"


def test_crossover_every_gene_from_a_parent():
    rng = random.Random(7)
    for _ in range(1000):
        phase = rng.randrange(4)
        a = random_chromosome(SPACE, phase, rng)
        b = random_chromosome(SPACE, phase, rng)
        child = crossover(a, b, rng)
        assert child.phase == phase
        for path in gene_fields(child):
            assert get_gene(child, path) in (get_gene(a, path), get_gene(b, path))


def test_crossover_mixes_both_parents():
    rng = random.Random(8)
    took_a = took_b = False
    for _ in range(200):
        a = random_chromosome(SPACE, 2, rng)
        b = random_chromosome(SPACE, 2, rng)
        child = crossover(a, b, rng)
        for path in gene_fields(child):
            va, vb, vc = get_gene(a, path), get_gene(b, path), get_gene(child, path)
            if va != vb:
                took_a |= vc == va
                took_b |= vc == vb
    assert took_a and took_b


def test_crossover_rejects_unequal_phases():
    rng = random.Random(9)
    a = random_chromosome(SPACE, 1, rng)
    b = random_chromosome(SPACE, 2, rng)
    with pytest.raises(ValueError):
        crossover(a, b, rng)


def test_extend_preserves_prefix_exactly():
    rng = random.Random(10)
    for _ in range(1000):
        base = random_chromosome(SPACE, rng.randrange(3), rng)
        grown = extend(base, SPACE, rng)
        assert grown.phase == base.phase + 1
        assert grown.phase0 == base.phase0
        assert grown.extensions[: base.phase] == base.extensions
        assert is_prefix_of(base, grown)
        # byte-for-byte on the serialized prefix
        base_json = canonical_json(base)
        prefix_json = canonical_json(
            Chromosome(phase0=grown.phase0, extensions=grown.extensions[: base.phase])
        )
        assert prefix_json == base_json


def test_is_prefix_of_negative_cases():
    rng = random.Random(11)
    base = random_chromosome(SPACE, 2, rng)
    grown = extend(base, SPACE, rng)
    assert not is_prefix_of(grown, base)
    mutated = mutate(base, SPACE, rng)
    if mutated != base:
        grown_from_mutant = extend(mutated, SPACE, rng)
        assert not is_prefix_of(base, grown_from_mutant)
    assert is_prefix_of(base, base)


def test_serialization_round_trip():
    rng = random.Random(12)
    for _ in range(100):
        c = random_chromosome(SPACE, rng.randrange(5), rng)
        assert from_dict(to_dict(c)) == c
        assert chromosome_hash(from_dict(to_dict(c))) == chromosome_hash(c)


def test_canonical_json_is_stable_and_compact():
    rng = random.Random(13)
    c = random_chromosome(SPACE, 2, rng)
    s = canonical_json(c)
    assert " " not in s
    assert canonical_json(c) == s
    assert len(chromosome_hash(c)) == 64


def test_distinct_chromosomes_hash_differently():
    rng = random.Random(14)
    hashes = set()
    for _ in range(500):
        c = random_chromosome(SPACE, rng.randrange(3), rng)
        hashes.add(chromosome_hash(c))
    assert len(hashes) > 490
