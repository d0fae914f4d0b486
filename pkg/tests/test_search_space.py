"""Search-space definition and cardinality arithmetic.

The closed-form block sizes are checked against brute-force enumeration on
reduced spaces, so the formulas are not trusted on their own word.
"""

import itertools
import random
import time

import pytest

from vlga.search_space import (
    BOOLEAN_CHOICES,
    ConfigError,
    SearchSpace,
    extension_block_size,
    gene_kind,
    phase0_space_size,
    sample_gene,
    total_space_size,
)


def enumerate_phase0(space: SearchSpace) -> int:
    """Count phase-0 block settings by explicit product enumeration."""
    conv = list(
        itertools.product(
            space.output_channel_choices, space.filter_size_choices, BOOLEAN_CHOICES
        )
    )
    count = 0
    for _ in itertools.product(
        space.activation_choices,
        conv,
        conv,
        BOOLEAN_CHOICES,          # pooling_present
        space.pooling_choices,    # pooling_type
        BOOLEAN_CHOICES,          # skip_connection
    ):
        count += 1
    return count


def enumerate_extension(space: SearchSpace) -> int:
    conv = list(
        itertools.product(
            space.output_channel_choices, space.filter_size_choices, BOOLEAN_CHOICES
        )
    )
    count = 0
    for _ in itertools.product(
        BOOLEAN_CHOICES,          # include_layer_b
        conv,
        conv,
        BOOLEAN_CHOICES,
        space.pooling_choices,
        BOOLEAN_CHOICES,
    ):
        count += 1
    return count


REDUCED_SPACES = [
    SearchSpace(
        output_channel_choices=(8, 16),
        filter_size_choices=(3, 5),
        activation_choices=("relu",),
        pooling_choices=("max",),
    ),
    SearchSpace(
        output_channel_choices=(8, 16, 32),
        filter_size_choices=(3, 5, 7),
        activation_choices=("relu", "tanh"),
        pooling_choices=("max", "average"),
    ),
    SearchSpace(
        output_channel_choices=(8,),
        filter_size_choices=(1, 3, 5),
        activation_choices=("relu", "tanh", "elu"),
        pooling_choices=("max", "average"),
    ),
]


def test_default_phase0_size():
    assert phase0_space_size(SearchSpace()) == 156_800


def test_default_extension_size():
    assert extension_block_size(SearchSpace()) == 78_400


def test_default_one_extension_total():
    assert total_space_size(SearchSpace(), 1) == 156_800 * 78_400


def test_default_six_extension_total_order_of_magnitude():
    total = total_space_size(SearchSpace(), 6)
    assert total == 156_800 * 78_400**6
    assert 10**34 <= total < 10**35


def test_phase0_formula_matches_enumeration_on_reduced_spaces():
    start = time.monotonic()
    for space in REDUCED_SPACES:
        expected = enumerate_phase0(space)
        assert expected <= 10**5
        assert phase0_space_size(space) == expected
    assert time.monotonic() - start < 1.0


def test_extension_formula_matches_enumeration_on_reduced_spaces():
    for space in REDUCED_SPACES:
        expected = enumerate_extension(space)
        assert expected <= 10**5
        assert extension_block_size(space) == expected


def test_total_grows_by_extension_factor():
    space = SearchSpace()
    for n in range(5):
        ratio = total_space_size(space, n + 1) // total_space_size(space, n)
        assert ratio == extension_block_size(space)
        assert total_space_size(space, n + 1) % total_space_size(space, n) == 0


def test_total_rejects_negative_phase_count():
    with pytest.raises(ValueError):
        total_space_size(SearchSpace(), -1)


def test_gene_kind_accepts_dotted_paths():
    assert gene_kind("phase0.layer_a.out_channels") == "out_channels"
    assert gene_kind("ext3.pooling_type") == "pooling_type"
    assert gene_kind("activation") == "activation"


def test_gene_kind_rejects_unknown():
    with pytest.raises(ConfigError):
        gene_kind("phase0.layer_a.stride")


def test_domains():
    space = SearchSpace()
    assert space.domain("out_channels") == (8, 16, 32, 64, 128, 256, 512)
    assert space.domain("filter_size") == (1, 3, 5, 7, 9)
    assert space.domain("activation") == ("relu", "tanh", "elu", "selu")
    assert space.domain("pooling_type") == ("max", "average")
    for kind in ("batch_norm", "pooling_present", "skip_connection", "include_layer_b"):
        assert space.domain(kind) == (False, True)


def test_sampling_membership_and_determinism():
    space = SearchSpace()
    rng_a = random.Random(42)
    rng_b = random.Random(42)
    kinds = ("out_channels", "filter_size", "activation", "pooling_type", "batch_norm")
    draws_a = [sample_gene(space, k, rng_a) for k in kinds * 200]
    draws_b = [sample_gene(space, k, rng_b) for k in kinds * 200]
    assert draws_a == draws_b
    for kind, value in zip(kinds * 200, draws_a):
        assert value in space.domain(kind)


def test_sampling_covers_every_choice():
    space = SearchSpace()
    rng = random.Random(7)
    for kind in ("out_channels", "filter_size", "activation", "pooling_type"):
        seen = {sample_gene(space, kind, rng) for _ in range(10_000)}
        assert seen == set(space.domain(kind))


def test_config_round_trip():
    space = SearchSpace(
        output_channel_choices=(4, 8),
        filter_size_choices=(3,),
        activation_choices=("relu", "elu"),
        pooling_choices=("average",),
    )
    assert SearchSpace.from_dict(space.to_dict()) == space


def test_config_rejects_bad_input():
    with pytest.raises(ConfigError):
        SearchSpace(output_channel_choices=())
    with pytest.raises(ConfigError):
        SearchSpace(filter_size_choices=(3, 3))
    with pytest.raises(ConfigError):
        SearchSpace(output_channel_choices=(0, 8))
    with pytest.raises(ConfigError):
        SearchSpace.from_dict({"output_channels": [8], "stride": [1]})
