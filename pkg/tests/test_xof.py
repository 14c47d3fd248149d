import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pufstack.errors import ValidationError
from pufstack.xof import (XofStream, bits_to_bytes, bytes_to_bits, derive_rng,
                          expand, expand_bits, seeded_permutation)

SEED = b"\x01" * 32


def test_expand_deterministic():
    assert expand(SEED, "label", 64) == expand(SEED, "label", 64)


def test_expand_prefix_consistent():
    assert expand(SEED, "label", 100)[:40] == expand(SEED, "label", 40)


def test_labels_separate_streams():
    assert expand(SEED, "a", 32) != expand(SEED, "b", 32)
    assert expand(SEED, "a", 32) != expand(b"\x02" * 32, "a", 32)


def test_label_rejects_nul():
    with pytest.raises(ValidationError):
        expand(SEED, "bad\x00label", 8)


def test_expand_bits_roundtrip():
    bits = expand_bits(SEED, "bits", 128)
    assert bits.shape == (128,)
    assert set(np.unique(bits)) <= {0, 1}
    assert np.array_equal(bytes_to_bits(bits_to_bytes(bits), 128), bits)


def test_derive_rng_reproducible():
    a = derive_rng(SEED, "rng").standard_normal(8)
    b = derive_rng(SEED, "rng").standard_normal(8)
    assert np.array_equal(a, b)


def test_stream_randbelow_in_range():
    stream = XofStream(SEED, "stream")
    draws = [stream.randbelow(10) for _ in range(500)]
    assert min(draws) >= 0 and max(draws) < 10
    assert len(set(draws)) == 10


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=200), st.binary(min_size=4, max_size=16))
def test_permutation_covers_all_indices(n, salt):
    perm = seeded_permutation(SEED + salt, "perm", n)
    assert sorted(perm.tolist()) == list(range(n))


def test_permutation_deterministic():
    a = seeded_permutation(SEED, "perm", 100)
    b = seeded_permutation(SEED, "perm", 100)
    assert np.array_equal(a, b)


def test_permutation_rejects_empty():
    with pytest.raises(ValidationError):
        seeded_permutation(SEED, "perm", 0)
