import math

import pytest
from hypothesis import given, strategies as st

from balancekit.rng import Rng, derive_seed, fnv1a64, splitmix64

MASK = (1 << 64) - 1


def reference_next(state: int) -> tuple[int, int]:
    # independent transcription of the xorshift64* recurrence
    x = state & MASK
    x ^= x >> 12
    x = (x ^ (x << 25)) & MASK
    x ^= x >> 27
    return x, (x * 0x2545F4914F6CDD1D) & MASK


def test_matches_reference_recurrence():
    rng = Rng(987654321)
    state = rng.state
    for _ in range(100):
        state, expected = reference_next(state)
        assert rng.next_u64() == expected


def test_zero_seed_not_degenerate():
    rng = Rng(0)
    values = {rng.next_u64() for _ in range(64)}
    assert 0 not in values
    assert len(values) == 64


def test_same_seed_same_stream():
    a = Rng(1234)
    b = Rng(1234)
    assert [a.next_u64() for _ in range(50)] == [b.next_u64() for _ in range(50)]


def test_fnv1a64_known_values():
    # published FNV-1a 64-bit vectors
    assert fnv1a64(b"") == 0xCBF29CE484222325
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_splitmix64_mixes_and_masks():
    seen = {splitmix64(i) for i in range(256)}
    assert len(seen) == 256
    assert all(0 <= v <= MASK for v in seen)
    assert splitmix64(5) != 5


def test_derive_seed_tag_order_matters():
    s = 42
    assert derive_seed(s, "spawn") != derive_seed(s, "policy")
    assert derive_seed(s, "a", "b") != derive_seed(s, "b", "a")
    assert derive_seed(s, "a", 1) != derive_seed(s, "a", 2)


def test_purpose_streams_are_unrelated():
    a = Rng.for_purpose(7, "spawn")
    b = Rng.for_purpose(7, "policy")
    xs = [a.next_u64() for _ in range(32)]
    ys = [b.next_u64() for _ in range(32)]
    assert xs != ys
    assert len(set(xs) & set(ys)) == 0


def test_uniform_range_and_moments():
    rng = Rng(2024)
    n = 20000
    xs = [rng.uniform() for _ in range(n)]
    assert all(0.0 <= x < 1.0 for x in xs)
    mean = sum(xs) / n
    var = sum((x - mean) ** 2 for x in xs) / n
    assert abs(mean - 0.5) < 0.01
    assert abs(var - 1 / 12) < 0.005


def test_randrange_covers_all_residues_evenly():
    rng = Rng(77)
    n, draws = 7, 14000
    counts = [0] * n
    for _ in range(draws):
        counts[rng.randrange(n)] += 1
    expected = draws / n
    chi2 = sum((c - expected) ** 2 / expected for c in counts)
    assert chi2 < 30  # df=6, p ~ 1e-4 cutoff; loose by design


@given(st.integers(min_value=0, max_value=MASK), st.integers(min_value=1, max_value=10**6))
def test_randrange_in_bounds(seed, n):
    rng = Rng(seed)
    for _ in range(5):
        assert 0 <= rng.randrange(n) < n


@given(st.integers(min_value=0, max_value=MASK))
def test_choice_returns_member(seed):
    rng = Rng(seed)
    seq = ["a", "b", "c", "d"]
    assert rng.choice(seq) in seq


def test_randrange_rejects_bad_n():
    with pytest.raises(ValueError):
        Rng(1).randrange(0)


def test_golden_stream_anchor():
    """Frozen first outputs for one seed; guards cross-version drift of every
    layer (whitening, recurrence, scaling)."""
    rng = Rng(42)
    got = [rng.next_u64() for _ in range(3)]
    state = 0
    x = (42 + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    state = (x ^ (x >> 31)) & MASK
    expect = []
    for _ in range(3):
        state, out = reference_next(state)
        expect.append(out)
    assert got == expect


def test_uniform_is_53_bit():
    rng = Rng(9)
    x = rng.uniform()
    assert x == math.ldexp(math.floor(math.ldexp(x, 53)), -53)
