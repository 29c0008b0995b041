import numpy as np
import pytest

from saberxbar.params import DEFAULT_PARAMS
from saberxbar.ring import Poly
from saberxbar.polymult import (MultAlgorithm, plan_for, schoolbook_mul,
                                karatsuba_mul, toomcook4_mul, tc4k2_mul,
                                multiply, conv_raw)

Q = DEFAULT_PARAMS.q
N = DEFAULT_PARAMS.n


def _rand_pair(rng, n=N, q=Q):
    return (Poly(rng.integers(0, q, n), q), Poly(rng.integers(0, q, n), q))


def _oracle_conv(a, b):
    """Independent big-integer convolution, no numpy arithmetic."""
    la, lb = list(map(int, a)), list(map(int, b))
    out = [0] * (len(la) + len(lb) - 1)
    for i, x in enumerate(la):
        for j, y in enumerate(lb):
            out[i + j] += x * y
    return out


def test_plan_counts():
    assert plan_for(MultAlgorithm.SB).sub_mults == 1
    assert plan_for(MultAlgorithm.K2).sub_mults == 3
    assert plan_for(MultAlgorithm.K4).sub_mults == 9
    assert plan_for(MultAlgorithm.TC4).sub_mults == 7
    assert plan_for(MultAlgorithm.TC4K2).sub_mults == 21
    assert plan_for(MultAlgorithm.TC4).sub_degree == N // 4
    assert plan_for(MultAlgorithm.TC4K2).sub_degree == N // 8


def test_schoolbook_matches_oracle_convolution():
    rng = np.random.default_rng(0)
    a, b = _rand_pair(rng, n=16)
    conv = _oracle_conv(a.coeffs, b.coeffs)
    want = [(conv[i] - (conv[i + 16] if i + 16 < len(conv) else 0)) % Q
            for i in range(16)]
    assert list(schoolbook_mul(a, b).coeffs) == want


@pytest.mark.parametrize("alg", list(MultAlgorithm))
def test_conv_raw_matches_oracle(alg):
    rng = np.random.default_rng(hash(alg.value) % 2**32)
    for _ in range(10):
        a = rng.integers(-10, 10, 32)
        b = rng.integers(-10, 10, 32)
        assert list(conv_raw(alg, a, b)) == _oracle_conv(a, b)


@pytest.mark.parametrize("alg", [MultAlgorithm.K2, MultAlgorithm.K4,
                                 MultAlgorithm.TC4, MultAlgorithm.TC4K2])
def test_variants_match_schoolbook_full_size(alg):
    rng = np.random.default_rng(42)
    for _ in range(50):
        a, b = _rand_pair(rng)
        assert multiply(alg, a, b) == schoolbook_mul(a, b)


def test_named_entry_points_agree_with_dispatcher():
    rng = np.random.default_rng(7)
    a, b = _rand_pair(rng)
    assert karatsuba_mul(a, b, 1) == multiply(MultAlgorithm.K2, a, b)
    assert karatsuba_mul(a, b, 2) == multiply(MultAlgorithm.K4, a, b)
    assert toomcook4_mul(a, b) == multiply(MultAlgorithm.TC4, a, b)
    assert tc4k2_mul(a, b) == multiply(MultAlgorithm.TC4K2, a, b)


def test_small_ring_exhaustive_style():
    # n=4, q=16: TC4K2 needs n divisible by 8, so it runs at n=8 instead
    rng = np.random.default_rng(3)
    for _ in range(500):
        a = Poly(rng.integers(0, 16, 4), 16)
        b = Poly(rng.integers(0, 16, 4), 16)
        want = schoolbook_mul(a, b)
        for alg in (MultAlgorithm.K2, MultAlgorithm.K4, MultAlgorithm.TC4):
            assert multiply(alg, a, b) == want
        a8 = Poly(rng.integers(0, 16, 8), 16)
        b8 = Poly(rng.integers(0, 16, 8), 16)
        assert multiply(MultAlgorithm.TC4K2, a8, b8) == schoolbook_mul(a8, b8)


def test_dimension_requirements():
    a = Poly(np.arange(4), Q)
    with pytest.raises(ValueError):
        tc4k2_mul(a, a)
    b = Poly(np.arange(6), Q)
    with pytest.raises(ValueError):
        toomcook4_mul(b, b)
    with pytest.raises(ValueError):
        karatsuba_mul(Poly([1], Q), Poly([1], Q), 1)


def test_multiplication_by_x_rotates_with_sign():
    # a * x shifts coefficients up one slot and negates the wrapped one
    rng = np.random.default_rng(5)
    a = Poly(rng.integers(0, Q, N), Q)
    x = Poly(np.eye(N, dtype=np.int64)[1], Q)
    for alg in MultAlgorithm:
        got = multiply(alg, a, x)
        assert got.coeffs[0] == (-a.coeffs[N - 1]) % Q
        assert np.array_equal(got.coeffs[1:], a.coeffs[: N - 1])
