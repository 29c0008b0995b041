"""Exact arithmetic in Z_q and the negacyclic ring R_q = Z_q[x]/(x^n + 1).

Coefficients live in numpy int64 arrays so that all intermediates (including
the ones produced by evaluation-interpolation multipliers) stay exact before
the final power-of-two reduction. All values are treated as immutable after
construction.
"""

import functools
from dataclasses import dataclass

import numpy as np

from .params import RingParams, DEFAULT_PARAMS


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Poly:
    """A polynomial of degree < n with coefficients reduced into [0, modulus)."""

    coeffs: np.ndarray
    modulus: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.int64) % self.modulus
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def __add__(self, other: "Poly") -> "Poly":
        _check_pair(self, other)
        return Poly(self.coeffs + other.coeffs, self.modulus)

    def __sub__(self, other: "Poly") -> "Poly":
        _check_pair(self, other)
        return Poly(self.coeffs - other.coeffs, self.modulus)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Poly)
            and self.modulus == other.modulus
            and np.array_equal(self.coeffs, other.coeffs)
        )

    def with_modulus(self, modulus: int) -> "Poly":
        return Poly(self.coeffs, modulus)

    @staticmethod
    def zero(n: int, modulus: int) -> "Poly":
        return Poly(np.zeros(n, dtype=np.int64), modulus)


def _check_pair(a: Poly, b: Poly) -> None:
    if a.n != b.n:
        raise DimensionError(f"degree mismatch: {a.n} vs {b.n}")
    if a.modulus != b.modulus:
        raise ValueError(f"modulus mismatch: {a.modulus} vs {b.modulus}")


@dataclass(frozen=True)
class PolyVec:
    """A length-l vector of polynomials with a uniform modulus."""

    polys: tuple

    def __post_init__(self):
        mods = {p.modulus for p in self.polys}
        if len(mods) > 1:
            raise ValueError("PolyVec entries must share a modulus")
        object.__setattr__(self, "polys", tuple(self.polys))

    def __len__(self) -> int:
        return len(self.polys)

    def __getitem__(self, i: int) -> Poly:
        return self.polys[i]

    @property
    def modulus(self) -> int:
        return self.polys[0].modulus

    def as_array(self) -> np.ndarray:
        return np.stack([p.coeffs for p in self.polys])

    @staticmethod
    def from_array(arr: np.ndarray, modulus: int) -> "PolyVec":
        return PolyVec(tuple(Poly(row, modulus) for row in arr))


@dataclass(frozen=True)
class PolyMatrix:
    """A square l x l grid of polynomials with a uniform modulus."""

    rows: tuple

    def __post_init__(self):
        l = len(self.rows)
        for row in self.rows:
            if len(row) != l:
                raise DimensionError("PolyMatrix must be square")
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))

    def __getitem__(self, ij) -> Poly:
        i, j = ij
        return self.rows[i][j]

    @property
    def l(self) -> int:
        return len(self.rows)

    @property
    def modulus(self) -> int:
        return self.rows[0][0].modulus


def reduce_negacyclic(coeffs, params: RingParams = DEFAULT_PARAMS,
                      modulus: int = None) -> Poly:
    """Reduce an up-to-(2n-1)-coefficient polynomial modulo (x^n + 1, modulus).

    Coefficient i of the result is coeffs[i] - coeffs[i + n] since x^n = -1.
    """
    n = params.n
    c = np.asarray(coeffs, dtype=np.int64)
    if c.ndim != 1 or len(c) > 2 * n - 1:
        raise DimensionError(f"expected at most {2 * n - 1} coefficients, got {c.shape}")
    full = np.zeros(2 * n, dtype=np.int64)
    full[: len(c)] = c
    return Poly(full[:n] - full[n:], modulus if modulus is not None else params.q)


def negacyclic_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Signed negacyclic convolution of two equal-length coefficient arrays."""
    n = len(a)
    conv = np.convolve(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64))
    full = np.zeros(2 * n, dtype=np.int64)
    full[: len(conv)] = conv
    return full[:n] - full[n:]


def round_shift(poly: Poly, from_bits: int, to_bits: int) -> Poly:
    """Drop the (from_bits - to_bits) least significant bits of every coefficient."""
    if to_bits > from_bits:
        raise ValueError("to_bits must not exceed from_bits")
    if poly.modulus != (1 << from_bits):
        raise ValueError("poly modulus does not match from_bits")
    return Poly(poly.coeffs >> (from_bits - to_bits), 1 << to_bits)


def _bits_from_stream(xof, count: int, width: int) -> np.ndarray:
    """Extract `count` little-endian `width`-bit values from an XOF stream."""
    total_bits = count * width
    raw = xof.squeeze((total_bits + 7) // 8)
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    bits = bits[:total_bits].reshape(count, width).astype(np.int64)
    weights = (np.int64(1) << np.arange(width, dtype=np.int64))
    return bits @ weights


@functools.lru_cache(maxsize=64)
def gen_matrix(seed: bytes, params: RingParams = DEFAULT_PARAMS, xof_cls=None) -> PolyMatrix:
    """Expand a 32-byte seed into the public l x l matrix over R_q.

    Coefficients are consecutive little-endian eps_q-bit chunks of the XOF
    stream, filled in row-major matrix order. Power-of-two q makes the
    extraction rejection-free. Results are memoized per seed since key
    generation and encryption expand the same matrix.
    """
    from .xof import Shake128Xof

    if len(seed) != 32:
        raise ValueError("seed must be 32 bytes")
    xof = (xof_cls or Shake128Xof)(seed)
    l, n = params.l, params.n
    vals = _bits_from_stream(xof, l * l * n, params.eps_q).reshape(l, l, n)
    rows = tuple(
        tuple(Poly(vals[i, j], params.q) for j in range(l)) for i in range(l)
    )
    return PolyMatrix(rows)


def sample_secret(r: bytes, params: RingParams = DEFAULT_PARAMS, xof_cls=None) -> np.ndarray:
    """Sample a centered binomial secret vector; returns an (l, n) signed array.

    Each coefficient is HW(a) - HW(b) for independent mu/2-bit strings a, b,
    so it lies in [-mu/2, mu/2]. The centered form is what the crossbar's
    bias encoding consumes; reduce mod q via `centered_to_vec` when needed.
    """
    from .xof import Shake128Xof

    if len(r) != 32:
        raise ValueError("r must be 32 bytes")
    xof = (xof_cls or Shake128Xof)(r)
    l, n, mu = params.l, params.n, params.mu
    raw = xof.squeeze(l * n * mu // 8)
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    bits = bits.reshape(l, n, mu).astype(np.int64)
    half = mu // 2
    return bits[:, :, :half].sum(axis=2) - bits[:, :, half:].sum(axis=2)


def centered_to_vec(s_centered: np.ndarray, modulus: int) -> PolyVec:
    return PolyVec.from_array(np.asarray(s_centered, dtype=np.int64) % modulus, modulus)
