"""Parameter sets and the bit-shift rounding constants."""

from dataclasses import dataclass, field

import numpy as np


def _log2_exact(x: int) -> int:
    b = x.bit_length() - 1
    if x <= 0 or (1 << b) != x:
        raise ValueError(f"{x} is not a positive power of two")
    return b


@dataclass(frozen=True)
class RingParams:
    """Module-LWR ring parameters.

    Defaults match the SABER PKE parameter set: n=256, l=3,
    q=2^13, p=2^10, T=2^4, mu=8.
    """

    n: int = 256
    q: int = 1 << 13
    p: int = 1 << 10
    T: int = 1 << 4
    l: int = 3
    mu: int = 8

    def __post_init__(self):
        _log2_exact(self.n)
        if not (self.T < self.p < self.q):
            raise ValueError("moduli must satisfy T < p < q")
        for m in (self.q, self.p, self.T):
            _log2_exact(m)
        if self.mu % 2 != 0:
            raise ValueError("mu must be even")
        if self.l < 1:
            raise ValueError("module rank must be >= 1")

    @property
    def eps_q(self) -> int:
        return _log2_exact(self.q)

    @property
    def eps_p(self) -> int:
        return _log2_exact(self.p)

    @property
    def eps_T(self) -> int:
        return _log2_exact(self.T)


DEFAULT_PARAMS = RingParams()


@dataclass(frozen=True)
class SaberConstants:
    """Constant polynomials h1, h (vector), h2 that turn rounding into shifts.

    h1 coefficients are 2^(eps_q - eps_p - 1); h is l copies of h1;
    h2 coefficients are 2^(eps_p - 2) - 2^(eps_p - eps_T - 1) + 2^(eps_q - eps_p - 1).
    """

    h1_value: int
    h2_value: int
    params: RingParams = field(default=DEFAULT_PARAMS)

    def h1(self) -> np.ndarray:
        return np.full(self.params.n, self.h1_value, dtype=np.int64)

    def h2(self) -> np.ndarray:
        return np.full(self.params.n, self.h2_value, dtype=np.int64)

    def h(self) -> np.ndarray:
        return np.full((self.params.l, self.params.n), self.h1_value, dtype=np.int64)


def constants(params: RingParams = DEFAULT_PARAMS) -> SaberConstants:
    h1 = 1 << (params.eps_q - params.eps_p - 1)
    h2 = (
        (1 << (params.eps_p - 2))
        - (1 << (params.eps_p - params.eps_T - 1))
        + (1 << (params.eps_q - params.eps_p - 1))
    )
    return SaberConstants(h1_value=h1, h2_value=h2, params=params)
