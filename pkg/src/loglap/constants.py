"""Dimensional constants and kernels of the logarithmic Laplacian.

Everything here is exact-by-formula: the Euler-Mascheroni constant, the
digamma function (own implementation, recurrence shift plus asymptotic
series), the kernel normalization c_N, the zero-order constant rho_N, the
lower-bound constant d_N, and the unit-ball kernel split (k, j).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# gamma = -Gamma'(1), to full double precision
EULER_GAMMA = 0.5772156649015328606

# Asymptotic series psi(x) ~ ln x - 1/(2x) - sum B_2k / (2k x^2k);
# coefficients of x^(-2), x^(-4), ... after the sign is folded in.
_PSI_SERIES = (
    -1.0 / 12.0,
    1.0 / 120.0,
    -1.0 / 252.0,
    1.0 / 240.0,
    -1.0 / 132.0,
    691.0 / 32760.0,
    -1.0 / 12.0,
)

_PSI_SHIFT = 6.0


def euler_gamma() -> float:
    """Euler-Mascheroni constant gamma = -Gamma'(1)."""
    return EULER_GAMMA


def digamma(x: float) -> float:
    """Digamma function psi = Gamma'/Gamma for x > 0.

    Recurrence psi(x) = psi(x+1) - 1/x shifts the argument to >= 6, then the
    asymptotic series is summed through x^(-14); absolute error is below
    1e-12 on the shifted argument.
    """
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"digamma requires x > 0, got {x}")
    acc = 0.0
    while x < _PSI_SHIFT:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for c in _PSI_SERIES:
        series += c * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x + series


def _check_dim(n: int) -> int:
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be an integer >= 1, got {n!r}")
    return int(n)


def c_of_N(n: int) -> float:
    """Kernel normalization c_N = pi^(-N/2) Gamma(N/2)."""
    n = _check_dim(n)
    return math.pi ** (-n / 2.0) * math.gamma(n / 2.0)


def rho_of_N(n: int) -> float:
    """Zero-order constant rho_N = 2 ln 2 + psi(N/2) - gamma."""
    n = _check_dim(n)
    return 2.0 * math.log(2.0) + digamma(n / 2.0) - EULER_GAMMA


def sphere_measure(n: int) -> float:
    """Surface measure of the unit sphere S^(N-1); equals 2 for N = 1."""
    n = _check_dim(n)
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def d_of_N(n: int) -> float:
    """Lower-bound constant d_N = 2 omega_{N-1} / (N^2 (2 pi)^N); d_N <= c_N."""
    n = _check_dim(n)
    return 2.0 * sphere_measure(n) / (n * n * (2.0 * math.pi) ** n)


def kernel_values(z) -> tuple[float, float]:
    """Unit-ball kernel split at z != 0.

    Returns (k, j) with k = 1_{|z|<=1} / |z|^N and j = 1_{|z|>1} / |z|^N.
    The dimension is inferred from the length of z (scalars are 1-D).
    The boundary |z| = 1 is assigned to k, so k*j = 0 always.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    n = z.size
    radius = float(np.linalg.norm(z))
    if radius == 0.0:
        raise ValueError("kernel_values is undefined at z = 0")
    inv = radius ** (-n)
    if radius <= 1.0:
        return inv, 0.0
    return 0.0, inv


@dataclass(frozen=True)
class DimensionalConstants:
    """Constants entering the operator for a fixed spatial dimension."""

    N: int
    c_N: float
    rho_N: float
    gamma: float
    d_N: float

    @classmethod
    def for_dimension(cls, n: int) -> "DimensionalConstants":
        n = _check_dim(n)
        return cls(
            N=n,
            c_N=c_of_N(n),
            rho_N=rho_of_N(n),
            gamma=EULER_GAMMA,
            d_N=d_of_N(n),
        )
