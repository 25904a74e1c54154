"""Gauss rules and graded composite rules on the unit interval.

The singular kernels produce integrands that are smooth away from a corner
or an endpoint; geometric grading toward the singular point recovers full
order for the kernel pairs, and algebraic grading absorbs the logarithmic
and power endpoint singularities of the boundary potential.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

# ratio of the geometric grading used for touching cell pairs
GEOMETRIC_RATIO = 0.5


@lru_cache(maxsize=None)
def gauss_01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    if order < 1:
        raise ValueError(f"gauss order must be >= 1, got {order}")
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def composite_on_breakpoints(bps: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor the [0,1] Gauss rule onto consecutive breakpoint intervals."""
    t, w = gauss_01(order)
    lo = bps[:-1]
    width = np.diff(bps)
    pts = (lo[:, None] + width[:, None] * t[None, :]).ravel()
    wts = (width[:, None] * w[None, :]).ravel()
    return pts, wts


@lru_cache(maxsize=None)
def graded_geometric(levels: int, order: int, toward_one: bool) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on [0,1], geometrically refined toward one endpoint."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    bps = [0.0] + [1.0 - GEOMETRIC_RATIO ** k for k in range(levels, 0, -1)] + [1.0]
    bps = np.unique(np.asarray(bps))
    if not toward_one:
        bps = np.sort(1.0 - bps)
    return composite_on_breakpoints(bps, order)


@lru_cache(maxsize=None)
def graded_algebraic(levels: int, exponent: float, order: int,
                     toward_zero: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on [0,1] with breakpoints (k/L)^exponent at zero."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    bps = (np.arange(levels + 1) / levels) ** float(exponent)
    if not toward_zero:
        bps = np.sort(1.0 - bps)
    return composite_on_breakpoints(bps, order)


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature configuration for the Galerkin assembly.

    gauss_order: points per dimension for regular cell pairs.
    singular_subdivisions: graded levels for touching/identical cell pairs.
    boundary_grading: grading exponent for the log-singular potential near
    the boundary.
    """

    gauss_order: int = 6
    singular_subdivisions: int = 12
    boundary_grading: float = 3.0

    def __post_init__(self):
        if self.gauss_order < 1:
            raise ValueError("gauss_order must be >= 1")
        if self.singular_subdivisions < 1:
            raise ValueError("singular_subdivisions must be >= 1")
        if self.boundary_grading < 1:
            raise ValueError("boundary_grading must be >= 1")

    def regular_rule(self) -> tuple[np.ndarray, np.ndarray]:
        return gauss_01(self.gauss_order)

    def corner_rule(self, toward_one: bool) -> tuple[np.ndarray, np.ndarray]:
        return graded_geometric(self.singular_subdivisions, self.gauss_order, toward_one)

    def boundary_rule(self, toward_zero: bool) -> tuple[np.ndarray, np.ndarray]:
        return graded_algebraic(self.singular_subdivisions, self.boundary_grading,
                                self.gauss_order, toward_zero)

    def refined(self) -> "QuadratureSpec":
        """A strictly finer spec, used for internal consistency checks."""
        return QuadratureSpec(self.gauss_order + 3,
                              self.singular_subdivisions + 4,
                              self.boundary_grading)
