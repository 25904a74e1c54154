"""Restricted fractional Laplacian form at small order s and its expansion.

The Galerkin matrix A_s of the s-form tends to the mass matrix as s -> 0,
and (A_s - M)/s tends to the logarithmic-Laplacian matrix A; the module
assembles A_s and measures both convergence trends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretization import (FormMatrices, Mesh, _consistency_check,
                             assemble_interaction_interval,
                             assemble_potential_interval)
from .quadrature import QuadratureSpec
from .spectral import solve_gen_sym


def fractional_constant(n: int, s: float) -> float:
    """Normalization c(N, s) = 2^(2s) pi^(-N/2) s Gamma((N+2s)/2) / Gamma(1-s)."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order must lie in (0, 1), got {s}")
    return (2.0 ** (2.0 * s) * math.pi ** (-n / 2.0) * s
            * math.gamma((n + 2.0 * s) / 2.0) / math.gamma(1.0 - s))


def exterior_potential(x, s: float, a: float, b: float) -> np.ndarray:
    """kappa_s(x) = c(1,s)/(2s) [(x-a)^(-2s) + (b-x)^(-2s)] on the interval."""
    x = np.asarray(x, dtype=float)
    c = fractional_constant(1, s)
    return c / (2.0 * s) * ((x - a) ** (-2.0 * s) + (b - x) ** (-2.0 * s))


@dataclass(eq=False)
class FractionalForm:
    """Galerkin matrix of the s-form, split like the log-Laplacian form."""

    s: float
    mesh: Mesh
    A_s: np.ndarray
    interior: np.ndarray
    exterior: np.ndarray
    kappa_s: np.ndarray     # exterior potential at the mesh nodes
    c_ns: float


def assemble_fractional(mesh: Mesh, s: float,
                        quad: QuadratureSpec | None = None,
                        consistency_tol: float = 1e-8) -> FractionalForm:
    """Assemble the restricted fractional form for 0 < s <= 1/2.

    Grading is strengthened with s: the kernel power is 1 + 2s, so the
    touching-pair rules get extra subdivision levels as s grows.
    """
    if not 0.0 < s <= 0.5:
        raise ValueError(f"assemble_fractional requires 0 < s <= 1/2, got {s}")
    if mesh.domain.kind != "interval":
        raise NotImplementedError("the fractional form is assembled on intervals")
    quad = quad or QuadratureSpec()
    quad_s = QuadratureSpec(quad.gauss_order + int(math.ceil(4 * s)),
                            quad.singular_subdivisions + int(round(8 * s)),
                            quad.boundary_grading)
    beta = 1.0 + 2.0 * s
    c = fractional_constant(1, s)
    _consistency_check(mesh, beta, quad_s, consistency_tol)
    interior = assemble_interaction_interval(mesh, beta=beta, coef=0.5 * c, quad=quad_s)
    a, b = mesh.domain.a, mesh.domain.b
    exterior = assemble_potential_interval(
        mesh, lambda x: exterior_potential(x, s, a, b), quad_s)
    interior = 0.5 * (interior + interior.T)
    exterior = 0.5 * (exterior + exterior.T)
    return FractionalForm(s=s, mesh=mesh, A_s=interior + exterior,
                          interior=interior, exterior=exterior,
                          kappa_s=exterior_potential(mesh.nodes, s, a, b), c_ns=c)


def expansion_error(forms: FormMatrices, mesh: Mesh, s_list,
                    quad: QuadratureSpec | None = None) -> list[tuple[float, float, float]]:
    """Matrix- and eigenvalue-level first-order expansion errors per s.

    e_form(s) = ||(A_s - M)/s - A||_F / ||A||_F,
    e_eig(s)  = |(lam_1(A_s, M) - 1)/s - lam_1(A, M)|.
    """
    s_list = [float(s) for s in s_list]
    if any(s <= 0 for s in s_list):
        raise ValueError("s values must be positive")
    if any(b >= a for a, b in zip(s_list, s_list[1:])):
        raise ValueError("s_list must be strictly descending")
    A, M = forms.A, forms.M
    lam1 = float(solve_gen_sym(A, M, 1)[0][0])
    nrm = float(np.linalg.norm(A, "fro"))
    rows = []
    for s in s_list:
        frac = assemble_fractional(mesh, s, quad)
        e_form = float(np.linalg.norm((frac.A_s - M) / s - A, "fro")) / nrm
        mu1 = float(solve_gen_sym(frac.A_s, M, 1)[0][0])
        e_eig = abs((mu1 - 1.0) / s - lam1)
        rows.append((s, e_form, e_eig))
    return rows
