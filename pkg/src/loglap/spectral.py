"""Generalized symmetric eigensolver and sign-structure analysis.

The pencil (A, M) is reduced to a standard symmetric problem through a
Cholesky factorization of M and solved densely; eigenvectors are
M-orthonormal with a deterministic global sign.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .discretization import FormMatrices, weighted_mass_matrix

SIGN_POSITIVE = "positive"
SIGN_NEGATIVE = "negative"
SIGN_CHANGING = "sign_changing"

DEFAULT_DEAD_ZONE = 1e-6


@dataclass(frozen=True)
class SignReport:
    """Dead-zone quantization of the sign structure of a nodal vector."""

    pos_measure: float
    neg_measure: float
    theta: float
    sign_class: str


@dataclass(eq=False)
class EigenPair:
    """One (lambda_k, u_k) pair; u is M-normalized with M-weighted mean >= 0."""

    index: int
    lam: float
    vector: np.ndarray
    sign_class: str
    residual: float


def classify_sign(u: np.ndarray, theta: float = DEFAULT_DEAD_ZONE) -> SignReport:
    """Classify a nodal vector as positive / negative / sign_changing.

    Nodes within theta * ||u||_inf of zero are a dead zone separating
    quadrature noise from genuine sign change.
    """
    u = np.asarray(u, dtype=float)
    peak = np.abs(u).max() if u.size else 0.0
    if peak == 0.0:
        raise ValueError("cannot classify the zero vector")
    cut = theta * peak
    pos = float(np.mean(u > cut))
    neg = float(np.mean(u < -cut))
    if pos > 0.0 and neg > 0.0:
        cls = SIGN_CHANGING
    elif pos > 0.0:
        cls = SIGN_POSITIVE
    else:
        cls = SIGN_NEGATIVE
    return SignReport(pos_measure=pos, neg_measure=neg, theta=theta, sign_class=cls)


def fix_sign(u: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Deterministic global sign: M-weighted mean >= 0, largest entry breaking ties."""
    mean = float(M.sum(axis=0) @ u)
    if abs(mean) > 1e-12 * float(np.abs(u).max()):
        return u if mean >= 0 else -u
    k = int(np.argmax(np.abs(u)))
    return u if u[k] >= 0 else -u


def solve_gen_sym(A: np.ndarray, B: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """First k eigenpairs of A x = lam B x via Cholesky reduction of B."""
    L = cholesky(B, lower=True)
    W = solve_triangular(L, A, lower=True)
    C = solve_triangular(L, W.T, lower=True)
    C = 0.5 * (C + C.T)
    lams, Y = np.linalg.eigh(C)
    X = solve_triangular(L, Y[:, :k], lower=True, trans="T")
    return lams[:k], X


def solve_eig(forms: FormMatrices, k: int, theta: float = DEFAULT_DEAD_ZONE) -> list[EigenPair]:
    """First k eigenpairs of A u = lambda M u, ascending, M-orthonormal."""
    n = forms.n
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got {k}")
    lams, X = solve_gen_sym(forms.A, forms.M, k)
    scale = forms.norm_A
    out = []
    for i in range(k):
        u = X[:, i]
        u = u / np.sqrt(u @ forms.M @ u)
        u = fix_sign(u, forms.M)
        res = float(np.linalg.norm(forms.A @ u - lams[i] * (forms.M @ u))) / scale
        out.append(EigenPair(index=i + 1, lam=float(lams[i]), vector=u,
                             sign_class=classify_sign(u, theta).sign_class,
                             residual=res))
    return out


def weighted_solve(forms: FormMatrices, a: np.ndarray, k: int,
                   theta: float = DEFAULT_DEAD_ZONE) -> list[EigenPair]:
    """First k pairs of A u = mu M_a u for a positive nodal weight a.

    Each returned u solves the weighted problem with effective weight mu * a.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise ValueError("weighted_solve requires a strictly positive weight")
    Ma = weighted_mass_matrix(forms.mesh, a)
    lams, X = solve_gen_sym(forms.A, Ma, k)
    scale = forms.norm_A
    out = []
    for i in range(k):
        u = X[:, i]
        u = u / np.sqrt(u @ Ma @ u)
        u = fix_sign(u, forms.M)
        res = float(np.linalg.norm(forms.A @ u - lams[i] * (Ma @ u))) / scale
        out.append(EigenPair(index=i + 1, lam=float(lams[i]), vector=u,
                             sign_class=classify_sign(u, theta).sign_class,
                             residual=res))
    return out
