"""Nonresonance solver: asymptotically linear problems between the lines
and the first curve of the spectrum.

Psi(u) = E_L(u,u)/2 - int F(x, u) is minimized-maximized along an elastic
string joining -R phi1 to +R phi1 (no sphere constraint); the apex is
polished by Newton on Psi' = 0.  The nodal bound functions of the
nonlinearity are validated pointwise before any solve.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .discretization import FormMatrices, weighted_mass_matrix
from .fucik import _normalize_rows, sign_changing
from .minimax import StringOptions, relax_string, two_segment_path
from .quadrature import gauss_01

logger = logging.getLogger(__name__)

CELL_GAUSS_ORDER = 4


class SpecValidationError(ValueError):
    """A nonlinearity specification violates the pointwise assumptions."""


# ---------------------------------------------------------------------------
# nonlinearity
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class NonlinearitySpec:
    """Nonlinearity with declared asymptotic-slope and primitive bounds.

    The bound arrays are nodal; f, F and the slope fprime are callables of
    (x, s) vectorized in both arguments.  target_point is the curve point
    (alpha, beta) the bounds are measured against.
    """

    f: object
    F: object
    fprime: object
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    Gamma_plus: np.ndarray
    Gamma_minus: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    Delta_plus: np.ndarray
    Delta_minus: np.ndarray
    target_point: tuple
    slopes: tuple = (0.0, 0.0)      # asymptotic (q+, q-), for diagnostics

    def describe(self) -> str:
        a, b = self.target_point
        return (f"slopes q+={self.slopes[0]:.6g} q-={self.slopes[1]:.6g} "
                f"target alpha={a:.6g} beta={b:.6g}")


def default_spec(lam1: float, curve_point: tuple, n_dof: int,
                 fraction: float = 0.5, eps: float = 0.1,
                 kappa: float = 1.0) -> NonlinearitySpec:
    """Piecewise-linear nonlinearity with a bounded forced perturbation.

    f(x, s) = q+ s+ - q- s- + eps (arctan s + kappa), with the slopes
    interpolating between (lam1, lam1) and the curve point at the given
    fraction.  kappa != 0 keeps f(x, 0) != 0, so the zero function does not
    solve the problem and the guaranteed solution is nontrivial.
    """
    alpha, beta = curve_point
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie strictly in (0, 1)")
    qp = lam1 + fraction * (alpha - lam1)
    qm = lam1 + fraction * (beta - lam1)
    margin = eps * (0.5 * math.pi + abs(kappa))

    def f(x, s):
        s = np.asarray(s, dtype=float)
        return (qp * np.maximum(s, 0.0) + qm * np.minimum(s, 0.0)
                + eps * (np.arctan(s) + kappa))

    def F(x, s):
        s = np.asarray(s, dtype=float)
        return (0.5 * (qp * np.maximum(s, 0.0) ** 2 + qm * np.minimum(s, 0.0) ** 2)
                + eps * (s * np.arctan(s) - 0.5 * np.log1p(s * s) + kappa * s))

    def fprime(x, s):
        s = np.asarray(s, dtype=float)
        lin = np.where(s > 0.0, qp, np.where(s < 0.0, qm, 0.5 * (qp + qm)))
        return lin + eps / (1.0 + s * s)

    ones = np.ones(n_dof)
    return NonlinearitySpec(
        f=f, F=F, fprime=fprime,
        gamma_plus=(qp - margin) * ones, gamma_minus=(qm - margin) * ones,
        Gamma_plus=(qp + margin) * ones, Gamma_minus=(qm + margin) * ones,
        delta_plus=(qp - margin) * ones, delta_minus=(qm - margin) * ones,
        Delta_plus=(qp + margin) * ones, Delta_minus=(qm + margin) * ones,
        target_point=(float(alpha), float(beta)), slopes=(qp, qm))


def validate_spec(spec: NonlinearitySpec, lam1: float,
                  f_consistency_tol: float = 1e-8,
                  sample_points=None) -> None:
    """Enforce the pointwise slope/primitive inequalities and F = int f."""
    alpha, beta = spec.target_point
    tol = 1e-12 * max(1.0, abs(alpha), abs(beta))

    def check(name, ok):
        if not bool(ok):
            raise SpecValidationError(f"nonlinearity bounds violate: {name}")

    check("lam1 <= gamma+", np.all(spec.gamma_plus >= lam1 - tol))
    check("gamma+ < Gamma+", np.all(spec.gamma_plus < spec.Gamma_plus))
    check("Gamma+ <= alpha", np.all(spec.Gamma_plus <= alpha + tol))
    check("lam1 <= gamma-", np.all(spec.gamma_minus >= lam1 - tol))
    check("gamma- < Gamma-", np.all(spec.gamma_minus < spec.Gamma_minus))
    check("Gamma- <= beta", np.all(spec.Gamma_minus <= beta + tol))
    check("lam1 <= delta+", np.all(spec.delta_plus >= lam1 - tol))
    check("delta+ <= Delta+", np.all(spec.delta_plus <= spec.Delta_plus))
    check("lam1 <= delta-", np.all(spec.delta_minus >= lam1 - tol))
    check("delta- <= Delta-", np.all(spec.delta_minus <= spec.Delta_minus))
    check("delta+ > lam1 on positive measure", np.any(spec.delta_plus > lam1 + tol))
    check("delta- > lam1 on positive measure", np.any(spec.delta_minus > lam1 + tol))
    check("Delta+ < alpha a.e. or Delta- < beta a.e.",
          np.all(spec.Delta_plus < alpha - tol) or np.all(spec.Delta_minus < beta - tol))

    if sample_points is None:
        sample_points = [(-0.25, -3.0), (0.0, -0.7), (0.1, 0.4), (0.25, 2.5)]
    t, w = gauss_01(20)
    for x, s in sample_points:
        quad_f = float(np.sum(w * np.asarray(spec.f(x, s * t))) * s)
        val = float(np.asarray(spec.F(x, s)))
        if abs(val - quad_f) > f_consistency_tol * max(1.0, abs(val)):
            raise SpecValidationError(
                f"F inconsistent with f at (x={x}, s={s}): {val} vs {quad_f}")


# ---------------------------------------------------------------------------
# functional
# ---------------------------------------------------------------------------

def _cell_rule(forms: FormMatrices):
    mesh = forms.mesh
    if mesh.domain.kind != "interval":
        raise NotImplementedError("the nonresonance functional runs on intervals")
    t, w = gauss_01(CELL_GAUSS_ORDER)
    xs = mesh.elements[:, 0][:, None] + mesh.h * t[None, :]
    ws = np.broadcast_to(mesh.h * w[None, :], xs.shape)
    return t, xs, ws


def _at_gauss(U: np.ndarray, t: np.ndarray) -> np.ndarray:
    """P1 values of each row of U on every cell Gauss point: (k, cells, g)."""
    k, n = U.shape
    Uf = np.zeros((k, n + 2))
    Uf[:, 1:-1] = U
    return Uf[:, :-1, None] * (1 - t)[None, None, :] + Uf[:, 1:, None] * t[None, None, :]


def psi_batch(spec: NonlinearitySpec, forms: FormMatrices, U: np.ndarray) -> np.ndarray:
    t, xs, ws = _cell_rule(forms)
    vals = spec.F(xs[None], _at_gauss(U, t))
    return 0.5 * np.einsum("ij,ij->i", U, U @ forms.A) - (vals * ws[None]).sum(axis=(1, 2))


def psi(spec: NonlinearitySpec, forms: FormMatrices, u: np.ndarray) -> float:
    """Psi(u) = u'Au/2 - quadrature of F(x, u)."""
    val = float(psi_batch(spec, forms, np.asarray(u, dtype=float)[None, :])[0])
    if not np.isfinite(val):
        raise ValueError("non-finite primitive values in psi")
    return val


def psi_gradient_batch(spec: NonlinearitySpec, forms: FormMatrices,
                       U: np.ndarray) -> np.ndarray:
    t, xs, ws = _cell_rule(forms)
    fu = spec.f(xs[None], _at_gauss(U, t)) * ws[None]
    k, n = U.shape
    load = np.zeros((k, n + 2))
    left = (fu * (1 - t)[None, None, :]).sum(axis=2)
    right = (fu * t[None, None, :]).sum(axis=2)
    load[:, :-1] += left
    load[:, 1:] += right
    return U @ forms.A - load[:, 1:-1]


def psi_gradient(spec: NonlinearitySpec, forms: FormMatrices, u: np.ndarray) -> np.ndarray:
    """Nodal gradient A u - load(f(., u)); exact derivative of psi's quadrature."""
    return psi_gradient_batch(spec, forms, np.asarray(u, dtype=float)[None, :])[0]


def psi_hessian(spec: NonlinearitySpec, forms: FormMatrices, u: np.ndarray) -> np.ndarray:
    t, xs, ws = _cell_rule(forms)
    fp = spec.fprime(xs, _at_gauss(np.asarray(u)[None, :], t)[0]) * ws
    n = forms.n
    K = np.zeros((n + 2, n + 2))
    idx = np.arange(n + 1)
    np.add.at(K, (idx, idx), (fp * (1 - t) ** 2).sum(axis=1))
    np.add.at(K, (idx, idx + 1), (fp * (1 - t) * t).sum(axis=1))
    np.add.at(K, (idx + 1, idx), (fp * (1 - t) * t).sum(axis=1))
    np.add.at(K, (idx + 1, idx + 1), (fp * t ** 2).sum(axis=1))
    return forms.A - K[1:-1, 1:-1]


# ---------------------------------------------------------------------------
# mountain-pass geometry
# ---------------------------------------------------------------------------

def endpoint_scale(spec: NonlinearitySpec, forms: FormMatrices, phi1: np.ndarray,
                   margin: float = 1.0, max_doublings: int = 40) -> float:
    """Smallest R from a doubling schedule with Psi(+-R phi1) <= -margin."""
    R = 1.0
    for _ in range(max_doublings):
        if max(psi(spec, forms, R * phi1), psi(spec, forms, -R * phi1)) <= -margin:
            return R
        R *= 2.0
    raise SpecValidationError(
        "endpoint schedule exhausted: Psi(+-R phi1) never reached the margin; "
        "the primitive bounds are degenerate at lam1")


@dataclass(eq=False)
class MountainPassResult:
    u: np.ndarray
    psi_value: float
    grad_norm: float
    R: float
    norm_u: float
    converged: bool
    sweeps: int
    newton_iters: int
    frozen_slope_residual: float
    sign_class_changes: bool


@dataclass(frozen=True)
class NonresonanceOptions:
    m: int = 41
    max_sweeps: int = 4000
    step_safety: float = 0.4
    grad_tol_rel: float = 1e-6      # times ||A||
    nontrivial_rel: float = 1e-3    # times R, lower bound on ||u||_2
    margin: float = 1.0
    newton_max: int = 80
    candidates: int = 6


def _newton_polish(spec, forms, u0, max_iter):
    u = u0.copy()
    for it in range(max_iter):
        g = psi_gradient(spec, forms, u)
        gn = float(np.linalg.norm(g))
        if gn < 1e-14:
            return u, it, True
        try:
            du = np.linalg.solve(psi_hessian(spec, forms, u), g)
        except np.linalg.LinAlgError:
            return u, it, False
        cap = 10.0 * max(float(np.linalg.norm(u)), 1.0)
        if float(np.linalg.norm(du)) > cap:
            du *= cap / float(np.linalg.norm(du))
        u = u - du
        if not np.isfinite(u).all():
            return u, it, False
    return u, max_iter, False


def solve_nonresonance(spec: NonlinearitySpec, forms: FormMatrices,
                       eigenpairs, opts: NonresonanceOptions | None = None,
                       lam1: float | None = None) -> MountainPassResult:
    """Mountain-pass solve of Psi between +R phi1 and -R phi1.

    The unconstrained string (climbing image on) localizes the ridge; Newton
    candidates are drawn from the highest sampled states and accepted when
    the gradient meets the tolerance and the norm clears the nontriviality
    threshold.  Non-convergence is reported, never masked.
    """
    opts = opts or NonresonanceOptions()
    lam1 = eigenpairs[0].lam if lam1 is None else lam1
    validate_spec(spec, lam1)
    phi1 = eigenpairs[0].vector
    phi2 = eigenpairs[1].vector
    R = endpoint_scale(spec, forms, phi1, margin=opts.margin)
    M = forms.M

    nodes = two_segment_path(-R * phi1, 0.7 * R * phi2, R * phi1, opts.m)
    mass_scale = float(np.abs(forms.M).sum(axis=1).max())
    slope_scale = float(max(np.abs(spec.Gamma_plus).max(),
                            np.abs(spec.Gamma_minus).max()))
    step = opts.step_safety / (forms.norm_A + slope_scale * mass_scale)
    sopts = StringOptions(m=opts.m, max_sweeps=opts.max_sweeps,
                          grad_tol=0.1 * opts.grad_tol_rel * forms.norm_A,
                          stall_window=40, stall_tol=1e-12,
                          climb=True, climb_after=10, subsamples=4)

    def ebatch(U):
        return psi_batch(spec, forms, U)

    def dbatch(U):
        G = psi_gradient_batch(spec, forms, U)
        return G, np.linalg.norm(G, axis=1)

    result = relax_string(nodes, ebatch, dbatch, step, sopts)

    # Newton candidates: the apex plus the highest remaining sampled states
    cand_states = [result.apex]
    order = np.argsort(ebatch(result.path))[::-1]
    cand_states.extend(result.path[i] for i in order[:opts.candidates])
    grad_tol = opts.grad_tol_rel * forms.norm_A
    threshold = opts.nontrivial_rel * R
    for u0 in cand_states:
        u, iters, ok = _newton_polish(spec, forms, u0, opts.newton_max)
        if not ok:
            continue
        norm_u = float(np.sqrt(u @ M @ u))
        gn = float(np.linalg.norm(psi_gradient(spec, forms, u)))
        if gn <= grad_tol and norm_u >= threshold:
            qp, qm = spec.slopes
            up = np.maximum(u, 0.0)
            um = np.maximum(-u, 0.0)
            frozen = forms.A @ u - (qp * (M @ up) - qm * (M @ um))
            frozen_rel = float(np.linalg.norm(frozen)
                               / max(np.linalg.norm(forms.A @ u), 1e-300))
            logger.info("nonresonance frozen-slope residual: %.3e", frozen_rel)
            return MountainPassResult(
                u=u, psi_value=psi(spec, forms, u), grad_norm=gn, R=R,
                norm_u=norm_u, converged=True, sweeps=result.sweeps,
                newton_iters=iters, frozen_slope_residual=frozen_rel,
                sign_class_changes=sign_changing(u))
    u = result.apex
    return MountainPassResult(
        u=u, psi_value=float(psi(spec, forms, u)),
        grad_norm=float(np.linalg.norm(psi_gradient(spec, forms, u))), R=R,
        norm_u=float(np.sqrt(u @ M @ u)), converged=False, sweeps=result.sweeps,
        newton_iters=0, frozen_slope_residual=np.inf,
        sign_class_changes=sign_changing(u))


# ---------------------------------------------------------------------------
# lower-bound functional on the sphere
# ---------------------------------------------------------------------------

def j_minimax(spec: NonlinearitySpec, forms: FormMatrices, eigenpairs,
              m: int = 41, max_sweeps: int = 6000) -> tuple[float, np.ndarray]:
    """Minimax level d of J(u) = u'Au - (u+)'M_{D+}(u+) - (u-)'M_{D-}(u-) on
    the sphere; d > 0 certifies the mountain-pass geometry of the spec."""
    A, M = forms.A, forms.M
    Mp = weighted_mass_matrix(forms.mesh, spec.Delta_plus)
    Mm = weighted_mass_matrix(forms.mesh, spec.Delta_minus)
    phi1 = eigenpairs[0].vector
    phi2 = eigenpairs[1].vector
    w = forms.lumped

    def ebatch(U):
        UP = np.maximum(U, 0.0)
        UM = np.maximum(-U, 0.0)
        return (np.einsum("ij,ij->i", U, U @ A)
                - np.einsum("ij,ij->i", UP, UP @ Mp)
                - np.einsum("ij,ij->i", UM, UM @ Mm))

    def dbatch(U):
        UP = np.maximum(U, 0.0)
        UM = np.maximum(-U, 0.0)
        D = 2.0 * (U @ A - (U > 0) * (UP @ Mp) + (U < 0) * (UM @ Mm))
        MU = U @ M
        t = np.einsum("ij,ij->i", U, D) / np.einsum("ij,ij->i", U, MU)
        Rv = D - t[:, None] * MU
        G = Rv / w[None, :]
        return G, np.sqrt(np.maximum(np.einsum("ij,ij->i", Rv, G), 0.0))

    def retract(U):
        return _normalize_rows(M, U)

    def metric(Dv):
        return np.sqrt(np.maximum(np.einsum("ij,ij->i", Dv, Dv @ M), 0.0))

    lam_scale = float(np.abs(np.linalg.eigvalsh(A / np.sqrt(np.outer(w, w)))).max())
    slope_scale = float(max(spec.Delta_plus.max(), spec.Delta_minus.max()))
    step = 0.45 / (2.0 * (lam_scale + slope_scale + 1.0))
    nodes = _normalize_rows(M, two_segment_path(-phi1, phi2, phi1, m))
    sopts = StringOptions(m=m, max_sweeps=max_sweeps, stall_window=30,
                          stall_tol=1e-11, climb=True, climb_after=40)
    result = relax_string(nodes, ebatch, dbatch, step, sopts,
                          retract=retract, metric=metric)

    # Newton on the two-sided nodal system certifies the level
    u, t = result.apex, result.c
    n = forms.n
    jac = np.zeros((n + 1, n + 1))
    for _ in range(60):
        up = np.maximum(u, 0.0)
        um = np.maximum(-u, 0.0)
        Mu = M @ u
        F = A @ u - Mp @ up + Mm @ um - t * Mu
        g = 0.5 * (float(u @ Mu) - 1.0)
        if np.sqrt(float(F @ F) + g * g) < 1e-13:
            break
        pp = (u > 0.0).astype(float)
        pm = (u < 0.0).astype(float)
        jac[:n, :n] = A - Mp * pp[None, :] - Mm * pm[None, :] - t * M
        jac[:n, n] = -Mu
        jac[n, :n] = Mu
        jac[n, n] = 0.0
        try:
            dz = np.linalg.solve(jac, -np.concatenate([F, [g]]))
        except np.linalg.LinAlgError:
            break
        u = u + 0.7 * dz[:n]
        t = t + 0.7 * dz[n]
    d = float(ebatch(u[None, :])[0])
    return d, u
