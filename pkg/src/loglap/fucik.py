"""Constrained functional on the L2 sphere and the first curve of the spectrum.

E_r(u) = u'Au - r (u+)'M(u+) restricted to the sphere u'Mu = 1 is relaxed
with the elastic-string engine; the converged apex is then polished by a
semi-smooth Newton iteration on the nodal system

    A u = alpha M u+ - beta M u-,   (alpha, beta) = (r + theta, theta),

whose relative residual certifies membership of the computed pair.  The
curve through (lambda_2, lambda_2) is traced by warm-started continuation
of that system along an increasing r-grid.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from weakref import WeakKeyDictionary

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .discretization import FormMatrices, positive_part
from .minimax import StringOptions, StringResult, relax_string, two_segment_path
from .spectral import solve_gen_sym

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# functional
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FucikFunctional:
    """Diagonal-offset functional E_r on the nodal basis; r >= 0."""

    r: float
    forms: FormMatrices
    _lmax_riesz: float = field(default=0.0, repr=False)

    def __post_init__(self):
        if self.r < 0.0:
            raise ValueError("the diagonal offset r must be >= 0")

    @property
    def riesz_scale(self) -> float:
        """Largest eigenvalue of A in the lumped-mass metric (step-size scale)."""
        if self._lmax_riesz == 0.0:
            w = self.forms.lumped
            C = self.forms.A / np.sqrt(np.outer(w, w))
            self._lmax_riesz = float(np.abs(np.linalg.eigvalsh(C)).max())
        return self._lmax_riesz


def energy(func: FucikFunctional, u: np.ndarray) -> float:
    """E_r(u) = u'Au - r (u+)'M(u+)."""
    u = np.asarray(u, dtype=float)
    up = positive_part(u)
    return float(u @ func.forms.A @ u - func.r * (up @ func.forms.M @ up))


def energy_batch(func: FucikFunctional, U: np.ndarray) -> np.ndarray:
    UP = np.maximum(U, 0.0)
    e = np.einsum("ij,ij->i", U, U @ func.forms.A)
    e -= func.r * np.einsum("ij,ij->i", UP, UP @ func.forms.M)
    return e


def _euclid_gradient_batch(func: FucikFunctional, U: np.ndarray) -> np.ndarray:
    """Gradient of the discrete energy: the (u+)-term is differentiated with
    the nodal active set {u_i > 0}; ties are inactive."""
    UP = np.maximum(U, 0.0)
    act = (U > 0.0).astype(float)
    return 2.0 * (U @ func.forms.A - func.r * act * (UP @ func.forms.M))


def constrained_gradient(func: FucikFunctional, u: np.ndarray) -> np.ndarray:
    """Riesz representative (lumped-mass inner product) of the tangential
    derivative of E_r at u on the sphere; vanishes exactly at critical points."""
    u = np.asarray(u, dtype=float)
    g, _ = _tangent_batch(func, u[None, :])
    return g[0]


def constrained_gradient_norm(func: FucikFunctional, u: np.ndarray) -> float:
    _, norms = _tangent_batch(func, np.asarray(u, dtype=float)[None, :])
    return float(norms[0])


def _tangent_batch(func: FucikFunctional, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tangential gradients and their dual norms for a batch of sphere points."""
    M = func.forms.M
    w = func.forms.lumped
    D = _euclid_gradient_batch(func, U)
    MU = U @ M
    t = np.einsum("ij,ij->i", U, D) / np.einsum("ij,ij->i", U, MU)
    R = D - t[:, None] * MU
    G = R / w[None, :]
    norms = np.sqrt(np.maximum(np.einsum("ij,ij->i", R, G), 0.0))
    return G, norms


def lagrange_multiplier(func: FucikFunctional, u: np.ndarray) -> float:
    """Multiplier t with E_r'(u) = t I'(u) at a critical point; equals the
    energy on the constraint sphere, so (r + t, t) is the spectrum candidate."""
    u = np.asarray(u, dtype=float)
    return energy(func, u) / float(u @ func.forms.M @ u)


# ---------------------------------------------------------------------------
# paths
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class PathEnsemble:
    """Discretized path on the constraint sphere joining -phi1 to +phi1."""

    nodes: np.ndarray  # (m, n), every row M-normalized
    m: int


def _normalize_rows(M: np.ndarray, U: np.ndarray) -> np.ndarray:
    nrm = np.sqrt(np.einsum("ij,ij->i", U, U @ M))
    return U / nrm[:, None]


def initial_path(phi1: np.ndarray, phi: np.ndarray, m: int,
                 forms: FormMatrices) -> PathEnsemble:
    """Two-segment normalized path -phi1 -> phi -> +phi1 sampled at m nodes."""
    if m < 3:
        raise ValueError("a path needs at least 3 nodes")
    M = forms.M
    phi1 = np.asarray(phi1, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n1 = float(np.sqrt(phi1 @ M @ phi1))
    n2 = float(np.sqrt(phi @ M @ phi))
    if n2 == 0.0:
        raise ValueError("seed vector must be nonzero")
    cos = abs(float(phi1 @ M @ phi)) / (n1 * n2)
    if cos > 1.0 - 1e-10:
        raise ValueError("seed vector is parallel to phi1")
    nodes = two_segment_path(-phi1 / n1, phi / n2, phi1 / n1, m)
    return PathEnsemble(nodes=_normalize_rows(M, nodes), m=m)


# ---------------------------------------------------------------------------
# Newton refinement of the nodal system
# ---------------------------------------------------------------------------

def newton_refine(forms: FormMatrices, r: float, u0: np.ndarray, theta0: float,
                  max_iter: int = 60, tol: float = 1e-12) -> tuple[np.ndarray, float, float, bool]:
    """Semi-smooth Newton on A u - (r+th) M u+ + th M u- = 0, u'Mu = 1.

    Returns (u, theta, relative_residual, converged).  Ties u_i = 0 are
    treated as inactive, matching the one-sided derivative of the clamp.
    """
    A, M = forms.A, forms.M
    n = forms.n
    u = np.asarray(u0, dtype=float).copy()
    nrm = float(np.sqrt(u @ M @ u))
    if nrm == 0.0:
        return u, theta0, np.inf, False
    u /= nrm
    th = float(theta0)
    jac = np.zeros((n + 1, n + 1))
    for _ in range(max_iter):
        up = np.maximum(u, 0.0)
        um = np.maximum(-u, 0.0)
        Mu = M @ u
        F = A @ u - (r + th) * (M @ up) + th * (M @ um)
        g = 0.5 * (float(u @ Mu) - 1.0)
        res = np.sqrt(float(F @ F) + g * g)
        if res < 1e-14:
            break
        pp = (u > 0.0).astype(float)
        pm = (u < 0.0).astype(float)
        jac[:n, :n] = A - (r + th) * (M * pp[None, :]) - th * (M * pm[None, :])
        jac[:n, n] = -Mu
        jac[n, :n] = Mu
        jac[n, n] = 0.0
        try:
            dz = np.linalg.solve(jac, -np.concatenate([F, [g]]))
        except np.linalg.LinAlgError:
            return u, th, np.inf, False
        damp = 1.0 if res < 1e-4 else 0.5
        u = u + damp * dz[:n]
        th = th + damp * dz[n]
        if not np.isfinite(u).all() or not np.isfinite(th):
            return u, th, np.inf, False
    rel = _literal_residual(forms, r + th, th, u)
    return u, th, rel, rel < tol


def _literal_residual(forms: FormMatrices, alpha: float, beta: float,
                      u: np.ndarray) -> float:
    up = np.maximum(u, 0.0)
    um = np.maximum(-u, 0.0)
    rvec = forms.A @ u - alpha * (forms.M @ up) + beta * (forms.M @ um)
    den = max(float(np.linalg.norm(forms.A @ u)), 1e-300)
    return float(np.linalg.norm(rvec)) / den


def sign_changing(u: np.ndarray, rel_tol: float = 1e-8) -> bool:
    peak = float(np.abs(u).max())
    if peak == 0.0:
        return False
    return bool((u > rel_tol * peak).any() and (u < -rel_tol * peak).any())


# ---------------------------------------------------------------------------
# mountain pass
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MountainPassOptions:
    m: int = 41
    max_sweeps: int = 20000
    step_safety: float = 0.45
    grad_tol_rel: float = 1e-6     # times ||A||, for the string stop
    refine_tol: float = 1e-10      # literal-system residual target
    stall_window: int = 30
    stall_tol: float = 1e-10
    climb: bool = True
    retries: int = 2


@dataclass(eq=False)
class MountainPassOutcome:
    c: float
    u_crit: np.ndarray
    converged: bool
    residual: float
    grad_norm: float
    sweeps: int
    stop_reason: str
    apex_index: int
    path: np.ndarray


def _string_options(func: FucikFunctional, opts: MountainPassOptions,
                    climb: bool) -> tuple[StringOptions, float]:
    lam_scale = func.riesz_scale + 1.2 * func.r + 1.0
    step = opts.step_safety / (2.0 * lam_scale)
    sopts = StringOptions(m=opts.m, max_sweeps=opts.max_sweeps,
                          step_safety=opts.step_safety,
                          grad_tol=opts.grad_tol_rel * func.forms.norm_A,
                          stall_window=opts.stall_window, stall_tol=opts.stall_tol,
                          climb=climb, climb_after=40)
    return sopts, step


def _relax(func: FucikFunctional, nodes: np.ndarray, opts: MountainPassOptions,
           climb: bool) -> StringResult:
    M = func.forms.M
    sopts, step = _string_options(func, opts, climb)

    def ebatch(U):
        return energy_batch(func, U)

    def dbatch(U):
        return _tangent_batch(func, U)

    def retract(U):
        return _normalize_rows(M, U)

    def metric(D):
        return np.sqrt(np.maximum(np.einsum("ij,ij->i", D, D @ M), 0.0))

    return relax_string(nodes, ebatch, dbatch, step, sopts,
                        retract=retract, metric=metric)


def mountain_pass(func: FucikFunctional, path: PathEnsemble,
                  opts: MountainPassOptions | None = None) -> MountainPassOutcome:
    """Minimax estimate of the critical value c(r) with Newton certification.

    The string relaxes until the critical value stagnates; the apex is then
    polished on the nodal system.  A refusal to converge is reported in the
    outcome, never silently replaced by a wrong value.
    """
    opts = opts or MountainPassOptions()
    forms = func.forms
    e_end = energy(func, path.nodes[0])  # E_r(-phi1), the strict lower barrier
    nodes = path.nodes
    result = None
    for attempt in range(opts.retries + 1):
        climb = opts.climb if attempt == 0 else True
        result = _relax(func, nodes, opts, climb)
        u_ref, th, rel, ok = newton_refine(forms, func.r, result.apex, result.c,
                                           tol=opts.refine_tol)
        accepted = (ok and sign_changing(u_ref)
                    and th > e_end + 1e-9 * max(1.0, abs(e_end)))
        if accepted:
            out_path = result.path.copy()
            k = int(np.argmax(energy_batch(func, out_path)))
            if 0 < k < out_path.shape[0] - 1:
                out_path[k] = u_ref
            return MountainPassOutcome(
                c=th, u_crit=u_ref, converged=True, residual=rel,
                grad_norm=constrained_gradient_norm(func, u_ref),
                sweeps=result.sweeps, stop_reason=result.stop_reason,
                apex_index=k, path=out_path)
        logger.info("mountain pass attempt %d rejected (ok=%s theta=%.6g)",
                    attempt, ok, th)
        nodes = result.path  # continue relaxing the same string, climbing on
    return MountainPassOutcome(
        c=result.c, u_crit=result.apex, converged=False,
        residual=_literal_residual(forms, func.r + result.c, result.c, result.apex),
        grad_norm=result.grad_norm, sweeps=result.sweeps,
        stop_reason="not_converged", apex_index=result.apex_index, path=result.path)


# ---------------------------------------------------------------------------
# membership verification
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class VerifyResult:
    residual: float
    u: np.ndarray
    iterations: int
    converged: bool


_SOLVER_CACHE: WeakKeyDictionary = WeakKeyDictionary()


def _shifted_solver(forms: FormMatrices):
    """Cholesky factor of A + shift*M with shift making the matrix SPD."""
    cached = _SOLVER_CACHE.get(forms)
    if cached is None:
        lam_min = solve_gen_sym(forms.A, forms.M, 1)[0][0]
        shift = max(0.0, -float(lam_min)) + 1.0
        factor = cho_factor(forms.A + shift * forms.M)
        cached = (shift, factor)
        _SOLVER_CACHE[forms] = cached
    return cached


def verify_pair(forms: FormMatrices, alpha: float, beta: float, u0: np.ndarray,
                tol: float = 1e-12, max_iter: int = 200,
                damping: float = 0.5) -> VerifyResult:
    """Damped fixed-point iteration on A u = alpha M u+ - beta M u-.

    Returns the best relative residual seen and the matching iterate; a
    residual-monotonicity guard halves the damping when the iteration
    overshoots.  Small residual is evidence of membership of (alpha, beta).
    """
    u0 = np.asarray(u0, dtype=float)
    if not np.any(u0):
        raise ValueError("seed vector must be nonzero")
    M = forms.M
    shift, factor = _shifted_solver(forms)
    u = u0 / np.sqrt(u0 @ M @ u0)
    best_res = np.inf
    best_u = u.copy()
    damp = damping
    iters = 0
    for iters in range(1, max_iter + 1):
        res = _literal_residual(forms, alpha, beta, u)
        if res < best_res:
            best_res = res
            best_u = u.copy()
        elif res > 1.5 * best_res:
            damp = max(damp * 0.5, 0.0625)
        if best_res <= tol:
            break
        up = np.maximum(u, 0.0)
        um = np.maximum(-u, 0.0)
        v = cho_solve(factor, M @ (alpha * up - beta * um + shift * u))
        vn = float(np.sqrt(v @ M @ v))
        if vn == 0.0 or not np.isfinite(vn):
            break
        v /= vn
        if float(v @ M @ u) < 0.0:
            v = -v
        u = u + damp * (v - u)
        u = u / np.sqrt(u @ M @ u)
    return VerifyResult(residual=float(best_res), u=best_u, iterations=iters,
                        converged=bool(best_res <= tol))


# ---------------------------------------------------------------------------
# curve tracing
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FucikPoint:
    """One point of the spectrum: alpha = r + c, beta = c for the direct
    points; the mirrored points swap alpha and beta (eigenfunction negated)."""

    alpha: float
    beta: float
    c: float
    r: float
    eigenfunction: np.ndarray
    residual: float
    iterations: int
    apex_index: int
    converged: bool
    mirrored: bool = False


@dataclass(eq=False)
class CurveResult:
    points: list
    r_grid: np.ndarray
    lam1: float
    lam2: float
    strategy: str

    @property
    def direct_points(self) -> list:
        return [p for p in self.points if not p.mirrored]

    @property
    def all_converged(self) -> bool:
        return all(p.converged for p in self.points)


@dataclass(frozen=True)
class TraceOptions:
    strategy: str = "continuation"   # continuation | string
    mp: MountainPassOptions = MountainPassOptions()
    max_bisections: int = 6
    lipschitz_slack: float = 1e-6


def _continuation_step(forms: FormMatrices, r_from: float, r_to: float,
                       u: np.ndarray, th: float, lam1: float,
                       opts: TraceOptions) -> tuple[np.ndarray, float, float, int, bool]:
    """Advance the curve point from r_from to r_to, bisecting on failure."""
    total_iters = 0

    def ok_point(th_new, u_new, th_ref):
        if not sign_changing(u_new):
            return False
        if th_new <= lam1 + 1e-10 * max(1.0, abs(lam1)):
            return False
        # the curve is non-increasing in r with Lipschitz slope one
        if th_new > th_ref + opts.lipschitz_slack * max(1.0, abs(th_ref)):
            return False
        return True

    def advance(r0, r1, u0, th0, depth):
        nonlocal total_iters
        u1, th1, rel, conv = newton_refine(forms, r1, u0, th0)
        total_iters += 1
        if conv and ok_point(th1, u1, th0):
            return u1, th1, rel, True
        if depth >= opts.max_bisections:
            return u0, th0, np.inf, False
        rm = 0.5 * (r0 + r1)
        um, thm, _, okm = advance(r0, rm, u0, th0, depth + 1)
        if not okm:
            return u0, th0, np.inf, False
        return advance(rm, r1, um, thm, depth + 1)

    u_new, th_new, rel, ok = advance(r_from, r_to, u, th, 0)
    return u_new, th_new, rel, total_iters, ok


def trace_curve(forms: FormMatrices, r_grid, opts: TraceOptions | None = None,
                eigenpairs=None) -> CurveResult:
    """Trace (r + c(r), c(r)) over an ascending r-grid, warm-started.

    Continuation (default) advances the Newton-certified point from the
    previous r with bisection substeps; the string strategy reruns the
    mountain pass per grid point seeded with the previous eigenfunction.
    Mirrored points (c(r), r + c(r)) are appended after the direct points.
    """
    opts = opts or TraceOptions()
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or r_grid.size < 1:
        raise ValueError("r_grid must be a nonempty 1-D array")
    if np.any(np.diff(r_grid) <= 0):
        raise ValueError("r_grid must be sorted strictly ascending")
    if abs(r_grid[0]) > 1e-14:
        raise ValueError("r_grid must start at r = 0")
    if eigenpairs is None:
        from .spectral import solve_eig
        eigenpairs = solve_eig(forms, 2)
    lam1, lam2 = eigenpairs[0].lam, eigenpairs[1].lam
    phi1, phi2 = eigenpairs[0].vector, eigenpairs[1].vector

    points: list[FucikPoint] = []
    u_prev, th_prev = phi2, lam2
    r_prev = 0.0
    alive = True
    for r in r_grid:
        if not alive:
            points.append(FucikPoint(alpha=r + th_prev, beta=th_prev, c=th_prev,
                                     r=float(r), eigenfunction=u_prev.copy(),
                                     residual=np.inf, iterations=0, apex_index=-1,
                                     converged=False))
            continue
        if opts.strategy == "continuation":
            if r == 0.0:
                u, th, rel, conv = newton_refine(forms, 0.0, phi2, lam2)
                iters, apex = 1, int(np.argmax(np.abs(u)))
            else:
                u, th, rel, iters, conv = _continuation_step(
                    forms, r_prev, float(r), u_prev, th_prev, lam1, opts)
                apex = int(np.argmax(np.abs(u))) if conv else -1
        elif opts.strategy == "string":
            path = initial_path(phi1, u_prev if r > 0 else phi2, opts.mp.m, forms)
            out = mountain_pass(FucikFunctional(float(r), forms), path, opts.mp)
            u, th, rel, conv = out.u_crit, out.c, out.residual, out.converged
            iters, apex = out.sweeps, out.apex_index
        else:
            raise ValueError(f"unknown strategy {opts.strategy!r}")
        points.append(FucikPoint(alpha=float(r) + th, beta=th, c=th, r=float(r),
                                 eigenfunction=u.copy(), residual=rel,
                                 iterations=iters, apex_index=apex, converged=conv))
        if conv:
            u_prev, th_prev, r_prev = u, th, float(r)
        else:
            alive = opts.strategy == "string"  # string restarts can still recover
            logger.warning("curve point at r=%.6g did not converge", r)
    mirrored = [FucikPoint(alpha=p.beta, beta=p.alpha, c=p.c, r=p.r,
                           eigenfunction=-p.eigenfunction, residual=p.residual,
                           iterations=p.iterations, apex_index=p.apex_index,
                           converged=p.converged, mirrored=True)
                for p in points]
    return CurveResult(points=points + mirrored, r_grid=r_grid,
                       lam1=lam1, lam2=lam2, strategy=opts.strategy)


def curve_point_at(forms: FormMatrices, eigenpairs, r_target: float,
                   substeps: int = 8) -> FucikPoint:
    """Newton-continue the curve from (phi2, lam2) to a single target r."""
    if r_target < 0.0:
        raise ValueError("r_target must be >= 0")
    lam1, lam2 = eigenpairs[0].lam, eigenpairs[1].lam
    u, th = eigenpairs[1].vector, lam2
    opts = TraceOptions()
    r_prev = 0.0
    if r_target == 0.0:
        u, th, rel, conv = newton_refine(forms, 0.0, u, th)
    else:
        for r in np.linspace(0.0, r_target, substeps + 1)[1:]:
            u, th, rel, iters, conv = _continuation_step(
                forms, r_prev, float(r), u, th, lam1, opts)
            if not conv:
                break
            r_prev = float(r)
    return FucikPoint(alpha=r_target + th, beta=th, c=th, r=float(r_target),
                      eigenfunction=u, residual=rel,
                      iterations=0, apex_index=int(np.argmax(np.abs(u))),
                      converged=conv)
