"""Meshing and Galerkin assembly of the logarithmic-Laplacian form.

The quadratic form is assembled in the representation

    E_L(u, u) = (c_N/2) int_O int_O (u(x)-u(y))^2 / |x-y|^N dx dy
                + int_O (h_O(x) + rho_N) u(x)^2 dx,

valid for any bounded domain; for the default interval with diam <= 1 the
boundary potential h_O has the closed form -c_1 ln((x-a)(b-x)).

Interval meshes are uniform with continuous piecewise-linear hat functions
on the interior nodes (Dirichlet exterior condition: basis vanishes outside
the domain).  The disc is supported through its radial modes only.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad as _scipy_quad

from .constants import c_of_N, rho_of_N
from .quadrature import QuadratureSpec, composite_on_breakpoints, gauss_01

logger = logging.getLogger(__name__)


class QuadratureError(RuntimeError):
    """Raised when the quadrature budget misses the consistency target."""


# ---------------------------------------------------------------------------
# domain and mesh
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Bounded domain: an interval (a, b) for N=1 or a disc of radius R for N=2."""

    kind: str = "interval"
    a: float = -0.5
    b: float = 0.5
    radius: float = 0.5

    def __post_init__(self):
        if self.kind not in ("interval", "disc"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "interval" and not self.b > self.a:
            raise ValueError("interval requires b > a")
        if self.kind == "disc" and not self.radius > 0:
            raise ValueError("disc requires radius > 0")

    @property
    def N(self) -> int:
        return 1 if self.kind == "interval" else 2

    @property
    def measure(self) -> float:
        if self.kind == "interval":
            return self.b - self.a
        return math.pi * self.radius ** 2

    @property
    def diameter(self) -> float:
        if self.kind == "interval":
            return self.b - self.a
        return 2.0 * self.radius

    def contains(self, x: float) -> bool:
        """Membership of a point (interval) or a radius (disc)."""
        if self.kind == "interval":
            return self.a < x < self.b
        return 0.0 <= x < self.radius


@dataclass(frozen=True)
class Mesh:
    """Uniform partition with interior-node hat basis.

    nodes holds the degree-of-freedom coordinates: strictly increasing
    interior nodes for the interval; radius values (center included,
    boundary excluded) for the radial disc reduction.
    """

    domain: Domain
    nodes: np.ndarray
    elements: np.ndarray  # (n_cells, 2) endpoint coordinates
    h: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"mesh needs n >= 2 degrees of freedom, got {self.n}")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing")


def build_mesh(domain: Domain, n: int) -> Mesh:
    """Uniform mesh with n interior dofs (interval) or n radial rings (disc)."""
    if n < 2:
        raise ValueError(f"build_mesh requires n >= 2, got {n}")
    if domain.kind == "interval":
        h = (domain.b - domain.a) / (n + 1)
        all_nodes = domain.a + h * np.arange(n + 2)
        cells = np.column_stack([all_nodes[:-1], all_nodes[1:]])
        return Mesh(domain=domain, nodes=all_nodes[1:-1], elements=cells, h=h, n=n)
    # radial disc: dofs at r_0 = 0 (center) .. r_{n-1}; Dirichlet at r_n = R
    h = domain.radius / n
    all_nodes = h * np.arange(n + 1)
    cells = np.column_stack([all_nodes[:-1], all_nodes[1:]])
    return Mesh(domain=domain, nodes=all_nodes[:-1], elements=cells, h=h, n=n)


# ---------------------------------------------------------------------------
# boundary potential h_Omega
# ---------------------------------------------------------------------------

def _h_omega_interval_closed(x, a: float, b: float):
    return -c_of_N(1) * np.log((np.asarray(x) - a) * (b - np.asarray(x)))


def _h_omega_interval_quadrature(x: float, a: float, b: float) -> float:
    """Adaptive quadrature of the defining integral (oracle / fallback path)."""
    c1 = c_of_N(1)
    total = 0.0
    # B_1(x) \ Omega, pieces (x-1, a) and (b, x+1)
    if x - 1.0 < a:
        total += _scipy_quad(lambda y: 1.0 / abs(x - y), x - 1.0, a)[0]
    if b < x + 1.0:
        total += _scipy_quad(lambda y: 1.0 / abs(x - y), b, x + 1.0)[0]
    # Omega \ B_1(x), pieces (a, x-1) and (x+1, b)
    if a < x - 1.0:
        total -= _scipy_quad(lambda y: 1.0 / abs(x - y), a, x - 1.0)[0]
    if x + 1.0 < b:
        total -= _scipy_quad(lambda y: 1.0 / abs(x - y), x + 1.0, b)[0]
    return c1 * total


# periodic trapezoid points for the disc chord integral
_DISC_ANGLES = 512


def _h_omega_disc(r, radius: float):
    """h_O at radius r inside a disc with diameter <= 1 (chord-length integral)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta = 2.0 * math.pi * np.arange(_DISC_ANGLES) / _DISC_ANGLES
    sin2 = np.sin(theta) ** 2
    chord = np.sqrt(radius ** 2 - (r[:, None] ** 2) * sin2[None, :]) \
        - r[:, None] * np.cos(theta)[None, :]
    vals = -c_of_N(2) * np.log(chord).mean(axis=1) * 2.0 * math.pi
    return vals


def h_omega(x, domain: Domain, via: str = "auto"):
    """Boundary potential h_O at points inside the domain.

    For the interval the closed form -c_1 ln((x-a)(b-x)) is used whenever
    diam <= 1 (and remains exact in 1-D for larger intervals); `via` can
    force the adaptive-quadrature path of the defining integral.  For the
    disc, x is a radius and the chord-length quadrature is used.
    """
    if domain.kind == "interval":
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(xs <= domain.a) or np.any(xs >= domain.b):
            raise ValueError("h_omega requires points strictly inside the domain")
        if via == "quadrature" or (via == "auto" and domain.diameter > 1.0):
            vals = np.array([_h_omega_interval_quadrature(float(p), domain.a, domain.b)
                             for p in xs])
        else:
            vals = _h_omega_interval_closed(xs, domain.a, domain.b)
        return vals if np.ndim(x) else float(vals[0])
    if domain.diameter > 1.0:
        raise ValueError("disc potential requires diam <= 1")
    rs = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(rs < 0) or np.any(rs >= domain.radius):
        raise ValueError("h_omega requires radii inside the disc")
    vals = _h_omega_disc(rs, domain.radius)
    return vals if np.ndim(x) else float(vals[0])


# ---------------------------------------------------------------------------
# cell-pair profiles on the uniform interval mesh
# ---------------------------------------------------------------------------
#
# On a uniform mesh the pair integral over (cell i, cell i+d) depends only
# on d, so one small profile per distance suffices.  Unit-cell shapes:
# L(t) = 1 - t (left node), R(t) = t (right node).

def identical_cell_profile(h: float, beta: float) -> np.ndarray:
    """Exact 2x2 profile on one cell: integrand reduces to s_p s_q |x-y|^(2-beta)."""
    q = 2.0 - beta
    val = 2.0 * h ** (q + 2.0) / ((q + 1.0) * (q + 2.0))
    return (val / h ** 2) * np.array([[1.0, -1.0], [-1.0, 1.0]])


def adjacent_cell_profile(h: float, beta: float, quad: QuadratureSpec) -> np.ndarray:
    """3x3 profile for touching cells, graded toward the shared vertex."""
    px, wx = quad.corner_rule(toward_one=True)
    py, wy = quad.corner_rule(toward_one=False)
    X, Y = np.meshgrid(px, py, indexing="ij")
    W = np.outer(wx, wy)
    delta = np.stack([1.0 - X, X - (1.0 - Y), -Y])
    kernel = W * (1.0 + Y - X) ** (-beta)
    return h ** (2.0 - beta) * np.einsum("pij,qij,ij->pq", delta, delta, kernel)


def disjoint_cell_profiles(h: float, beta: float, dmax: int,
                           quad: QuadratureSpec) -> np.ndarray:
    """(dmax-1, 4, 4) profiles for cell distances d = 2..dmax, tensor Gauss."""
    t, w = quad.regular_rule()
    X, Y = np.meshgrid(t, t, indexing="ij")
    W = np.outer(w, w)
    delta = np.stack([1.0 - X, X, -(1.0 - Y), -Y])
    ds = np.arange(2, dmax + 1)
    kernel = W[None] * (ds[:, None, None] + Y[None] - X[None]) ** (-beta)
    return h ** (2.0 - beta) * np.einsum("pij,qij,kij->kpq", delta, delta, kernel)


def assemble_interaction_interval(mesh: Mesh, beta: float, coef: float,
                                  quad: QuadratureSpec) -> np.ndarray:
    """Assemble coef * iint (u(x)-u(y))(v(x)-v(y)) / |x-y|^beta over O x O."""
    n, h = mesh.n, mesh.h
    nf = n + 2
    S = np.zeros((nf, nf))

    loc = identical_cell_profile(h, beta)
    idx = np.arange(n + 1)
    for a in range(2):
        for b in range(2):
            np.add.at(S, (idx + a, idx + b), loc[a, b])

    t1 = adjacent_cell_profile(h, beta, quad)
    idx = np.arange(n)
    for a in range(3):
        for b in range(3):
            np.add.at(S, (idx + a, idx + b), 2.0 * t1[a, b])

    if n >= 1:
        profiles = disjoint_cell_profiles(h, beta, n, quad)
        offs = (0, 1)
        for k, d in enumerate(range(2, n + 1)):
            idx = np.arange(n + 1 - d)
            prof = profiles[k]
            for a in range(2):
                for b in range(2):
                    np.add.at(S, (idx + offs[a], idx + offs[b]), 2.0 * prof[a, b])
                    np.add.at(S, (idx + offs[a], idx + d + offs[b]), 2.0 * prof[a, 2 + b])
                    np.add.at(S, (idx + d + offs[a], idx + offs[b]), 2.0 * prof[2 + a, b])
                    np.add.at(S, (idx + d + offs[a], idx + d + offs[b]),
                              2.0 * prof[2 + a, 2 + b])
    return coef * S[1:-1, 1:-1]


def assemble_potential_interval(mesh: Mesh, pot, quad: QuadratureSpec) -> np.ndarray:
    """Assemble int pot(x) phi_p phi_q dx; boundary cells use graded rules."""
    n, h, a = mesh.n, mesh.h, mesh.domain.a
    nf = n + 2
    V = np.zeros((nf, nf))
    t_reg, w_reg = quad.regular_rule()
    t_left, w_left = quad.boundary_rule(toward_zero=True)
    t_right, w_right = quad.boundary_rule(toward_zero=False)
    for i in range(n + 1):
        if i == 0:
            tt, ww = t_left, w_left
        elif i == n:
            tt, ww = t_right, w_right
        else:
            tt, ww = t_reg, w_reg
        xs = a + i * h + h * tt
        vals = pot(xs) * ww * h
        shapes = np.stack([1.0 - tt, tt])
        loc = np.einsum("pi,qi,i->pq", shapes, shapes, vals)
        V[np.ix_([i, i + 1], [i, i + 1])] += loc
    return V[1:-1, 1:-1]


def mass_matrix(mesh: Mesh) -> np.ndarray:
    """Exact P1 mass matrix (tridiagonal for the interval, weighted for the disc)."""
    if mesh.domain.kind == "interval":
        n, h = mesh.n, mesh.h
        M = np.zeros((n + 2, n + 2))
        idx = np.arange(n + 1)
        np.add.at(M, (idx, idx), h / 3.0)
        np.add.at(M, (idx + 1, idx + 1), h / 3.0)
        np.add.at(M, (idx, idx + 1), h / 6.0)
        np.add.at(M, (idx + 1, idx), h / 6.0)
        return M[1:-1, 1:-1]
    return weighted_mass_matrix(mesh, np.ones(mesh.n))


def weighted_mass_matrix(mesh: Mesh, a_nodal: np.ndarray) -> np.ndarray:
    """Mass matrix weighted by the P1 interpolant of a nodal weight.

    The weight is extended to boundary nodes by its nearest interior value.
    For the disc, the radial measure 2 pi r dr is included.
    """
    a_nodal = np.asarray(a_nodal, dtype=float)
    if a_nodal.shape != (mesh.n,):
        raise ValueError("weight must be nodal with one value per dof")
    n, h = mesh.n, mesh.h
    # Gauss order 3 integrates the quartic disc integrand exactly
    t, w = gauss_01(3)
    if mesh.domain.kind == "interval":
        a_full = np.concatenate([[a_nodal[0]], a_nodal, [a_nodal[-1]]])
        meas = np.ones((n + 1, t.size))
    else:
        a_full = np.concatenate([a_nodal, [a_nodal[-1]]])
        rr = mesh.elements[:, 0][:, None] + h * t[None, :]
        meas = 2.0 * math.pi * rr
    aa = a_full[:-1, None] * (1 - t)[None, :] + a_full[1:, None] * t[None, :]
    vals = aa * meas * (h * w)[None, :]
    d00 = (vals * (1 - t) ** 2).sum(axis=1)
    d01 = (vals * (1 - t) * t).sum(axis=1)
    d11 = (vals * t ** 2).sum(axis=1)
    nf = n + 2 if mesh.domain.kind == "interval" else n + 1
    M = np.zeros((nf, nf))
    idx = np.arange(n + 1 if mesh.domain.kind == "interval" else n)
    np.add.at(M, (idx, idx), d00)
    np.add.at(M, (idx, idx + 1), d01)
    np.add.at(M, (idx + 1, idx), d01)
    np.add.at(M, (idx + 1, idx + 1), d11)
    if mesh.domain.kind == "interval":
        return M[1:-1, 1:-1]
    return M[:-1, :-1]


# ---------------------------------------------------------------------------
# radial disc assembly
# ---------------------------------------------------------------------------

def _radial_kernel(r, rho):
    # angular integral of |x-y|^(-2) times the measure r*rho:
    # 4 pi^2 r rho / |r^2 - rho^2|, with the 1/|r-rho| factor kept separate
    return 4.0 * math.pi ** 2 * r * rho / (r + rho)


def assemble_interaction_disc(mesh: Mesh, coef: float, quad: QuadratureSpec) -> np.ndarray:
    """Radial reduction of (c_2/2) iint (u(x)-u(y))(v(x)-v(y))/|x-y|^2."""
    n, h = mesh.n, mesh.h
    nodes = mesh.elements[:, 0]  # left endpoint of each of the n cells
    nf = n + 1
    S = np.zeros((nf, nf))
    g = quad.gauss_order

    # identical cells: triangle map rho = r + eta h (1 - xi); the 1/(rho - r)
    # kernel cancels one factor of the basis difference, leaving a smooth
    # integrand 2 eta (1-xi)^2 h k(r, rho) (doubled for the lower triangle)
    t, w = gauss_01(g)
    XI, ETA = np.meshgrid(t, t, indexing="ij")
    WW = np.outer(w, w)
    r = nodes[:, None, None] + h * XI[None]
    rho = r + ETA[None] * h * (1.0 - XI[None])
    integ = (2.0 * ETA[None] * (1.0 - XI[None]) ** 2 * h
             * _radial_kernel(r, rho) * WW[None])
    diag = integ.sum(axis=(1, 2))
    idx = np.arange(n)
    for a in range(2):
        for b in range(2):
            sign = 1.0 if a == b else -1.0
            np.add.at(S, (idx + a, idx + b), sign * diag)

    # adjacent cells: graded toward the shared vertex
    px, wx = quad.corner_rule(toward_one=True)
    py, wy = quad.corner_rule(toward_one=False)
    X, Y = np.meshgrid(px, py, indexing="ij")
    W2 = np.outer(wx, wy)
    delta = np.stack([1.0 - X, X - (1.0 - Y), -Y])
    for i in range(n - 1):
        r = nodes[i] + h * X
        rho = nodes[i + 1] + h * Y
        kern = _radial_kernel(r, rho) / (rho - r)
        loc = np.einsum("pij,qij,ij->pq", delta, delta, kern * W2) * h * h
        S[np.ix_([i, i + 1, i + 2], [i, i + 1, i + 2])] += 2.0 * loc

    # separated cells
    t, w = gauss_01(g)
    X, Y = np.meshgrid(t, t, indexing="ij")
    W2 = np.outer(w, w)
    delta = np.stack([1.0 - X, X, -(1.0 - Y), -Y])
    dd = np.einsum("pij,qij->pqij", delta, delta)
    for d in range(2, n):
        i = np.arange(n - d)
        r = nodes[i][:, None, None] + h * X[None]
        rho = nodes[i + d][:, None, None] + h * Y[None]
        kern = _radial_kernel(r, rho) / (rho - r) * W2[None] * h * h
        loc = np.einsum("pqij,kij->kpq", dd, kern)
        offs = (0, 1)
        for a in range(2):
            for b in range(2):
                np.add.at(S, (i + offs[a], i + offs[b]), 2.0 * loc[:, a, b])
                np.add.at(S, (i + offs[a], i + d + offs[b]), 2.0 * loc[:, a, 2 + b])
                np.add.at(S, (i + d + offs[a], i + offs[b]), 2.0 * loc[:, 2 + a, b])
                np.add.at(S, (i + d + offs[a], i + d + offs[b]), 2.0 * loc[:, 2 + a, 2 + b])
    return coef * S[:-1, :-1]


def assemble_potential_disc(mesh: Mesh, pot, quad: QuadratureSpec) -> np.ndarray:
    """Assemble 2 pi int pot(r) phi_p phi_q r dr on the radial mesh."""
    n, h = mesh.n, mesh.h
    nodes = mesh.elements[:, 0]
    nf = n + 1
    V = np.zeros((nf, nf))
    t_reg, w_reg = quad.regular_rule()
    t_bnd, w_bnd = quad.boundary_rule(toward_zero=False)
    for i in range(n):
        tt, ww = (t_bnd, w_bnd) if i == n - 1 else (t_reg, w_reg)
        rr = nodes[i] + h * tt
        vals = pot(rr) * 2.0 * math.pi * rr * ww * h
        shapes = np.stack([1.0 - tt, tt])
        loc = np.einsum("pi,qi,i->pq", shapes, shapes, vals)
        V[np.ix_([i, i + 1], [i, i + 1])] += loc
    return V[:-1, :-1]


# ---------------------------------------------------------------------------
# form matrices
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FormMatrices:
    """Galerkin matrices of the quadratic form: A = S + V, mass M."""

    mesh: Mesh
    quad: QuadratureSpec
    A: np.ndarray
    S: np.ndarray
    V: np.ndarray
    M: np.ndarray
    _norm_a: float = field(default=0.0, repr=False)

    @property
    def n(self) -> int:
        return self.mesh.n

    @property
    def norm_A(self) -> float:
        """Spectral norm of A, cached; the reference scale for gradient tolerances."""
        if self._norm_a == 0.0:
            self._norm_a = float(np.linalg.norm(self.A, 2))
        return self._norm_a

    @property
    def lumped(self) -> np.ndarray:
        """Diagonal (row-sum) lumping of M, used as the Riesz inner product."""
        return self.M.sum(axis=1)


def _consistency_check(mesh: Mesh, beta: float, quad: QuadratureSpec, tol: float):
    """Recompute the touching and nearest-separated profiles on a finer rule."""
    fine = quad.refined()
    for maker in (adjacent_cell_profile,):
        base = maker(mesh.h, beta, quad)
        ref = maker(mesh.h, beta, fine)
        err = np.abs(base - ref).max() / max(np.abs(ref).max(), 1e-300)
        if err > tol:
            raise QuadratureError(
                f"quadrature budget exhausted: touching-pair profile error {err:.3e} "
                f"exceeds consistency tolerance {tol:.1e}")
    base = disjoint_cell_profiles(mesh.h, beta, 2, quad)
    ref = disjoint_cell_profiles(mesh.h, beta, 2, fine)
    err = np.abs(base - ref).max() / max(np.abs(ref).max(), 1e-300)
    if err > tol:
        raise QuadratureError(
            f"quadrature budget exhausted: separated-pair profile error {err:.3e} "
            f"exceeds consistency tolerance {tol:.1e}")


def assemble(mesh: Mesh, quad: QuadratureSpec | None = None,
             consistency_tol: float = 1e-8) -> FormMatrices:
    """Assemble the form matrices A = S + V and the mass matrix M."""
    quad = quad or QuadratureSpec()
    domain = mesh.domain
    cn = c_of_N(domain.N)
    rho = rho_of_N(domain.N)
    if domain.kind == "interval":
        _consistency_check(mesh, 1.0, quad, consistency_tol)
        S = assemble_interaction_interval(mesh, beta=1.0, coef=0.5 * cn, quad=quad)

        def pot(x):
            return h_omega(x, domain) + rho

        V = assemble_potential_interval(mesh, pot, quad)
    else:
        if domain.diameter > 1.0:
            raise ValueError("disc assembly requires diam <= 1")
        S = assemble_interaction_disc(mesh, coef=0.5 * cn, quad=quad)

        def pot(r):
            return h_omega(r, domain) + rho

        V = assemble_potential_disc(mesh, pot, quad)
    M = mass_matrix(mesh)
    S = 0.5 * (S + S.T)
    V = 0.5 * (V + V.T)
    A = S + V
    logger.debug("assembled %s forms: n=%d, h=%.3e", domain.kind, mesh.n, mesh.h)
    return FormMatrices(mesh=mesh, quad=quad, A=A, S=S, V=V, M=M)


# ---------------------------------------------------------------------------
# form evaluation and sign splits
# ---------------------------------------------------------------------------

def evaluate_form(forms: FormMatrices, u: np.ndarray, v: np.ndarray) -> float:
    """Bilinear value u^T A v."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (forms.n,) or v.shape != (forms.n,):
        raise ValueError(f"expected vectors of length {forms.n}")
    return float(u @ forms.A @ v)


def positive_part(u: np.ndarray) -> np.ndarray:
    """Nodal clamp u+ = max(u, 0)."""
    return np.maximum(np.asarray(u, dtype=float), 0.0)


def negative_part(u: np.ndarray) -> np.ndarray:
    """Nodal clamp u- = max(-u, 0), so u = u+ - u- exactly."""
    return np.maximum(-np.asarray(u, dtype=float), 0.0)


def cross_term(forms: FormMatrices, u: np.ndarray) -> float:
    """Sign-interaction term h(u+, u-) = -E_L(u+, u-) = -(u+)^T A (u-)."""
    up = positive_part(u)
    um = negative_part(u)
    return -float(up @ forms.A @ um)


# ---------------------------------------------------------------------------
# mesh-free evaluation for smooth inputs (interval only)
# ---------------------------------------------------------------------------

def _interior_double_integral(f, g, a: float, b: float, panels: int,
                              order: int) -> float:
    """(c_1/2) iint (f(x)-f(y))(g(x)-g(y))/|x-y| over (a,b)^2.

    The diagonal kink is removed by the triangle substitution
    y = x + s (b - x); the result is doubled by symmetry.
    """
    bps = np.linspace(0.0, 1.0, panels + 1)
    tx, wx = composite_on_breakpoints(bps, order)
    ts, ws = composite_on_breakpoints(bps, order)
    X = a + (b - a) * tx
    WX = (b - a) * wx
    span = b - X
    Y = X[:, None] + ts[None, :] * span[:, None]
    Z = Y - X[:, None]
    df = f(X)[:, None] - f(Y)
    dg = g(X)[:, None] - g(Y)
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(Z > 0, df * dg / np.where(Z > 0, Z, 1.0), 0.0)
    inner = (vals * ws[None, :]).sum(axis=1) * span
    return float(c_of_N(1) * (inner * WX).sum())  # (c/2) * 2 triangles


def _potential_integral(f, g, domain: Domain, panels: int, order: int,
                        grading: float) -> float:
    """int (h_O + rho_1) f g with panels graded into both endpoints."""
    a, b = domain.a, domain.b
    rho = rho_of_N(1)
    half = (np.arange(panels + 1) / panels) ** grading * 0.5
    bps = np.concatenate([half, np.sort(1.0 - half[:-1])])
    t, w = composite_on_breakpoints(np.unique(bps), order)
    x = a + (b - a) * t
    vals = (h_omega(x, domain) + rho) * f(x) * g(x)
    return float((vals * w).sum() * (b - a))


def evaluate_form_direct(f, g, domain: Domain,
                         quad: QuadratureSpec | None = None,
                         panels: int = 32) -> tuple[float, float]:
    """Mesh-free quadrature of E_L(f, g) for smooth f, g vanishing on the boundary.

    Returns (value, error_estimate); the estimate is the difference between
    a half-panel and a full-panel evaluation.  `panels` must resolve the
    narrowest feature of f and g.  Interval domains only.
    """
    if domain.kind != "interval":
        raise NotImplementedError("mesh-free evaluation is implemented for intervals")
    quad = quad or QuadratureSpec()
    order = quad.gauss_order
    results = []
    for p in (panels // 2, panels):
        val = _interior_double_integral(f, g, domain.a, domain.b, p, order) \
            + _potential_integral(f, g, domain, p + 4, order, quad.boundary_grading)
        if not np.isfinite(val):
            raise ValueError("non-finite function values in evaluate_form_direct")
        results.append(val)
    return results[1], abs(results[1] - results[0])
