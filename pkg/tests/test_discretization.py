import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, strategies as st

import loglap
from loglap.quadrature import QuadratureSpec
from conftest import smooth_bump

GAMMA = 0.5772156649015328606
RHO1 = -2 * GAMMA


# ---------------------------------------------------------------------------
# mesh
# ---------------------------------------------------------------------------

def test_build_mesh_small():
    mesh = loglap.build_mesh(loglap.Domain(), 3)
    assert np.allclose(mesh.nodes, [-0.25, 0.0, 0.25])
    assert mesh.h == pytest.approx(0.25)


def test_build_mesh_255():
    mesh = loglap.build_mesh(loglap.Domain(), 255)
    assert mesh.h == pytest.approx(1.0 / 256.0, rel=1e-14)


def test_build_mesh_rejects_tiny():
    with pytest.raises(ValueError):
        loglap.build_mesh(loglap.Domain(), 1)


def test_build_mesh_disc_rings():
    dom = loglap.Domain(kind="disc", radius=0.5)
    mesh = loglap.build_mesh(dom, 8)
    assert mesh.n == 8
    assert mesh.nodes[0] == 0.0          # center is a degree of freedom
    assert mesh.h == pytest.approx(0.5 / 8)
    assert mesh.elements.shape == (8, 2)


# ---------------------------------------------------------------------------
# boundary potential
# ---------------------------------------------------------------------------

def test_h_omega_closed_form_center():
    dom = loglap.Domain()
    assert loglap.h_omega(0.0, dom) == pytest.approx(math.log(4.0), rel=1e-12)


def test_h_omega_quarter():
    dom = loglap.Domain()
    assert loglap.h_omega(0.25, dom) == pytest.approx(-math.log(3.0 / 16.0), rel=1e-12)


def test_h_omega_blowup_at_boundary():
    dom = loglap.Domain()
    assert loglap.h_omega(-0.5 + 1e-9, dom) > 15.0


def test_h_omega_quadrature_path_agrees():
    dom = loglap.Domain()
    for x in (-0.37, 0.0, 0.12, 0.49):
        closed = loglap.h_omega(x, dom)
        numeric = loglap.h_omega(x, dom, via="quadrature")
        assert numeric == pytest.approx(closed, rel=1e-9)


def test_h_omega_wide_interval_quadrature_path():
    dom = loglap.Domain(a=-1.0, b=1.0)  # diam > 1 takes the quadrature path
    val = loglap.h_omega(0.3, dom)
    assert val == pytest.approx(-math.log((0.3 + 1.0) * (1.0 - 0.3)), rel=1e-8)


def test_h_omega_outside_raises():
    with pytest.raises(ValueError):
        loglap.h_omega(0.7, loglap.Domain())


def test_h_omega_disc_center():
    dom = loglap.Domain(kind="disc", radius=0.5)
    # chord length is R in every direction: h = -c_2 * 2 pi * ln R = 2 ln 2
    assert loglap.h_omega(0.0, dom) == pytest.approx(2.0 * math.log(2.0), rel=1e-10)


# ---------------------------------------------------------------------------
# assembly structure
# ---------------------------------------------------------------------------

def test_mass_matrix_exact(forms64):
    rng = np.random.default_rng(3)
    u = rng.standard_normal(forms64.n)
    mesh = forms64.mesh
    full = np.concatenate([[0.0], u, [0.0]])
    exact = sum(mesh.h / 3.0 * (full[i] ** 2 + full[i] * full[i + 1] + full[i + 1] ** 2)
                for i in range(mesh.n + 1))
    assert u @ forms64.M @ u == pytest.approx(exact, rel=1e-13)


def test_matrices_symmetric(forms64):
    for mat in (forms64.A, forms64.M, forms64.S, forms64.V):
        assert np.abs(mat - mat.T).max() <= 1e-12 * np.abs(mat).max()


def test_splitting_A_equals_S_plus_V(forms64):
    assert np.allclose(forms64.A, forms64.S + forms64.V, rtol=0, atol=1e-15)


def test_S_positive_semidefinite(forms64):
    vals = np.linalg.eigvalsh(forms64.S)
    assert vals.min() >= -1e-10 * vals.max()


def test_far_pair_entry_matches_direct_quadrature(forms64):
    # hats with separated supports: S_pq = -c_1 iint phi_p phi_q / |x-y|
    mesh = forms64.mesh
    p, q = 10, 31
    xp, xq, h = mesh.nodes[p], mesh.nodes[q], mesh.h

    def hat(c):
        return lambda x: np.maximum(1.0 - np.abs(x - c) / h, 0.0)

    val, err = scipy.integrate.dblquad(
        lambda y, x: -hat(xp)(x) * hat(xq)(y) / abs(x - y),
        xp - h, xp + h, lambda x: xq - h, lambda x: xq + h, epsabs=1e-13)
    assert forms64.S[p, q] < 0.0
    assert forms64.S[p, q] == pytest.approx(val, rel=1e-9)


def test_lambda1_self_convergence(forms64, forms128):
    lam64 = loglap.solve_eig(forms64, 1)[0].lam
    lam128 = loglap.solve_eig(forms128, 1)[0].lam
    assert abs(lam64 - lam128) <= 1.0 * forms64.mesh.h


def test_rayleigh_lower_bound(forms64, eigs64):
    rng = np.random.default_rng(11)
    lam1 = eigs64[0].lam
    for _ in range(50):
        u = rng.standard_normal(forms64.n)
        quot = (u @ forms64.A @ u) / (u @ forms64.M @ u)
        assert quot >= lam1 - 1e-10


def test_quadrature_budget_error():
    mesh = loglap.build_mesh(loglap.Domain(), 8)
    with pytest.raises(loglap.QuadratureError):
        loglap.assemble(mesh, QuadratureSpec(1, 1, 1.0), consistency_tol=1e-12)


# ---------------------------------------------------------------------------
# evaluate_form and sign splits
# ---------------------------------------------------------------------------

def test_evaluate_form_eigen_consistency(forms64, eigs64):
    phi1 = eigs64[0].vector
    val = loglap.evaluate_form(forms64, phi1, phi1)
    assert val == pytest.approx(eigs64[0].lam, rel=1e-9)


def test_evaluate_form_symmetry_and_zero(forms64):
    rng = np.random.default_rng(5)
    u = rng.standard_normal(forms64.n)
    v = rng.standard_normal(forms64.n)
    assert loglap.evaluate_form(forms64, u, v) == pytest.approx(
        loglap.evaluate_form(forms64, v, u), rel=1e-12)
    assert loglap.evaluate_form(forms64, np.zeros(forms64.n), v) == 0.0
    with pytest.raises(ValueError):
        loglap.evaluate_form(forms64, u[:-1], v)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_pointwise_split_identity(p, q):
    lhs = (p - q) ** 2
    pp, pm = max(p, 0.0), max(-p, 0.0)
    qp, qm = max(q, 0.0), max(-q, 0.0)
    rhs = (pp - qp) ** 2 + (pm - qm) ** 2 + 2 * pp * qm + 2 * pm * qp
    assert lhs == pytest.approx(rhs, rel=1e-13, abs=1e-13)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=12))
def test_positive_negative_parts(values):
    u = np.asarray(values)
    up = loglap.positive_part(u)
    um = loglap.negative_part(u)
    assert np.all(up - um == u)
    assert np.all(up * um == 0.0)
    assert np.all(up >= 0.0) and np.all(um >= 0.0)


def _sign_separated_vector(rng, n):
    """Random vector whose sign regions are separated by a zero node."""
    u = np.zeros(n)
    cut = rng.integers(3, n - 3)
    u[:cut] = np.abs(rng.standard_normal(cut))
    u[cut] = 0.0
    u[cut + 1:] = -np.abs(rng.standard_normal(n - cut - 1))
    return u


def test_discrete_split_inequality(forms64):
    rng = np.random.default_rng(17)
    A = forms64.A
    for _ in range(25):
        u = _sign_separated_vector(rng, forms64.n)
        up, um = loglap.positive_part(u), loglap.negative_part(u)
        assert u @ A @ u >= up @ A @ up + um @ A @ um - 1e-8


def test_cross_term_identities(forms64):
    rng = np.random.default_rng(23)
    u = rng.standard_normal(forms64.n)
    up, um = loglap.positive_part(u), loglap.negative_part(u)
    h = loglap.cross_term(forms64, u)
    total = loglap.evaluate_form(forms64, u, u)
    split = (loglap.evaluate_form(forms64, up, up)
             + loglap.evaluate_form(forms64, um, um) + 2.0 * h)
    assert total == pytest.approx(split, rel=1e-12)
    assert loglap.cross_term(forms64, np.abs(u)) == 0.0


def test_cross_term_separated_positive(forms64):
    # nodally separated sign regions make the interaction nonnegative
    rng = np.random.default_rng(29)
    for _ in range(10):
        u = _sign_separated_vector(rng, forms64.n)
        assert loglap.cross_term(forms64, u) >= -1e-10


# ---------------------------------------------------------------------------
# mesh-free evaluation
# ---------------------------------------------------------------------------

def test_direct_zero():
    dom = loglap.Domain()
    val, err = loglap.evaluate_form_direct(lambda x: 0.0 * x, lambda x: 0.0 * x, dom)
    assert val == 0.0


def _mollifier(center, width):
    def f(x):
        x = np.asarray(x, dtype=float)
        z = (x - center) / width
        out = np.zeros_like(z)
        inside = np.abs(z) < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
        return out
    return f


def test_direct_disjoint_supports_negative():
    dom = loglap.Domain()
    f = _mollifier(-0.3, 0.1)
    g = _mollifier(0.3, 0.1)
    val, err = loglap.evaluate_form_direct(f, g, dom, panels=96)
    oracle, _ = scipy.integrate.dblquad(
        lambda y, x: -f(x) * g(y) / abs(x - y), -0.4, -0.2,
        lambda x: 0.2, lambda x: 0.4, epsabs=1e-13)
    assert val < 0.0
    assert val == pytest.approx(oracle, rel=1e-7)


def test_direct_agrees_with_assembled(forms128):
    mesh = forms128.mesh
    f = smooth_bump(0.1, 0.2)
    direct, err = loglap.evaluate_form_direct(f, f, mesh.domain)
    u = f(mesh.nodes)
    assembled = loglap.evaluate_form(forms128, u, u)
    assert direct == pytest.approx(assembled, rel=5e-3)
    assert err < 1e-6 * max(1.0, abs(direct))


def test_direct_rejects_nonfinite():
    dom = loglap.Domain()
    with pytest.raises(ValueError):
        loglap.evaluate_form_direct(lambda x: np.full_like(np.asarray(x), np.nan),
                                    lambda x: np.asarray(x) * 0.0, dom)


def test_convexity_along_sigma_paths():
    dom = loglap.Domain()
    f = smooth_bump(-0.12, 0.18, k=1)
    g = smooth_bump(0.2, 0.25, k=2)
    wf, _ = loglap.evaluate_form_direct(f, f, dom)
    wg, _ = loglap.evaluate_form_direct(g, g, dom)
    for t in (0.25, 0.5, 0.75):
        def sig(x, t=t):
            return np.sqrt(t * f(x) ** 2 + (1 - t) * g(x) ** 2)
        ws, _ = loglap.evaluate_form_direct(sig, sig, dom)
        assert ws <= t * wf + (1 - t) * wg + 1e-8


def test_shrinking_support_rayleigh_trend():
    dom = loglap.Domain()
    quotients = []
    for w in (2.0 ** -2, 2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6):
        def v(x, w=w):
            x = np.asarray(x)
            return np.maximum(1.0 - (x / w) ** 2, 0.0) ** 2
        energy, _ = loglap.evaluate_form_direct(v, v, dom, panels=160)
        mass, _ = scipy.integrate.quad(lambda x: v(x) ** 2, -w, w, epsabs=1e-14)
        quotients.append(energy / mass)
    assert all(b > a for a, b in zip(quotients, quotients[1:]))


# ---------------------------------------------------------------------------
# disc (radial reduction)
# ---------------------------------------------------------------------------

def test_disc_assembly_and_spectrum():
    dom = loglap.Domain(kind="disc", radius=0.5)
    mesh = loglap.build_mesh(dom, 32)
    forms = loglap.assemble(mesh)
    pairs = loglap.solve_eig(forms, 3)
    lam1, lam2 = pairs[0].lam, pairs[1].lam
    assert lam2 - lam1 > 1e-3 * abs(lam2)
    assert pairs[0].sign_class == "positive"
    c2 = loglap.c_of_N(2)
    assert lam1 + c2 * dom.measure >= -1e-8


def test_disc_interaction_against_brute_force():
    # one coarse radial mesh entry vs adaptive quadrature of the reduced kernel
    import math
    from loglap.discretization import assemble_interaction_disc
    from loglap.quadrature import QuadratureSpec

    dom = loglap.Domain(kind="disc", radius=0.5)
    mesh = loglap.build_mesh(dom, 4)
    S = assemble_interaction_disc(mesh, coef=1.0, quad=QuadratureSpec(10, 16, 3.0))
    h = mesh.h

    def hat(j):
        def phi(t):
            return np.maximum(1.0 - np.abs(t - j * h) / h, 0.0)
        return phi

    def kern(r, t):
        return 4.0 * math.pi ** 2 * r * (r + t) / ((2 * r + t) * t)

    cells = [(i * h, (i + 1) * h) for i in range(4)]
    for p, q in ((1, 1), (1, 2), (1, 3)):
        fp, fq = hat(p), hat(q)
        # sum smooth per-cell-pair integrals; rho = r + t removes the diagonal
        total = 0.0
        for (a0, a1) in cells:
            for (b0, b1) in cells:
                val, _ = scipy.integrate.dblquad(
                    lambda t, r: ((fp(r) - fp(r + t)) * (fq(r) - fq(r + t))
                                  * kern(r, t)) if t > 0 else 0.0,
                    a0, a1,
                    lambda r: max(b0 - r, 0.0), lambda r: max(b1 - r, 0.0),
                    epsabs=1e-12, epsrel=1e-12)
                total += val
        assert S[p, q] == pytest.approx(2.0 * total, rel=1e-7), (p, q)


def test_disc_radial_convergence():
    dom = loglap.Domain(kind="disc", radius=0.5)
    lams = []
    for m in (24, 48):
        forms = loglap.assemble(loglap.build_mesh(dom, m))
        lams.append(loglap.solve_eig(forms, 1)[0].lam)
    assert abs(lams[0] - lams[1]) < 0.05 * max(1.0, abs(lams[1]))
