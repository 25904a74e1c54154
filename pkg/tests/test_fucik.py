import numpy as np
import pytest

import loglap
from loglap.fucik import (FucikFunctional, constrained_gradient_norm,
                          curve_point_at, newton_refine, sign_changing)


@pytest.fixture(scope="module")
def setup96():
    mesh = loglap.build_mesh(loglap.Domain(), 96)
    forms = loglap.assemble(mesh)
    pairs = loglap.solve_eig(forms, 4)
    return forms, pairs


def test_energy_at_eigenfunctions(setup96):
    forms, pairs = setup96
    lam1 = pairs[0].lam
    phi1 = pairs[0].vector
    r = 1.3
    func = FucikFunctional(r, forms)
    assert loglap.energy(func, phi1) == pytest.approx(lam1 - r, abs=1e-10)
    assert loglap.energy(func, -phi1) == pytest.approx(lam1, abs=1e-10)
    func0 = FucikFunctional(0.0, forms)
    rng = np.random.default_rng(1)
    u = rng.standard_normal(forms.n)
    assert loglap.energy(func0, u) == pytest.approx(u @ forms.A @ u, rel=1e-12)


def test_negative_offset_rejected(setup96):
    forms, _ = setup96
    with pytest.raises(ValueError):
        FucikFunctional(-0.1, forms)


def test_constrained_gradient_vanishes_at_minima(setup96):
    forms, pairs = setup96
    func = FucikFunctional(0.8, forms)
    assert constrained_gradient_norm(func, pairs[0].vector) <= 1e-8
    assert constrained_gradient_norm(func, -pairs[0].vector) <= 1e-8


def test_constrained_gradient_finite_differences(setup96):
    forms, _ = setup96
    func = FucikFunctional(0.7, forms)
    M, w = forms.M, forms.lumped
    rng = np.random.default_rng(9)
    eps = 1e-6
    for _ in range(10):
        u = rng.standard_normal(forms.n)
        u = u / np.sqrt(u @ M @ u)
        v = rng.standard_normal(forms.n)
        v -= (v @ M @ u) * u  # tangent at u
        g = loglap.constrained_gradient(func, u)
        pair = float(g @ (w * v))

        def on_sphere(t):
            z = u + t * v
            return loglap.energy(func, z / np.sqrt(z @ M @ z))

        fd = (on_sphere(eps) - on_sphere(-eps)) / (2 * eps)
        assert fd == pytest.approx(pair, rel=1e-5, abs=1e-9)


def test_lagrange_multiplier_examples(setup96):
    forms, pairs = setup96
    r = 0.9
    func = FucikFunctional(r, forms)
    assert loglap.lagrange_multiplier(func, pairs[0].vector) == pytest.approx(
        pairs[0].lam - r, abs=1e-10)
    assert loglap.lagrange_multiplier(func, -pairs[0].vector) == pytest.approx(
        pairs[0].lam, abs=1e-10)
    func0 = FucikFunctional(0.0, forms)
    assert loglap.lagrange_multiplier(func0, pairs[1].vector) == pytest.approx(
        pairs[1].lam, abs=1e-9)


def test_initial_path_structure(setup96):
    forms, pairs = setup96
    phi1, phi2 = pairs[0].vector, pairs[1].vector
    path = loglap.initial_path(phi1, phi2, 3, forms)
    assert np.allclose(path.nodes[0], -phi1, atol=1e-12)
    assert np.allclose(path.nodes[1], phi2, atol=1e-12)
    assert np.allclose(path.nodes[2], phi1, atol=1e-12)
    path = loglap.initial_path(phi1, phi2 + 0.3 * phi1, 41, forms)
    M = forms.M
    norms = np.einsum("ij,ij->i", path.nodes, path.nodes @ M)
    assert np.abs(norms - 1.0).max() < 1e-10
    # node spacing against total arclength
    d = np.sqrt(np.einsum("ij,ij->i", np.diff(path.nodes, axis=0),
                          np.diff(path.nodes, axis=0) @ M))
    assert d.max() <= 2.0 / (path.m - 1) * d.sum()


def test_initial_path_parallel_seed(setup96):
    forms, pairs = setup96
    with pytest.raises(ValueError):
        loglap.initial_path(pairs[0].vector, -2.0 * pairs[0].vector, 11, forms)


def test_mountain_pass_r0_matches_lambda2(setup96):
    forms, pairs = setup96
    func = FucikFunctional(0.0, forms)
    path = loglap.initial_path(pairs[0].vector, pairs[1].vector, 41, forms)
    out = loglap.mountain_pass(func, path)
    assert out.converged
    assert out.c == pytest.approx(pairs[1].lam, rel=0.02)
    assert out.c > pairs[0].lam
    assert sign_changing(out.u_crit)
    # every evaluated path stays above the global lower barrier
    from loglap.fucik import energy_batch
    assert energy_batch(func, out.path).max() >= pairs[0].lam - 0.0 - 1e-9


def test_mountain_pass_r_positive(setup96):
    forms, pairs = setup96
    gap = pairs[1].lam - pairs[0].lam
    func = FucikFunctional(gap, forms)
    path = loglap.initial_path(pairs[0].vector, pairs[1].vector, 41, forms)
    out = loglap.mountain_pass(func, path)
    assert out.converged
    assert pairs[0].lam < out.c < pairs[1].lam
    assert out.residual <= 1e-10
    assert sign_changing(out.u_crit)


def test_mountain_pass_honest_failure(setup96):
    forms, pairs = setup96
    func = FucikFunctional(1.0, forms)
    path = loglap.initial_path(pairs[0].vector, pairs[1].vector, 11, forms)
    opts = loglap.MountainPassOptions(max_sweeps=2, retries=0, refine_tol=1e-30)
    out = loglap.mountain_pass(func, path, opts)
    assert not out.converged
    assert out.stop_reason == "not_converged"


def test_critical_point_splitting(setup96):
    forms, pairs = setup96
    gap = pairs[1].lam - pairs[0].lam
    func = FucikFunctional(gap, forms)
    path = loglap.initial_path(pairs[0].vector, pairs[1].vector, 41, forms)
    out = loglap.mountain_pass(func, path)
    u = out.u_crit
    th = out.c
    up, um = loglap.positive_part(u), loglap.negative_part(u)
    h = loglap.cross_term(forms, u)
    M = forms.M
    lhs_p = loglap.evaluate_form(forms, up, up) + h
    rhs_p = (func.r + th) * (up @ M @ up)
    lhs_m = loglap.evaluate_form(forms, um, um) + h
    rhs_m = th * (um @ M @ um)
    scale = max(abs(rhs_p), abs(rhs_m), 1.0)
    assert abs(lhs_p - rhs_p) <= 1e-5 * scale
    assert abs(lhs_m - rhs_m) <= 1e-5 * scale
    assert h >= -1e-8


def test_gamma2_path_bound(setup96):
    # the proof path from u+ to u- stays below the critical level
    forms, pairs = setup96
    gap = pairs[1].lam - pairs[0].lam
    func = FucikFunctional(gap, forms)
    path = loglap.initial_path(pairs[0].vector, pairs[1].vector, 41, forms)
    out = loglap.mountain_pass(func, path)
    up, um = loglap.positive_part(out.u_crit), loglap.negative_part(out.u_crit)
    M = forms.M
    for t in np.linspace(0.0, 1.0, 21):
        v = t * um + (1 - t) * up
        v = v / np.sqrt(v @ M @ v)
        assert loglap.energy(func, v) <= out.c + 1e-6 * max(1.0, abs(out.c))


def test_verify_pair_diagonal(setup96):
    forms, pairs = setup96
    for p in pairs[:4]:
        res = loglap.verify_pair(forms, p.lam, p.lam, p.vector)
        assert res.residual <= 1e-8


def test_verify_pair_symmetry(setup96):
    forms, pairs = setup96
    gap = pairs[1].lam - pairs[0].lam
    point = curve_point_at(forms, pairs, gap)
    direct = loglap.verify_pair(forms, point.alpha, point.beta, point.eigenfunction)
    flipped = loglap.verify_pair(forms, point.beta, point.alpha, -point.eigenfunction)
    assert abs(direct.residual - flipped.residual) <= 1e-10


def test_verify_pair_rejects_off_spectrum(setup96):
    forms, pairs = setup96
    rng = np.random.default_rng(31)
    res = loglap.verify_pair(forms, pairs[0].lam + 0.4, pairs[0].lam + 0.2,
                             rng.standard_normal(forms.n), max_iter=80)
    assert not res.converged
    assert res.residual > 1e-6


def test_verify_pair_zero_seed_rejected(setup96):
    forms, _ = setup96
    with pytest.raises(ValueError):
        loglap.verify_pair(forms, 1.0, 1.0, np.zeros(forms.n))


def test_trace_curve_continuation(setup96):
    forms, pairs = setup96
    gap = pairs[1].lam - pairs[0].lam
    grid = np.linspace(0.0, 4.0 * gap, 5)
    curve = loglap.trace_curve(forms, grid, eigenpairs=pairs[:2])
    assert curve.all_converged
    assert len(curve.points) == 10  # direct + mirrored
    cs = np.array([p.c for p in curve.direct_points])
    rs = np.array([p.r for p in curve.direct_points])
    assert np.all(np.diff(cs) < 0)
    assert np.all(np.diff(rs + cs) > 0)
    for p in curve.direct_points:
        assert p.alpha == pytest.approx(p.r + p.c, rel=1e-14)
        assert p.beta == p.c
        assert p.beta > curve.lam1
        assert p.residual <= 1e-6
        assert sign_changing(p.eigenfunction)
    # Lipschitz bound with unit slope over every grid pair
    for i in range(len(rs)):
        for j in range(i + 1, len(rs)):
            drop = cs[i] - cs[j]
            assert -1e-12 <= drop <= (rs[j] - rs[i]) * 1.01
    mirrored = [p for p in curve.points if p.mirrored]
    for p, q in zip(curve.direct_points, mirrored):
        assert (p.alpha, p.beta) == (q.beta, q.alpha)


def test_trace_curve_string_strategy(setup96):
    forms, pairs = setup96
    gap = pairs[1].lam - pairs[0].lam
    grid = np.linspace(0.0, gap, 3)
    curve = loglap.trace_curve(
        forms, grid, loglap.TraceOptions(strategy="string"), eigenpairs=pairs[:2])
    assert curve.all_converged
    cs = np.array([p.c for p in curve.direct_points])
    assert np.all(np.diff(cs) < 0)


def test_trace_curve_grid_validation(setup96):
    forms, pairs = setup96
    with pytest.raises(ValueError):
        loglap.trace_curve(forms, [0.5, 1.0], eigenpairs=pairs[:2])
    with pytest.raises(ValueError):
        loglap.trace_curve(forms, [0.0, 0.0, 1.0], eigenpairs=pairs[:2])


def test_curve_point_matches_trace(setup96):
    forms, pairs = setup96
    gap = pairs[1].lam - pairs[0].lam
    grid = np.linspace(0.0, gap, 3)
    curve = loglap.trace_curve(forms, grid, eigenpairs=pairs[:2])
    point = curve_point_at(forms, pairs, gap)
    assert point.converged
    assert point.c == pytest.approx(curve.direct_points[-1].c, rel=1e-10)


def test_newton_refine_r0_lands_on_eigenpair(setup96):
    forms, pairs = setup96
    u, th, rel, ok = newton_refine(forms, 0.0, pairs[1].vector, pairs[1].lam)
    assert ok
    assert th == pytest.approx(pairs[1].lam, rel=1e-12)
    assert rel <= 1e-12
