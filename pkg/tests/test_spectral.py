import numpy as np
import pytest
import scipy.linalg

import loglap
from loglap.constants import c_of_N
from loglap.spectral import classify_sign, fix_sign


def test_against_dense_generalized_oracle(forms64):
    # primary path: own Cholesky reduction; oracle: LAPACK sygvd driver
    ours = loglap.solve_eig(forms64, forms64.n)
    ref = scipy.linalg.eigh(forms64.A, forms64.M, eigvals_only=True)
    mine = np.array([p.lam for p in ours])
    assert np.max(np.abs(mine - ref)) <= 1e-9 * max(1.0, np.abs(ref).max())


def test_m_orthonormality(forms64, eigs64):
    V = np.column_stack([p.vector for p in eigs64])
    G = V.T @ forms64.M @ V
    assert np.abs(G - np.eye(len(eigs64))).max() < 1e-9


def test_lambda1_simple(eigs64):
    lam1, lam2 = eigs64[0].lam, eigs64[1].lam
    assert (lam2 - lam1) / max(abs(lam2), abs(lam1)) > 1e-3


def test_variational_characterization(forms64, eigs64):
    lam1 = eigs64[0].lam
    assert loglap.evaluate_form(forms64, eigs64[0].vector, eigs64[0].vector) \
        == pytest.approx(lam1, abs=1e-9 * max(1.0, abs(lam1)))
    rng = np.random.default_rng(7)
    for _ in range(100):
        u = rng.standard_normal(forms64.n)
        assert (u @ forms64.A @ u) / (u @ forms64.M @ u) >= lam1 - 1e-9


def test_eigenvalue_residuals(eigs64):
    assert all(p.residual <= 1e-10 for p in eigs64)


def test_sign_classes(eigs64):
    assert eigs64[0].sign_class == "positive"
    assert classify_sign(-eigs64[0].vector).sign_class == "negative"
    for p in eigs64[1:]:
        assert p.sign_class == "sign_changing"


def test_classify_sign_measures(eigs64):
    rep = classify_sign(eigs64[1].vector)
    assert rep.pos_measure > 0 and rep.neg_measure > 0
    assert rep.pos_measure + rep.neg_measure <= 1.0
    with pytest.raises(ValueError):
        classify_sign(np.zeros(5))


def test_fix_sign_deterministic(forms64, eigs64):
    u = eigs64[0].vector
    assert np.array_equal(fix_sign(-u, forms64.M), u)


def test_lemma_lower_bound(forms64, eigs64):
    lam1 = eigs64[0].lam
    assert lam1 + c_of_N(1) * forms64.mesh.domain.measure >= -1e-8


def test_mesh_cauchy_convergence(forms64, forms128):
    lam_a = [p.lam for p in loglap.solve_eig(forms64, 4)]
    lam_b = [p.lam for p in loglap.solve_eig(forms128, 4)]
    h = forms64.mesh.h
    for a, b in zip(lam_a, lam_b):
        assert abs(a - b) <= 1.0 * h ** 0.5


def test_weighted_identity_weight(forms64, eigs64):
    pairs = loglap.weighted_solve(forms64, np.ones(forms64.n), 3)
    for p, q in zip(pairs, eigs64):
        assert p.lam == pytest.approx(q.lam, rel=1e-12, abs=1e-12)


def test_weighted_constant_scaling(forms64, eigs64):
    c = 2.5
    pairs = loglap.weighted_solve(forms64, np.full(forms64.n, c), 3)
    for p, q in zip(pairs, eigs64):
        assert p.lam == pytest.approx(q.lam / c, rel=1e-12)


def test_weighted_requires_positive(forms64):
    bad = np.ones(forms64.n)
    bad[3] = 0.0
    with pytest.raises(ValueError):
        loglap.weighted_solve(forms64, bad, 2)


def test_weighted_sign_changing_conditional(forms64, eigs64):
    # every pair with k >= 2 whose effective weight mu*a clears lambda_1
    # pointwise (strictly on a positive-measure set) must change sign
    lam1 = eigs64[0].lam
    a = 1.0 + 0.5 * (forms64.mesh.nodes > 0.0)
    pairs = loglap.weighted_solve(forms64, a, 6)
    checked = 0
    for p in pairs[1:]:
        eff = p.lam * a
        if np.all(eff >= lam1 - 1e-10) and np.any(eff > lam1 + 1e-6):
            assert p.sign_class == "sign_changing"
            checked += 1
    assert checked >= 3  # the hypothesis holds for several pairs here


def test_solve_eig_k_range(forms64):
    with pytest.raises(ValueError):
        loglap.solve_eig(forms64, forms64.n + 1)
    with pytest.raises(ValueError):
        loglap.solve_eig(forms64, 0)
