import math

import numpy as np
import pytest
import scipy.integrate

import loglap
from loglap.fractional import exterior_potential, fractional_constant


def test_constant_at_half():
    assert fractional_constant(1, 0.5) == pytest.approx(1.0 / math.pi, rel=1e-12)


def test_constant_positive_and_domain():
    for s in (0.05, 0.1, 0.25, 0.49):
        assert fractional_constant(1, s) > 0
        assert fractional_constant(2, s) > 0
    with pytest.raises(ValueError):
        fractional_constant(1, 0.0)
    with pytest.raises(ValueError):
        fractional_constant(1, 1.0)


def test_exterior_potential_closed_form_vs_quadrature():
    a, b, s = -0.5, 0.5, 0.3
    c = fractional_constant(1, s)
    for x in (-0.31, 0.02, 0.44):
        left, _ = scipy.integrate.quad(lambda y: (x - y) ** (-1 - 2 * s),
                                       -np.inf, a)
        right, _ = scipy.integrate.quad(lambda y: (y - x) ** (-1 - 2 * s),
                                        b, np.inf)
        oracle = c * (left + right)
        assert exterior_potential(x, s, a, b) == pytest.approx(oracle, rel=1e-10)


@pytest.fixture(scope="module")
def mesh48():
    return loglap.build_mesh(loglap.Domain(), 48)


def test_fractional_form_symmetric_and_pd(mesh48):
    frac = loglap.assemble_fractional(mesh48, 0.25)
    A = frac.A_s
    assert np.abs(A - A.T).max() <= 1e-12 * np.abs(A).max()
    assert np.linalg.eigvalsh(A).min() > 0.0


def test_fractional_s_range(mesh48):
    with pytest.raises(ValueError):
        loglap.assemble_fractional(mesh48, 0.6)
    with pytest.raises(ValueError):
        loglap.assemble_fractional(mesh48, 0.0)


def test_known_half_laplacian_eigenvalue():
    # high-precision reference for the s=1/2 Dirichlet eigenvalue of the
    # interval, rescaled from (-1,1) to a unit-length interval
    mesh = loglap.build_mesh(loglap.Domain(), 96)
    frac = loglap.assemble_fractional(mesh, 0.5)
    forms = loglap.assemble(mesh)
    from loglap.spectral import solve_gen_sym
    mu1 = solve_gen_sym(frac.A_s, forms.M, 1)[0][0]
    assert mu1 == pytest.approx(2.0 * 1.157791, rel=1e-2)


def test_quadratic_form_tends_to_mass(mesh48):
    forms = loglap.assemble(mesh48)
    u = np.sin(np.pi * (mesh48.nodes + 0.5))
    ratios = []
    for s in (0.04, 0.02, 0.01):
        frac = loglap.assemble_fractional(mesh48, s)
        ratios.append(abs((u @ frac.A_s @ u) / (u @ forms.M @ u) - 1.0))
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


def test_expansion_errors_decrease(mesh48):
    forms = loglap.assemble(mesh48)
    rows = loglap.expansion_error(forms, mesh48, (0.1, 0.05, 0.025))
    e_form = [r[1] for r in rows]
    e_eig = [r[2] for r in rows]
    assert all(b < a for a, b in zip(e_form, e_form[1:]))
    assert all(b < a for a, b in zip(e_eig, e_eig[1:]))


def test_rayleigh_consistency_small_s(mesh48):
    forms = loglap.assemble(mesh48)
    from loglap.spectral import solve_gen_sym
    for s in (0.05, 0.025):
        frac = loglap.assemble_fractional(mesh48, s)
        mu1 = solve_gen_sym(frac.A_s, forms.M, 1)[0][0]
        assert mu1 >= 1.0 - 3.0 * s  # leading identity term dominates


def test_expansion_error_list_validation(mesh48):
    forms = loglap.assemble(mesh48)
    with pytest.raises(ValueError):
        loglap.expansion_error(forms, mesh48, (0.05, 0.1))
    with pytest.raises(ValueError):
        loglap.expansion_error(forms, mesh48, (0.1, -0.05))
