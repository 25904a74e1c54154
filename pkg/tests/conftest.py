"""Shared fixtures: assembled forms and solver runs reused across the suite."""

import time

import numpy as np
import pytest

import loglap


@pytest.fixture(scope="session")
def timings():
    """Wall-clock seconds of the heavy session fixtures, by name."""
    return {}


@pytest.fixture(scope="session")
def forms64():
    mesh = loglap.build_mesh(loglap.Domain(), 64)
    return loglap.assemble(mesh)


@pytest.fixture(scope="session")
def eigs64(forms64):
    return loglap.solve_eig(forms64, 6)


@pytest.fixture(scope="session")
def forms128():
    mesh = loglap.build_mesh(loglap.Domain(), 128)
    return loglap.assemble(mesh)


@pytest.fixture(scope="session")
def forms256(timings):
    t0 = time.perf_counter()
    mesh = loglap.build_mesh(loglap.Domain(), 256)
    forms = loglap.assemble(mesh)
    timings["assemble256"] = time.perf_counter() - t0
    return forms


@pytest.fixture(scope="session")
def eigs256(forms256, timings):
    t0 = time.perf_counter()
    pairs = loglap.solve_eig(forms256, 6)
    timings["eig256"] = time.perf_counter() - t0
    return pairs


@pytest.fixture(scope="session")
def grid256(eigs256):
    gap = eigs256[1].lam - eigs256[0].lam
    return np.linspace(0.0, 10.0 * gap, 11)


@pytest.fixture(scope="session")
def curve256(forms256, eigs256, grid256, timings):
    t0 = time.perf_counter()
    curve = loglap.trace_curve(forms256, grid256, eigenpairs=eigs256[:2])
    timings["curve256"] = time.perf_counter() - t0
    return curve


def smooth_bump(center, width, k=0):
    """Positive interior bump vanishing quadratically at the boundary."""

    def f(x):
        x = np.asarray(x, dtype=float)
        core = np.exp(-((x - center) / width) ** 2)
        wall = (x + 0.5) ** 2 * (0.5 - x) ** 2 * 16.0
        wobble = 1.0 + 0.3 * np.sin((3 + k) * np.pi * x)
        return core * wall * wobble

    return f
