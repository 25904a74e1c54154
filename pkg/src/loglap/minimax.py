"""Elastic-string relaxation engine for numerical mountain passes.

A discretized path with fixed endpoints is relaxed by stepping every
interior node along a descent direction, re-spreading the nodes by
arclength after each sweep.  The highest node may optionally climb
(its gradient component along the path is reversed), which pins a node
onto the saddle instead of leaving the crossing between two nodes.

Callers supply batched energy/descent callables, an optional retraction
(sphere constraint), and the metric used for arclength.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class StringOptions:
    """Controls for the string relaxation."""

    m: int = 41
    max_sweeps: int = 20000
    step_safety: float = 0.45
    grad_tol: float = 0.0          # absolute; 0 disables the gradient stop
    stall_window: int = 30
    stall_tol: float = 1e-10
    climb: bool = True
    climb_after: int = 40
    subsamples: int = 4            # extra samples per segment when locating the apex


@dataclass(eq=False)
class StringResult:
    path: np.ndarray
    energies: np.ndarray
    c: float
    apex: np.ndarray
    apex_index: int
    sweeps: int
    grad_norm: float
    stop_reason: str
    c_history: list = field(default_factory=list, repr=False)


def two_segment_path(left: np.ndarray, seed: np.ndarray, right: np.ndarray,
                     m: int) -> np.ndarray:
    """Piecewise-linear path left -> seed -> right sampled at m nodes."""
    ts = np.linspace(-1.0, 1.0, m)
    nodes = np.empty((m, left.size))
    for i, t in enumerate(ts):
        if t <= 0.0:
            nodes[i] = (-t) * left + (1.0 + t) * seed
        else:
            nodes[i] = (1.0 - t) * seed + t * right
    return nodes


def reparametrize(path: np.ndarray, seg_lengths: np.ndarray) -> np.ndarray:
    """Resample the polyline at uniform arclength (endpoints fixed)."""
    m = path.shape[0]
    s = np.concatenate([[0.0], np.cumsum(seg_lengths)])
    if s[-1] <= 0.0:
        return path
    s /= s[-1]
    targets = np.linspace(0.0, 1.0, m)[1:-1]
    j = np.clip(np.searchsorted(s, targets, side="right") - 1, 0, m - 2)
    t = (targets - s[j]) / np.maximum(s[j + 1] - s[j], 1e-300)
    out = path.copy()
    out[1:-1] = (1.0 - t)[:, None] * path[j] + t[:, None] * path[j + 1]
    return out


def locate_apex(path: np.ndarray, energy_batch, subsamples: int) -> tuple[np.ndarray, int, float]:
    """Highest state along the sampled path, including segment-interior samples."""
    es = energy_batch(path)
    best_state = path[int(np.argmax(es))]
    best_e = float(es.max())
    best_node = int(np.argmax(es))
    if subsamples > 0:
        fracs = np.arange(1, subsamples + 1) / (subsamples + 1)
        mids = (path[:-1][None, :, :] * (1.0 - fracs)[:, None, None]
                + path[1:][None, :, :] * fracs[:, None, None])
        mids = mids.reshape(-1, path.shape[1])
        ems = energy_batch(mids)
        k = int(np.argmax(ems))
        if ems[k] > best_e:
            best_e = float(ems[k])
            best_state = mids[k]
            best_node = k % (path.shape[0] - 1)  # left node of the owning segment
    return best_state.copy(), best_node, best_e


def relax_string(path: np.ndarray, energy_batch, descent_batch, step: float,
                 opts: StringOptions, retract=None, metric=None) -> StringResult:
    """Relax a string until the critical value stagnates.

    energy_batch(U) -> (k,) energies; descent_batch(U) -> (G, norms) with G
    the descent directions and norms their convergence measure; retract maps
    a batch back onto the constraint set (None for unconstrained);
    metric(diffs) -> per-segment lengths (None for Euclidean).
    """
    path = path.copy()
    m = path.shape[0]
    if retract is not None:
        path = retract(path)
    if metric is None:
        def metric(diffs):
            return np.linalg.norm(diffs, axis=1)
    history: list[float] = []
    reason = "sweep_cap"
    sweeps = 0
    for sweep in range(opts.max_sweeps):
        sweeps = sweep + 1
        es = energy_batch(path)
        apex = int(np.argmax(es))
        G, norms = descent_batch(path[1:-1])
        if opts.climb and sweep >= opts.climb_after and 0 < apex < m - 1:
            tau = path[apex + 1] - path[apex - 1]
            tt = float(tau @ tau)
            if tt > 0.0:
                g = G[apex - 1]
                G[apex - 1] = g - 2.0 * (float(g @ tau) / tt) * tau
        path[1:-1] -= step * G
        if retract is not None:
            path = retract(path)
        path = reparametrize(path, metric(np.diff(path, axis=0)))
        if retract is not None:
            path = retract(path)
        es = energy_batch(path)
        c = float(es.max())
        history.append(c)
        apex = int(np.argmax(es))
        if opts.grad_tol > 0.0 and 0 < apex < m - 1:
            _, norms_now = descent_batch(path[apex:apex + 1])
            if norms_now[0] <= opts.grad_tol:
                reason = "gradient"
                break
        if (sweep >= max(opts.stall_window, opts.climb_after + opts.stall_window)
                and abs(history[-1] - history[-opts.stall_window])
                <= opts.stall_tol * max(1.0, abs(c))):
            reason = "stalled"
            break
    es = energy_batch(path)
    apex_state, apex_node, c = locate_apex(path, energy_batch, opts.subsamples)
    _, apex_norm = descent_batch(apex_state[None, :])
    return StringResult(path=path, energies=es, c=c, apex=apex_state,
                        apex_index=apex_node, sweeps=sweeps,
                        grad_norm=float(apex_norm[0]), stop_reason=reason,
                        c_history=history)
