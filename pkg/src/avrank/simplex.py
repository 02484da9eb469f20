"""Least squares over the probability simplex by away-step Frank-Wolfe.

Minimises ``(b - A w)' V (b - A w)`` subject to ``w >= 0, sum(w) = 1``. Every
step moves toward the best vertex or away from the worst active vertex, with
an exact line search (the objective is quadratic). The loop stops when the
Frank-Wolfe duality gap, an upper bound on the suboptimality, drops below
``tol``. Ties between vertices go to the lowest index, so the output is a
deterministic function of the inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._errors import InvalidInputError


@dataclass(frozen=True)
class SimplexSolution:
    weights: np.ndarray
    objective: float
    gap: float
    iterations: int
    converged: bool


def simplex_least_squares(a, b, v_diag=None, tol: float = 1e-8, max_iter: int = 10_000) -> SimplexSolution:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.shape != (a.shape[0],):
        raise InvalidInputError(f"shapes {a.shape} and {b.shape} do not match")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInputError("characteristics must be finite")
    v = np.ones(a.shape[0]) if v_diag is None else np.asarray(v_diag, dtype=float)
    if v.shape != b.shape or np.any(v < 0) or not np.all(np.isfinite(v)):
        raise InvalidInputError("v_diag must hold one finite nonnegative weight per characteristic")
    n = a.shape[1]
    q = a.T @ (v[:, None] * a)
    c = a.T @ (v * b)
    const = float(b @ (v * b))

    # start at the best vertex
    vertex_obj = np.diag(q) - 2 * c
    j = int(np.argmin(vertex_obj))
    w = np.zeros(n)
    w[j] = 1.0
    qw = q[:, j].copy()

    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        grad = 2.0 * (qw - c)
        gw = float(grad @ w)
        s = int(np.argmin(grad))
        gap = gw - grad[s]
        if gap <= tol:
            break
        active = np.flatnonzero(w > 0)
        a_idx = int(active[np.argmax(grad[active])])
        away_gap = grad[a_idx] - gw
        wqw = float(w @ qw)
        if gap >= away_gap:
            slope = -gap
            curv = q[s, s] - 2 * qw[s] + wqw
            step_max = 1.0
            qd = q[:, s] - qw
            d_vertex, sign = s, 1.0
        else:
            slope = -away_gap
            curv = wqw - 2 * qw[a_idx] + q[a_idx, a_idx]
            step_max = w[a_idx] / (1.0 - w[a_idx])
            qd = qw - q[:, a_idx]
            d_vertex, sign = a_idx, -1.0
        step = step_max if curv <= 0 else min(step_max, -slope / (2.0 * curv))
        if sign > 0:
            w *= 1.0 - step
            w[d_vertex] += step
        else:
            w *= 1.0 + step
            w[d_vertex] -= step
            if step == step_max:
                w[d_vertex] = 0.0
        qw += step * qd
        if it % 100 == 0:
            qw = q @ w
    else:
        it = max_iter
    w = np.maximum(w, 0.0)
    w /= w.sum()
    obj = float(w @ q @ w - 2 * c @ w + const)
    return SimplexSolution(w, max(obj, 0.0), float(gap), it, bool(gap <= tol))
