"""Fixed-step classical Runge-Kutta for matrix-valued ODEs."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import StepTooLarge

DEFAULT_STEP = 1e-3
LOCAL_ERROR_TOL = 1e-8


def rk4_step(f: Callable, s: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(s, y)
    k2 = f(s + h / 2, y + (h / 2) * k1)
    k3 = f(s + h / 2, y + (h / 2) * k2)
    k4 = f(s + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4(f: Callable, y0, s0: float, s1: float, h: float = DEFAULT_STEP,
        *, tol: float = LOCAL_ERROR_TOL):
    """Integrate ``y' = f(s, y)`` from ``s0`` to ``s1``.

    The interval is split into ``ceil(|s1 - s0| / h)`` equal steps, so the
    endpoint is hit exactly. A Richardson estimate (one double step against
    two single steps) on the first step guards against an oversized ``h``.

    Returns
    -------
    y1 : ndarray
    local_error : float
        Richardson estimate of the first step's local error (0 when
        ``s0 == s1``).

    Raises
    ------
    StepTooLarge
        If the local error estimate exceeds ``tol * max(1, ||y0||)``.
    """
    y = np.array(y0, dtype=np.complex128)
    length = s1 - s0
    if length == 0:
        return y, 0.0
    nsteps = max(1, math.ceil(abs(length) / h - 1e-9))
    step = length / nsteps

    half = rk4_step(f, s0 + step / 2, rk4_step(f, s0, y, step / 2), step / 2)
    full = rk4_step(f, s0, y, step)
    local_error = float(np.linalg.norm(half - full)) / 15.0
    if local_error > tol * max(1.0, float(np.linalg.norm(y))):
        raise StepTooLarge(f"local error estimate {local_error:.3e} with step {step:.3e}")

    s = s0
    for k in range(nsteps):
        y = rk4_step(f, s, y, step)
        s = s0 + (k + 1) * step
    return y, local_error


def rk4_nodes(f: Callable, y0, nodes, h: float = DEFAULT_STEP, *, tol: float = LOCAL_ERROR_TOL):
    """Integrate from ``s = 0`` through every node, returning states in input order.

    Non-negative nodes are visited in increasing order and negative nodes in
    decreasing order, each sweep starting again from ``y0`` at ``s = 0``.
    """
    nodes = np.asarray(nodes, dtype=float)
    out = [None] * len(nodes)
    err = 0.0
    for sign in (1.0, -1.0):
        idx = [i for i in np.argsort(sign * nodes, kind="stable")
               if (nodes[i] >= 0) == (sign > 0)]
        y, s = np.array(y0, dtype=np.complex128), 0.0
        for i in idx:
            y, e = rk4(f, y, s, float(nodes[i]), h, tol=tol)
            s = float(nodes[i])
            err = max(err, e)
            out[i] = y
    return out, err
