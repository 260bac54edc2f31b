"""Three-wave resonant interaction form of ``m = 3`` solutions.

For ``B = I``, ``d1 > d2 > d3`` the entries ``rho_12``, ``rho_23``, ``rho_13``
rescale to envelopes ``phi_1..3`` obeying

    (phi_1)_t + psi_1 (phi_1)_x = i eps conj(phi_2) phi_3
    (phi_2)_t + psi_2 (phi_2)_x = i eps conj(phi_1) phi_3
    (phi_3)_t + psi_3 (phi_3)_x = i eps phi_1 phi_2

and, for real data, ``varphi_k = -i phi_k`` obey the same system with right
sides ``eps varphi_2 varphi_3``, ``eps varphi_1 varphi_3``,
``-eps varphi_1 varphi_2``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List

import numpy as np

from .engine import GBDTParams, SeedSpec, default_samples
from .errors import (GridTooSmall, NotRealReducible, OrderingViolated,
                     SignatureViolated)

REAL_ATOL = 1e-10

_PAIRS = ((0, 1), (1, 2), (0, 2))


def _check_d(d):
    d = np.asarray(d, dtype=float)
    if d.shape != (3,) or not (d[0] > d[1] > d[2]):
        raise OrderingViolated(f"need d1 > d2 > d3 strictly, got {d}")
    return d


def speeds(d, dhat) -> np.ndarray:
    """Characteristic speeds ``psi_1..3``."""
    d = _check_d(d)
    dh = np.asarray(dhat, dtype=float)
    return np.array([
        (dh[1] - dh[0]) / (d[0] - d[1]),
        (dh[2] - dh[1]) / (d[1] - d[2]),
        (dh[2] - dh[0]) / (d[0] - d[2]),
    ])


def coupling_numerator(d, dhat) -> float:
    d = np.asarray(d, dtype=float)
    dh = np.asarray(dhat, dtype=float)
    return float(d[0] * dh[1] - d[1] * dh[0] + d[1] * dh[2] - d[2] * dh[1]
                 + d[2] * dh[0] - d[0] * dh[2])


def coupling(d, dhat) -> float:
    """Coupling constant ``eps``."""
    d = _check_d(d)
    return coupling_numerator(d, dhat) / np.sqrt((d[0] - d[1]) * (d[0] - d[2]) * (d[1] - d[2]))


@dataclass(frozen=True)
class ThreeWaveFrame:
    psi: np.ndarray
    eps: float
    phi: np.ndarray  # (3, nx, nt) complex
    real_mode: bool = False


def three_wave_map(d, dhat, rho_grid, b=None) -> ThreeWaveFrame:
    """Envelopes ``phi_k = -i sqrt(d_i - d_j) rho_ij`` on a grid of ``rho``.

    ``rho_grid`` has shape ``(..., 3, 3)``; ``phi`` gets shape ``(3, ...)``.
    """
    d = _check_d(d)
    if b is not None and not np.array_equal(np.asarray(b, dtype=float), np.ones(3)):
        raise SignatureViolated("three-wave form needs B = I_3")
    rho = np.asarray(rho_grid, dtype=np.complex128)
    phi = np.stack([-1j * np.sqrt(d[i] - d[j]) * rho[..., i, j] for i, j in _PAIRS])
    return ThreeWaveFrame(speeds(d, dhat), coupling(d, dhat), phi)


def frame_for(spec: SeedSpec, rho_grid, real_mode=False) -> ThreeWaveFrame:
    frame = three_wave_map(spec.d, spec.dhat, rho_grid, spec.b)
    return replace(frame, real_mode=real_mode)


def real_reduction_check(params: GBDTParams, spec: SeedSpec, samples=None, atol: float = 0.0) -> List[str]:
    """Violations of the real-data conditions (empty when all hold)."""
    out = []
    if not spec.is_zero_seed:
        for x, t in (samples or default_samples()):
            if np.max(np.abs(np.imag(spec.rho(x, t)))) > atol:
                out.append(f"rho not real at (x={x:g}, t={t:g})")
                break
    if np.max(np.abs(np.real(params.A)), initial=0.0) > atol:
        out.append("A != -conj(A): A must be purely imaginary")
    if np.max(np.abs(np.imag(params.Pi0)), initial=0.0) > atol:
        out.append("Pi(0,0) not real")
    if np.max(np.abs(np.imag(params.S0)), initial=0.0) > atol:
        out.append("S(0,0) not real")
    return out


def real_fields(frame: ThreeWaveFrame, atol: float = REAL_ATOL) -> np.ndarray:
    """Real envelopes ``varphi_k = -i phi_k``.

    Raises
    ------
    NotRealReducible
        If any result has an imaginary part above ``atol``.
    """
    vphi = -1j * frame.phi
    worst = float(np.max(np.abs(vphi.imag), initial=0.0))
    if worst > atol:
        raise NotRealReducible(f"fields have imaginary parts up to {worst:.3e}")
    return vphi.real


def _grad(f, hx, ht):
    if f.shape[-2] < 5 or f.shape[-1] < 5:
        raise GridTooSmall(f"need at least 5 points per axis, got {f.shape[-2:]}")
    fx = np.gradient(f, hx, axis=-2, edge_order=2)
    ft = np.gradient(f, ht, axis=-1, edge_order=2)
    return fx, ft


def three_wave_residual(frame: ThreeWaveFrame, hx: float, ht: float = None) -> np.ndarray:
    """Max-norm residuals of the three envelope equations on a uniform grid.

    Fields are laid out ``(3, nx, nt)``. Derivatives are second-order finite
    differences (central inside, one-sided at the edges).
    """
    ht = hx if ht is None else ht
    psi, eps = frame.psi, frame.eps
    if frame.real_mode:
        f = real_fields(frame)
        rhs = (eps * f[1] * f[2], eps * f[0] * f[2], -eps * f[0] * f[1])
    else:
        f = frame.phi
        rhs = (1j * eps * np.conj(f[1]) * f[2], 1j * eps * np.conj(f[0]) * f[2], 1j * eps * f[0] * f[1])
    fx, ft = _grad(f, hx, ht)
    res = [ft[k] + psi[k] * fx[k] - rhs[k] for k in range(3)]
    return np.array([float(np.max(np.abs(r))) for r in res])
