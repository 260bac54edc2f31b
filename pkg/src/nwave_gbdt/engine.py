"""Seed systems, GBDT data, and the Darboux-transformed objects.

The seed pair of linear systems is

    u_x = (i z D - [D, rho]) u,      u_t = (i z Dhat - [Dhat, rho]) u,

with real diagonal ``D``, ``Dhat``, a signature matrix ``B`` and
``rho^* = B rho B``. GBDT data ``(A, Pi(0,0), S(0,0))`` obey
``A S - S A^* = i Pi B Pi^*`` and are carried along by

    Pi_x = -i A Pi D + Pi [D, rho],        S_x = Pi D B Pi^*,
    Pi_t = -i A Pi Dhat + Pi [Dhat, rho],  S_t = Pi Dhat B Pi^*.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import expm

from .errors import (ConventionMismatch, DomainError, IdentityViolated,
                     ShapeMismatch, SpectralCollision, ValidationFailed)
from .integrate import DEFAULT_STEP, rk4, rk4_nodes
from .linalg import as_cmatrix, cmat_solve, diag_comm, fro, herm

IDENTITY_RTOL = 1e-10
SPECTRAL_GUARD = 1e-12


# -- seeds ------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroSeed:
    """The trivial potential ``rho = 0``."""

    def __call__(self, x, t, m):
        return np.zeros((m, m), dtype=np.complex128)


@dataclass(frozen=True)
class CallableSeed:
    """A user-supplied potential ``rho(x, t)``.

    ``fundamental(x, z)`` and ``wave(x, t, z)`` are optional closed forms of
    the seed solutions; when missing they are integrated numerically.
    ``rho_x`` and ``rho_t`` are optional partial derivatives (central
    differences with step ``1e-5`` are used otherwise).
    """

    rho: Callable[[float, float], np.ndarray]
    fundamental: Optional[Callable] = None
    wave: Optional[Callable] = None
    rho_x: Optional[Callable] = None
    rho_t: Optional[Callable] = None

    def __call__(self, x, t, m):
        return as_cmatrix(self.rho(x, t), (m, m), "rho")


@dataclass(frozen=True)
class SeedSpec:
    """Fixed data of the seed system: diagonals of ``D``, ``Dhat``, ``B`` and the potential."""

    d: np.ndarray
    dhat: np.ndarray
    b: np.ndarray
    seed: object = field(default_factory=ZeroSeed)

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).ravel()
        dhat = np.asarray(self.dhat, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        if not (len(d) == len(dhat) == len(b)) or len(d) == 0:
            raise ShapeMismatch(f"d, dhat, b must share a positive length, got {len(d)}, {len(dhat)}, {len(b)}")
        for name, arr in (("d", d), ("dhat", dhat), ("b", b)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m(self) -> int:
        return len(self.d)

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.d).astype(np.complex128)

    @property
    def Dhat(self) -> np.ndarray:
        return np.diag(self.dhat).astype(np.complex128)

    @property
    def B(self) -> np.ndarray:
        return np.diag(self.b).astype(np.complex128)

    @property
    def is_zero_seed(self) -> bool:
        return isinstance(self.seed, ZeroSeed)

    def rho(self, x: float, t: float = 0.0) -> np.ndarray:
        return self.seed(x, t, self.m)

    def rho_derivatives(self, x: float, t: float, step: float = 1e-5):
        """``(rho_x, rho_t)`` at ``(x, t)``."""
        if self.is_zero_seed:
            z = np.zeros((self.m, self.m), dtype=np.complex128)
            return z, z
        s = self.seed
        rx = s.rho_x(x, t) if s.rho_x else (self.rho(x + step, t) - self.rho(x - step, t)) / (2 * step)
        rt = s.rho_t(x, t) if s.rho_t else (self.rho(x, t + step) - self.rho(x, t - step)) / (2 * step)
        return np.asarray(rx, dtype=np.complex128), np.asarray(rt, dtype=np.complex128)

    def G(self, x: float, t: float, z: complex) -> np.ndarray:
        return 1j * z * self.D - diag_comm(self.d, self.rho(x, t))

    def F(self, x: float, t: float, z: complex) -> np.ndarray:
        return 1j * z * self.Dhat - diag_comm(self.dhat, self.rho(x, t))


def default_samples():
    g = np.linspace(0.0, 1.0, 4)
    return [(float(x), float(t)) for x in g for t in g]


def validate_seed(spec: SeedSpec, samples=None, rtol: float = 1e-12) -> List[str]:
    """List the violated seed constraints (empty when the seed is admissible)."""
    out = []
    if not np.all(np.isin(spec.b, (1.0, -1.0))):
        out.append("B not a signature matrix: entries must be +1 or -1")
    for name, arr in (("D", spec.d), ("Dhat", spec.dhat)):
        if not np.all(np.isfinite(arr)):
            out.append(f"{name} has non-finite diagonal entries")
    if not spec.is_zero_seed:
        B = spec.B
        for x, t in (samples or default_samples()):
            rho = spec.rho(x, t)
            defect = fro(herm(rho) - B @ rho @ B)
            if defect > rtol * max(1.0, fro(rho)):
                out.append(f"rho^* != B rho B at (x={x:g}, t={t:g}): defect {defect:.3e}")
    return out


# -- transformation data --------------------------------------------------

@dataclass(frozen=True)
class GBDTParams:
    """Transformation data ``A``, ``Pi(0,0)`` and ``S(0,0)``.

    Only shapes are checked here; the displacement identity involves ``B``
    and is checked by :func:`validate_gbdt_params` against a seed.
    """

    A: np.ndarray
    Pi0: np.ndarray
    S0: np.ndarray

    def __post_init__(self):
        A = as_cmatrix(self.A, name="A")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ShapeMismatch(f"A must be square, got {A.shape}")
        Pi0 = as_cmatrix(self.Pi0, (n, None), "Pi0")
        S0 = as_cmatrix(self.S0, (n, n), "S0")
        for name, arr in (("A", A), ("Pi0", Pi0), ("S0", S0)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.Pi0.shape[1]


@dataclass(frozen=True)
class ParamDiagnostics:
    identity_residual: float
    hermiticity_defect: float
    scale: float
    rtol: float = IDENTITY_RTOL

    @property
    def ok(self) -> bool:
        tol = self.rtol * self.scale
        return self.identity_residual <= tol and self.hermiticity_defect <= tol

    def violations(self) -> List[str]:
        out = []
        tol = self.rtol * self.scale
        if self.hermiticity_defect > tol:
            out.append(f"S0 not Hermitian: defect {self.hermiticity_defect:.3e}")
        if self.identity_residual > tol:
            out.append(f"A S0 - S0 A^* != i Pi0 B Pi0^*: residual {self.identity_residual:.3e}")
        return out


def identity_residual(A, Pi, S, B) -> np.ndarray:
    """``A S - S A^* - i Pi B Pi^*`` (batched over leading axes of ``Pi``, ``S``)."""
    return A @ S - S @ herm(A) - 1j * (Pi @ B) @ herm(Pi)


def validate_gbdt_params(params: GBDTParams, spec: SeedSpec, rtol: float = IDENTITY_RTOL) -> ParamDiagnostics:
    if params.m != spec.m:
        raise ShapeMismatch(f"Pi0 has {params.m} columns but the seed has m={spec.m}")
    res = fro(identity_residual(params.A, params.Pi0, params.S0, spec.B))
    scale = max(1.0, fro(params.A) * fro(params.S0) + fro(params.Pi0) ** 2)
    return ParamDiagnostics(res, fro(params.S0 - herm(params.S0)), scale, rtol)


def check_inputs(params: GBDTParams, spec: SeedSpec) -> None:
    """Raise unless both the seed and the GBDT data are admissible."""
    bad = validate_seed(spec)
    if bad:
        raise ValidationFailed("; ".join(bad))
    diag = validate_gbdt_params(params, spec)
    if not diag.ok:
        raise IdentityViolated("; ".join(diag.violations()))


def complete_pi0(A, S0, b) -> np.ndarray:
    """Construct ``Pi0`` with ``A S0 - S0 A^* = i Pi0 B Pi0^*``.

    The Hermitian matrix ``C = (A S0 - S0 A^*) / i`` is split by its
    eigenvalues; positive ones are placed in ``+1`` columns of ``B`` and
    negative ones in ``-1`` columns.

    Raises
    ------
    ValueError
        If ``B`` lacks enough columns of the needed sign.
    """
    A = as_cmatrix(A, name="A")
    S0 = as_cmatrix(S0, name="S0")
    b = np.asarray(b, dtype=float)
    C = (A @ S0 - S0 @ herm(A)) / 1j
    C = (C + herm(C)) / 2
    mu, U = np.linalg.eigh(C)
    scale = max(1.0, float(np.max(np.abs(mu))) if mu.size else 1.0)
    pos = [i for i in range(len(b)) if b[i] > 0]
    neg = [i for i in range(len(b)) if b[i] < 0]
    pi0 = np.zeros((A.shape[0], len(b)), dtype=np.complex128)
    for k in np.argsort(-np.abs(mu)):
        if abs(mu[k]) <= 1e-14 * scale:
            continue
        pool = pos if mu[k] > 0 else neg
        if not pool:
            raise ValueError("signature of B cannot accommodate the inertia of (A S0 - S0 A^*)/i")
        pi0[:, pool.pop(0)] = U[:, k] * np.sqrt(abs(mu[k]))
    return pi0


# -- propagation ------------------------------------------------------------

@dataclass(frozen=True)
class GBDTState:
    """``Pi`` and ``S`` at ``(x, t)``; ``A`` is carried along for the Darboux matrix."""

    x: float
    t: float
    A: np.ndarray
    Pi: np.ndarray
    S: np.ndarray
    local_error: float = 0.0


@dataclass(frozen=True)
class WaveSample:
    z: complex
    value: np.ndarray


def _check_domain(x, t, allow_negative):
    if allow_negative:
        return
    if np.any(np.asarray(x) < 0) or np.any(np.asarray(t) < 0):
        raise DomainError("negative coordinates need allow_negative=True")


def _exp_leg(A, coeff, L, cols):
    """Closed-form leg for a zero seed.

    For each column ``k`` with ``X = -i coeff_k A`` returns ``exp(X L) q_k``
    and ``J_k = int_0^L exp(X s) q_k q_k^* exp(X^* s) ds`` via the block
    exponential ``exp(L [[X, q q^*], [0, -X^*]])``.

    ``L`` has shape ``(N,)`` and ``cols`` shape ``(N, n, m)``; results are
    ``(N, n, m)`` and ``(N, m, n, n)``.
    """
    N, n, m = cols.shape
    new_cols = np.empty_like(cols)
    J = np.zeros((N, m, n, n), dtype=np.complex128)
    for k in range(m):
        X = -1j * coeff[k] * A
        q = cols[:, :, k]
        blk = np.zeros((N, 2 * n, 2 * n), dtype=np.complex128)
        blk[:, :n, :n] = X
        blk[:, :n, n:] = q[:, :, None] * np.conj(q[:, None, :])
        blk[:, n:, n:] = -herm(X)
        blk *= L[:, None, None]
        E = expm(blk)
        top = E[:, :n, :n]
        new_cols[:, :, k] = np.einsum("nij,nj->ni", top, q)
        J[:, k] = E[:, :n, n:] @ herm(top)
    return new_cols, J


def _exact_many(params: GBDTParams, spec: SeedSpec, xs, ts):
    xs = np.asarray(xs, dtype=float).ravel()
    ts = np.asarray(ts, dtype=float).ravel()
    N = len(xs)
    A = params.A
    cols = np.broadcast_to(params.Pi0, (N,) + params.Pi0.shape).copy()
    S = np.broadcast_to(params.S0, (N,) + params.S0.shape).copy()
    cols, J = _exp_leg(A, spec.dhat, ts, cols)
    S = S + np.einsum("k,nkij->nij", spec.b * spec.dhat, J)
    cols, J = _exp_leg(A, spec.d, xs, cols)
    S = S + np.einsum("k,nkij->nij", spec.b * spec.d, J)
    return cols, S


def _flow_x(params, spec, t):
    A, m, d, db = params.A, spec.m, spec.d, spec.d * spec.b

    def f(x, y):
        Pi = y[:, :m]
        out = np.empty_like(y)
        out[:, :m] = -1j * (A @ Pi) * d + Pi @ diag_comm(d, spec.rho(x, t))
        out[:, m:] = (Pi * db) @ herm(Pi)
        return out
    return f


def _flow_t(params, spec, x):
    A, m, dh, dhb = params.A, spec.m, spec.dhat, spec.dhat * spec.b

    def f(t, y):
        Pi = y[:, :m]
        out = np.empty_like(y)
        out[:, :m] = -1j * (A @ Pi) * dh + Pi @ diag_comm(dh, spec.rho(x, t))
        out[:, m:] = (Pi * dhb) @ herm(Pi)
        return out
    return f


def propagate(params: GBDTParams, spec: SeedSpec, x: float, t: float = 0.0, *,
              method: str = "exact", h: float = DEFAULT_STEP, order: str = "tx",
              allow_negative: bool = False) -> GBDTState:
    """Evaluate ``Pi(x, t)`` and ``S(x, t)``.

    Parameters
    ----------
    method : {"exact", "rk4"}
        ``"exact"`` (zero seed only) uses matrix exponentials for ``Pi`` and a
        block-exponential closed form for ``S``. ``"rk4"`` integrates the
        evolution equations with step ``h``.
    order : {"tx", "xt"}
        Path for ``rk4``: ``"tx"`` runs the ``t``-leg at ``x = 0`` first.
    """
    if params.m != spec.m:
        raise ShapeMismatch(f"Pi0 has {params.m} columns but the seed has m={spec.m}")
    _check_domain(x, t, allow_negative)
    x, t = float(x), float(t)
    if x == 0.0 and t == 0.0:
        return GBDTState(0.0, 0.0, params.A, params.Pi0.copy(), params.S0.copy())
    if method == "exact":
        if not spec.is_zero_seed:
            raise ValueError("the exact method requires a zero seed; use method='rk4'")
        Pi, S = _exact_many(params, spec, [x], [t])
        return GBDTState(x, t, params.A, Pi[0], S[0])
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")
    m = spec.m
    y = np.hstack([params.Pi0, params.S0])
    if order == "tx":
        y, e1 = rk4(_flow_t(params, spec, 0.0), y, 0.0, t, h)
        y, e2 = rk4(_flow_x(params, spec, t), y, 0.0, x, h)
    elif order == "xt":
        y, e1 = rk4(_flow_x(params, spec, 0.0), y, 0.0, x, h)
        y, e2 = rk4(_flow_t(params, spec, x), y, 0.0, t, h)
    else:
        raise ValueError(f"unknown order {order!r}")
    return GBDTState(x, t, params.A, y[:, :m], y[:, m:], max(e1, e2))


def propagate_grid(params: GBDTParams, spec: SeedSpec, xs, ts, *, method: str = "exact",
                   h: float = DEFAULT_STEP, allow_negative: bool = False):
    """``Pi`` and ``S`` on the tensor grid ``xs x ts``.

    Returns arrays of shape ``(nx, nt, n, m)`` and ``(nx, nt, n, n)``. The
    ``rk4`` method sweeps ``t`` at ``x = 0`` and then ``x`` at every ``t`` node,
    matching :func:`propagate` with ``order="tx"``.
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    _check_domain(xs, ts, allow_negative)
    if params.m != spec.m:
        raise ShapeMismatch(f"Pi0 has {params.m} columns but the seed has m={spec.m}")
    n, m = params.n, spec.m
    if method == "exact":
        if not spec.is_zero_seed:
            raise ValueError("the exact method requires a zero seed; use method='rk4'")
        X, T = np.meshgrid(xs, ts, indexing="ij")
        Pi, S = _exact_many(params, spec, X, T)
        return Pi.reshape(len(xs), len(ts), n, m), S.reshape(len(xs), len(ts), n, n)
    if method != "rk4":
        raise ValueError(f"unknown method {method!r}")
    Pi = np.empty((len(xs), len(ts), n, m), dtype=np.complex128)
    S = np.empty((len(xs), len(ts), n, n), dtype=np.complex128)
    y0 = np.hstack([params.Pi0, params.S0])
    tstates, _ = rk4_nodes(_flow_t(params, spec, 0.0), y0, ts, h)
    for j, (t, yt) in enumerate(zip(ts, tstates)):
        xstates, _ = rk4_nodes(_flow_x(params, spec, float(t)), yt, xs, h)
        for i, y in enumerate(xstates):
            Pi[i, j] = y[:, :m]
            S[i, j] = y[:, m:]
    return Pi, S


# -- Darboux matrix and transformed objects ---------------------------------

def resolvent(A: np.ndarray, z: complex, rhs: np.ndarray) -> np.ndarray:
    """``(A - z I)^{-1} rhs`` with a guard against ``z`` on the spectrum of ``A``."""
    n = A.shape[0]
    M = A - z * np.eye(n)
    det = abs(np.linalg.det(M))
    if det <= SPECTRAL_GUARD * max(1.0, fro(A) + abs(z)) ** n:
        raise SpectralCollision(f"z={z} is numerically in the spectrum of A (|det(A - zI)|={det:.3e})")
    return np.linalg.solve(M, rhs)


def darboux_value(A, Pi, S, B, z: complex) -> np.ndarray:
    """``I - i B Pi^* S^{-1} (A - zI)^{-1} Pi`` as a bare array."""
    m = Pi.shape[1]
    X = cmat_solve(S, resolvent(A, z, Pi))
    return np.eye(m) - 1j * B @ herm(Pi) @ X


def darboux_matrix(state: GBDTState, spec: SeedSpec, z: complex) -> WaveSample:
    """Darboux matrix ``w_A(x, t, z)`` at a propagated state."""
    return WaveSample(complex(z), darboux_value(state.A, state.Pi, state.S, spec.B, z))


def darboux_inverse(state: GBDTState, spec: SeedSpec, z: complex) -> np.ndarray:
    """``w_A(z)^{-1}`` through B-unitarity: ``B w_A(conj z)^* B``."""
    B = spec.B
    w = darboux_value(state.A, state.Pi, state.S, B, np.conj(z))
    return B @ herm(w) @ B


def potential_correction(Pi, S, B) -> np.ndarray:
    """``-B Pi^* S^{-1} Pi``, the GBDT change of the potential."""
    return -B @ herm(Pi) @ cmat_solve(S, Pi)


def transformed_potential(state: GBDTState, spec: SeedSpec, rtol: float = 1e-12) -> np.ndarray:
    """Transformed potential ``rho - B Pi^* S^{-1} Pi``.

    Raises
    ------
    SingularMatrix
        At zeros of ``det S`` (poles of the result).
    ArithmeticError
        If the result breaks ``rho^* = B rho B`` beyond ``rtol`` relative to
        the size of the cancelled terms, ``||Pi||^2 ||S^{-1}||``.
    """
    B = spec.B
    rho = spec.rho(state.x, state.t) + potential_correction(state.Pi, state.S, B)
    defect = fro(herm(rho) - B @ rho @ B)
    scale = fro(rho)
    if state.S.size:
        scale = max(scale, fro(state.Pi) ** 2 / np.linalg.svd(state.S, compute_uv=False)[-1])
    if defect > rtol * max(1.0, scale):
        raise ArithmeticError(f"symmetry rho^* = B rho B lost: defect {defect:.3e}")
    return rho


def seed_fundamental(spec: SeedSpec, x: float, z: complex, h: float = DEFAULT_STEP) -> np.ndarray:
    """Seed solution ``w(x, z)`` with ``w(0, z) = I``."""
    if spec.is_zero_seed:
        return np.diag(np.exp(1j * z * x * spec.d))
    if spec.seed.fundamental is not None:
        return np.asarray(spec.seed.fundamental(x, z), dtype=np.complex128)
    y, _ = rk4(lambda s, w: spec.G(s, 0.0, z) @ w, np.eye(spec.m), 0.0, x, h)
    return y


def seed_wave(spec: SeedSpec, x: float, t: float, z: complex, h: float = DEFAULT_STEP) -> np.ndarray:
    """Seed wave function ``w(x, t, z)`` with ``w(0, 0, z) = I``."""
    if spec.is_zero_seed:
        return np.diag(np.exp(1j * z * (x * spec.d + t * spec.dhat)))
    if spec.seed.wave is not None:
        return np.asarray(spec.seed.wave(x, t, z), dtype=np.complex128)
    y, _ = rk4(lambda s, w: spec.F(0.0, s, z) @ w, np.eye(spec.m), 0.0, t, h)
    y, _ = rk4(lambda s, w: spec.G(s, t, z) @ w, y, 0.0, x, h)
    return y


def _method_for(spec, method):
    if method is None:
        return "exact" if spec.is_zero_seed else "rk4"
    return method


def transformed_wave(params: GBDTParams, spec: SeedSpec, x: float, t: float, z: complex, *,
                     method: Optional[str] = None, h: float = DEFAULT_STEP,
                     allow_negative: bool = False) -> WaveSample:
    """Transformed wave function ``w_A(x,t,z) w(x,t,z) w_A(0,0,z)^{-1}``."""
    method = _method_for(spec, method)
    if x == 0 and t == 0:
        return WaveSample(complex(z), np.eye(spec.m, dtype=np.complex128))
    s0 = propagate(params, spec, 0.0, 0.0)
    s1 = propagate(params, spec, x, t, method=method, h=h, allow_negative=allow_negative)
    wa = darboux_value(s1.A, s1.Pi, s1.S, spec.B, z)
    value = wa @ seed_wave(spec, x, t, z, h) @ darboux_inverse(s0, spec, z)
    return WaveSample(complex(z), value)


def transformed_fundamental(params: GBDTParams, spec: SeedSpec, x: float, z: complex, *,
                            method: Optional[str] = None, h: float = DEFAULT_STEP,
                            allow_negative: bool = False) -> WaveSample:
    """Normalized fundamental solution ``w_A(x,z) w(x,z) w_A(0,z)^{-1}`` of the transformed system."""
    method = _method_for(spec, method)
    if x == 0:
        return WaveSample(complex(z), np.eye(spec.m, dtype=np.complex128))
    s0 = propagate(params, spec, 0.0, 0.0)
    s1 = propagate(params, spec, x, 0.0, method=method, h=h, allow_negative=allow_negative)
    wa = darboux_value(s1.A, s1.Pi, s1.S, spec.B, z)
    value = wa @ seed_fundamental(spec, x, z, h) @ darboux_inverse(s0, spec, z)
    return WaveSample(complex(z), value)


def dirac_view(rho_t, m1: int, m2: Optional[int] = None, kind: str = "skewselfadjoint",
               spec: Optional[SeedSpec] = None) -> np.ndarray:
    """Dirac-type potential ``v`` from the upper-right block of ``rho_t``.

    ``kind="selfadjoint"`` gives ``v = 2i rho_12`` (needs ``B = D = j``);
    ``kind="skewselfadjoint"`` gives ``v = -2 rho_12`` (needs ``B = I``,
    ``D = j``), where ``j = diag(I_m1, -I_m2)``. Conventions are only checked
    when ``spec`` is given.
    """
    rho_t = np.asarray(rho_t, dtype=np.complex128)
    m = rho_t.shape[-1]
    m2 = m - m1 if m2 is None else m2
    if m1 + m2 != m or m1 < 1 or m2 < 1:
        raise ShapeMismatch(f"m1 + m2 must equal {m} with both positive")
    if spec is not None:
        j = np.concatenate([np.ones(m1), -np.ones(m2)])
        if not np.array_equal(spec.d, j):
            raise ConventionMismatch("Dirac view needs D = diag(I_m1, -I_m2)")
        want_b = j if kind == "selfadjoint" else np.ones(m)
        if not np.array_equal(spec.b, want_b):
            raise ConventionMismatch(f"{kind} Dirac view needs B = {'j' if kind == 'selfadjoint' else 'I'}")
    block = rho_t[..., :m1, m1:]
    if kind == "selfadjoint":
        return 2j * block
    if kind == "skewselfadjoint":
        return -2 * block
    raise ValueError(f"unknown kind {kind!r}")
