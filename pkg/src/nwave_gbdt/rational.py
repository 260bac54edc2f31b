"""Exact polynomial form of GBDT for a zero seed and nilpotent ``A``.

With ``rho = 0`` and ``A^n = 0`` every exponential in the evolution of ``Pi``
truncates, so ``Pi(x, t)`` and ``S(x, t)`` are matrix polynomials and the
transformed potential is the rational function ``p(x, t) / det S(x, t)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .engine import GBDTParams, SeedSpec, check_inputs
from .errors import (IdentityViolated, LambdaNotReal, NotNilpotent,
                     SpectrumNotSingleton)
from .linalg import fro
from .poly import (MatrixPoly2, ScalarPoly2, is_nilpotent, nilpotent_exp_poly,
                   poly_det_adj)

EXACT_RTOL = 1e-12


@dataclass(frozen=True)
class RationalSolution:
    """``rho_tilde = numer / detS`` together with the polynomials it came from."""

    PiPoly: MatrixPoly2
    SPoly: MatrixPoly2
    detS: ScalarPoly2
    adjS: MatrixPoly2
    numer: MatrixPoly2

    def rho(self, x, t=0.0) -> np.ndarray:
        return self.numer(x, t) / self.detS(x, t)[..., None, None]


@dataclass(frozen=True)
class DarbouxRational:
    """``w_A = I - (sum_k z^{-k} Q_k(x, t)) / detS`` with matrix polynomials ``Q_k``."""

    Q: List[MatrixPoly2]
    detS: ScalarPoly2

    def __call__(self, x: float, t: float, z: complex) -> np.ndarray:
        m = self.Q[0].rows
        acc = np.zeros((m, m), dtype=np.complex128)
        for k, q in enumerate(self.Q, start=1):
            acc += z ** (-k) * q(x, t)
        return np.eye(m) - acc / self.detS(x, t)


def _column_poly(A, coeff_x, coeff_t, col) -> MatrixPoly2:
    ex = nilpotent_exp_poly(A, -1j * coeff_x, "x")
    et = nilpotent_exp_poly(A, -1j * coeff_t, "t")
    return (ex @ et) @ col.reshape(-1, 1)


def displacement_defect(A, SPoly: MatrixPoly2, PiPoly: MatrixPoly2, B) -> MatrixPoly2:
    """``A S - S A^* - i Pi B Pi^*`` as a polynomial (zero for valid data)."""
    return (A @ SPoly) - (SPoly @ A.conj().T) - 1j * ((PiPoly @ B) @ PiPoly.H)


def build_rational_solution(params: GBDTParams, spec: SeedSpec, *, check: bool = True) -> RationalSolution:
    """Polynomials ``Pi(x,t)``, ``S(x,t)``, ``det S`` and the numerator of ``rho_tilde``.

    ``S`` is assembled as ``S(0,t) = S0 + int_0^t Pi D^ B Pi^*`` followed by
    ``S(x,t) = S(0,t) + int_0^x Pi D B Pi^*``; the ``t``-derivative and the
    displacement identity are then checked coefficient-wise.

    Raises
    ------
    NotNilpotent
    IdentityViolated
    """
    if not spec.is_zero_seed:
        raise ValueError("rational extensions need a zero seed")
    if check:
        check_inputs(params, spec)
    A, B = params.A, spec.B
    if not is_nilpotent(A):
        raise NotNilpotent("A must be nilpotent for the rational extension")
    Pi = MatrixPoly2.hstack(
        _column_poly(A, spec.d[k], spec.dhat[k], params.Pi0[:, k]) for k in range(spec.m)
    )
    S_0t = ((Pi.at_x0() @ (spec.Dhat @ B)) @ Pi.at_x0().H).integrate_t(params.S0)
    S = ((Pi @ (spec.D @ B)) @ Pi.H).integrate_x(S_0t)

    scale = max(1.0, fro(A) * S.max_coeff_norm() + Pi.max_coeff_norm() ** 2)
    tdefect = (S.diff_t() - (Pi @ (spec.Dhat @ B)) @ Pi.H).max_coeff_norm()
    idefect = displacement_defect(A, S, Pi, B).max_coeff_norm()
    if max(tdefect, idefect) > EXACT_RTOL * scale * 1e2:
        raise IdentityViolated(
            f"polynomial S inconsistent: S_t defect {tdefect:.3e}, identity defect {idefect:.3e}"
        )
    det, adj = poly_det_adj(S)
    numer = -B @ ((Pi.H @ adj) @ Pi)
    return RationalSolution(Pi, S, det, adj, numer)


def darboux_rational(sol: RationalSolution, A, B) -> DarbouxRational:
    """Finite ``1/z`` expansion of the Darboux matrix.

    Uses ``(A - zI)^{-1} = -sum_{k=0}^{n-1} z^{-k-1} A^k`` and
    ``S^{-1} = adj S / det S``, giving ``Q_k = -i B Pi^* adj(S) A^{k-1} Pi``.
    """
    A = np.asarray(A, dtype=np.complex128)
    if not is_nilpotent(A):
        raise NotNilpotent("A must be nilpotent for the finite resolvent expansion")
    n = A.shape[0]
    left = -1j * (np.asarray(B) @ (sol.PiPoly.H @ sol.adjS))
    Q = []
    power = np.eye(n, dtype=np.complex128)
    for _ in range(n):
        Q.append(left @ (power @ sol.PiPoly))
        power = power @ A
    return DarbouxRational(Q, sol.detS)


def singleton_eigenvalue(A, lam=None) -> complex:
    """Return ``lambda`` with ``sigma(A) = {lambda}`` or raise :class:`SpectrumNotSingleton`."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0]
    if lam is None:
        lam = np.trace(A) / n
    if not is_nilpotent(A - lam * np.eye(n)):
        raise SpectrumNotSingleton(f"spectrum of A is not concentrated at {lam}")
    return complex(lam)


def shifted_polynomial_form(params: GBDTParams, spec: SeedSpec, lam: float):
    """``P(x) = Pi(x) exp(i lam x D)`` and ``Stilde(x) = S(x)`` at ``t = 0``.

    Both are pure-``x`` matrix polynomials when ``sigma(A) = {lam}`` with real
    ``lam``: ``P`` has columns ``exp(-i d_k x (A - lam I)) Pi0 e_k`` and
    ``Stilde`` solves ``Stilde_x = P D B P^*`` from ``S0``.
    """
    if abs(np.imag(lam)) > 0:
        raise LambdaNotReal(f"lambda must be real, got {lam}")
    lam = float(np.real(lam))
    if not spec.is_zero_seed:
        raise ValueError("the shifted polynomial form needs a zero seed")
    n = params.n
    N = params.A - lam * np.eye(n)
    singleton_eigenvalue(params.A, lam)
    cols = [nilpotent_exp_poly(N, -1j * spec.d[k], "x") @ params.Pi0[:, k].reshape(-1, 1)
            for k in range(spec.m)]
    P = MatrixPoly2.hstack(cols)
    Stilde = ((P @ (spec.D @ spec.B)) @ P.H).integrate_x(params.S0)
    return P, Stilde
