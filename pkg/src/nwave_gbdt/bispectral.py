"""Differential operators in the spectral variable ``z``.

When ``rho = 0`` and ``sigma(A) = {lambda}``, the Darboux matrix is a finite
sum of pole terms ``(z - lambda)^{-k}``, ``k = 1..n``. An Euler-type operator
``sum_{s=1}^{n+1} c_s (z - lambda)^s d^s/dz^s`` multiplies each pole term by
a constant, so coefficients can be chosen to kill all of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Callable, Sequence, Union

import numpy as np

from .engine import GBDTParams, SeedSpec, darboux_value, propagate
from .errors import LambdaNotReal, SpectralCollision
from .linalg import cmat_solve, fro, herm
from .rational import shifted_polynomial_form, singleton_eigenvalue

Z_GUARD = 1e-8


def falling(p: int, j: int) -> int:
    """Falling factorial ``p (p-1) ... (p-j+1)``; ``p`` may be negative."""
    out = 1
    for i in range(j):
        out *= p - i
    return out


@dataclass(frozen=True)
class BispectralOperator:
    """``B(z) = sum_s coeffs[s-1] (z - lam)^s d^s/dz^s``."""

    lam: complex
    coeffs: tuple

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def pole_multiplier(self, k: int) -> complex:
        """``B(z) (z - lam)^{-k} = pole_multiplier(k) (z - lam)^{-k}``."""
        return sum(c * falling(-k, s) for s, c in enumerate(self.coeffs, start=1))


def bispectral_operator(n: int, lam: complex = 0.0) -> BispectralOperator:
    """Operator of order ``n + 1`` annihilating ``(z - lam)^{-k}`` for ``k = 1..n``.

    The coefficients are the (one-dimensional) rational null space of the
    ``n x (n+1)`` system, scaled so that ``c_{n+1} = 1``.
    """
    import sympy

    if n < 1:
        raise ValueError("n must be at least 1")
    M = sympy.Matrix(n, n + 1, lambda k, s: falling(-(k + 1), s + 1))
    null = M.nullspace()
    if len(null) != 1:
        raise AssertionError(f"expected a one-dimensional null space, got {len(null)}")
    v = null[0] / null[0][n]
    coeffs = tuple(int(c) if c.is_integer else float(c) for c in v)
    return BispectralOperator(complex(lam), coeffs)


def _guard(z, lam):
    if abs(z - lam) < Z_GUARD * max(1.0, abs(lam)):
        raise SpectralCollision(f"z={z} is too close to lambda={lam}")


def pole_terms(params: GBDTParams, spec: SeedSpec, lam: complex, x: float, t: float = 0.0, *,
               allow_negative: bool = False):
    """Matrices ``M_k`` with ``w_A(x, t, z) = I + sum_k (z - lam)^{-k} M_k``.

    ``M_k = i B Pi^* S^{-1} (A - lam I)^{k-1} Pi``.
    """
    state = propagate(params, spec, x, t, allow_negative=allow_negative)
    n = params.n
    N = params.A - lam * np.eye(n)
    left = 1j * spec.B @ herm(state.Pi)
    out, v = [], state.Pi
    for _ in range(n):
        out.append(left @ cmat_solve(state.S, v))
        v = N @ v
    return out


def bispectral_residual(op: BispectralOperator, params: GBDTParams, spec: SeedSpec, x: float,
                        zs: Sequence[complex], t: float = 0.0, *, check_expansion: bool = True,
                        allow_negative: bool = False) -> float:
    """Max over ``zs`` of ``||B(z) w_A(x, t, z)||``.

    ``B(z)`` acts on the pole expansion of ``w_A`` analytically. With
    ``check_expansion`` the expansion is first compared to the directly
    evaluated Darboux matrix.
    """
    if not spec.is_zero_seed:
        raise ValueError("bispectrality is established for a zero seed only")
    lam = singleton_eigenvalue(params.A, op.lam)
    M = pole_terms(params, spec, lam, x, t, allow_negative=allow_negative)
    mult = [op.pole_multiplier(k) for k in range(1, len(M) + 1)]
    if check_expansion:
        state = propagate(params, spec, x, t, allow_negative=allow_negative)
    worst = 0.0
    for z in zs:
        _guard(z, lam)
        if check_expansion:
            W = np.eye(spec.m) + sum((z - lam) ** (-k) * Mk for k, Mk in enumerate(M, start=1))
            direct = darboux_value(state.A, state.Pi, state.S, spec.B, z)
            err = fro(W - direct)
            if err > 1e-8 * max(1.0, fro(direct)):
                raise ArithmeticError(f"pole expansion disagrees with w_A at z={z}: {err:.3e}")
        val = sum((z - lam) ** (-k) * mu * Mk for k, (mu, Mk) in enumerate(zip(mult, M), start=1))
        worst = max(worst, fro(val))
    return worst


@dataclass(frozen=True)
class RightActionResult:
    residual: float
    value: np.ndarray
    nondegenerate: bool


Coeff = Union[complex, Callable[[complex], complex]]


def right_action_residual(coeffs: Sequence[Coeff], params: GBDTParams, spec: SeedSpec, lam: float,
                          x: float, z: complex, k: int, power=None) -> RightActionResult:
    """Residual of a candidate right-acting operator on column ``k`` (0-based).

    Evaluates ``sum_l c_l(z) (d/dz + i d_k x)^l F(z)`` with
    ``F(z) = det(St) (z - lam)^p (I - i B P^* St^{-1} (A - zI)^{-1} P) e_k``,
    ``P``, ``St`` the shifted polynomial form at ``x`` and ``p = power``
    (default ``m``). ``z``-derivatives act on the exact pole expansion.
    ``coeffs[l-1]`` is ``c_l`` as a value at ``z`` or a callable.

    The result flags the operator as degenerate when its top coefficient
    vanishes at ``z``. This only evaluates candidates; it does not search
    for nontrivial ones.
    """
    if abs(np.imag(lam)) > 0:
        raise LambdaNotReal(f"lambda must be real, got {lam}")
    lam = float(np.real(lam))
    _guard(z, lam)
    m, n = spec.m, params.n
    p = m if power is None else int(power)
    P_poly, St_poly = shifted_polynomial_form(params, spec, lam)
    P = P_poly(x)
    St = St_poly(x)
    det = np.linalg.det(St)
    N = params.A - lam * np.eye(n)
    # F(z) = sum over (exponent, vector) pairs of vec * (z - lam)^exponent
    terms = [(p, det * np.eye(m)[:, k])]
    left = 1j * det * spec.B @ herm(P)
    v = P[:, k:k + 1]
    for q in range(1, n + 1):
        terms.append((p - q, (left @ cmat_solve(St, v))[:, 0]))
        v = N @ v

    def deriv(j):
        return sum(falling(e, j) * (z - lam) ** (e - j) * v for e, v in terms)

    a = 1j * spec.d[k] * x
    cs = [c(z) if callable(c) else complex(c) for c in coeffs]
    value = np.zeros(m, dtype=np.complex128)
    for ell, c in enumerate(cs, start=1):
        if c == 0:
            continue
        value = value + c * sum(comb(ell, j) * a ** (ell - j) * deriv(j) for j in range(ell + 1))
    nondegenerate = bool(cs) and cs[-1] != 0
    return RightActionResult(float(np.linalg.norm(value)), value, nondegenerate)
