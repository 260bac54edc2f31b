"""Matrix polynomials in two real variables ``(x, t)``.

A :class:`MatrixPoly2` stores ``P(x, t) = sum C_ij x**i t**j`` sparsely as a
map from exponent pairs to complex coefficient matrices. Arithmetic is done on
coefficients, so results are exact up to floating-point rounding of the
coefficients themselves (no truncation or sampling is involved).
"""

from __future__ import annotations

import math
from itertools import product
from typing import Dict, Iterable, Tuple

import numpy as np

from .errors import NotNilpotent, ShapeMismatch
from .linalg import fro

Exponent = Tuple[int, int]

NILPOTENT_RTOL = 1e-12


class MatrixPoly2:
    """Sparse matrix polynomial in ``(x, t)``.

    Zero coefficient matrices are never stored. Instances are treated as
    immutable: coefficient arrays are copied on the way in and flagged
    read-only.
    """

    __slots__ = ("shape", "terms")

    # make ndarray operators defer to our reflected methods
    __array_ufunc__ = None

    def __init__(self, terms: Dict[Exponent, np.ndarray], shape=None):
        clean = {}
        for (i, j), c in terms.items():
            c = np.array(c, dtype=np.complex128)
            if c.ndim == 0:
                c = c.reshape(1, 1)
            if shape is None:
                shape = c.shape
            if c.shape != tuple(shape):
                raise ShapeMismatch(f"coefficient {(i, j)} has shape {c.shape}, expected {shape}")
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent {(i, j)}")
            if np.any(c != 0):
                c.setflags(write=False)
                clean[(int(i), int(j))] = c
        if shape is None:
            raise ValueError("shape is required for an empty polynomial")
        self.shape = (int(shape[0]), int(shape[1]))
        self.terms = dict(sorted(clean.items()))

    # -- constructors -----------------------------------------------------
    @classmethod
    def zeros(cls, shape) -> "MatrixPoly2":
        return cls({}, shape)

    @classmethod
    def constant(cls, c) -> "MatrixPoly2":
        c = np.atleast_2d(np.asarray(c, dtype=np.complex128))
        return cls({(0, 0): c}, c.shape)

    @classmethod
    def identity(cls, n: int) -> "MatrixPoly2":
        return cls.constant(np.eye(n))

    @classmethod
    def hstack(cls, blocks: Iterable["MatrixPoly2"]) -> "MatrixPoly2":
        blocks = list(blocks)
        rows = blocks[0].rows
        if any(b.rows != rows for b in blocks):
            raise ShapeMismatch("hstack blocks must share the row count")
        widths = [b.cols for b in blocks]
        out: Dict[Exponent, np.ndarray] = {}
        offset = 0
        for b, w in zip(blocks, widths):
            for e, c in b.terms.items():
                acc = out.setdefault(e, np.zeros((rows, sum(widths)), dtype=np.complex128))
                acc[:, offset:offset + w] = c
            offset += w
        return cls(out, (rows, sum(widths)))

    # -- shape and degree -------------------------------------------------
    @property
    def rows(self) -> int:
        return self.shape[0]

    @property
    def cols(self) -> int:
        return self.shape[1]

    @property
    def degx(self) -> int:
        return max((i for i, _ in self.terms), default=0)

    @property
    def degt(self) -> int:
        return max((j for _, j in self.terms), default=0)

    @property
    def total_degree(self) -> int:
        return max((i + j for i, j in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, i: int, j: int = 0) -> np.ndarray:
        c = self.terms.get((i, j))
        return np.zeros(self.shape, dtype=np.complex128) if c is None else c

    def max_coeff_norm(self) -> float:
        return max((fro(c) for c in self.terms.values()), default=0.0)

    def prune(self, atol: float) -> "MatrixPoly2":
        """Drop coefficients whose Frobenius norm is at most ``atol``."""
        return type(self)({e: c for e, c in self.terms.items() if fro(c) > atol}, self.shape)

    def entry(self, r: int, c: int) -> "ScalarPoly2":
        return ScalarPoly2({e: m[r, c] for e, m in self.terms.items()})

    # -- arithmetic -------------------------------------------------------
    def _combine(self, other: "MatrixPoly2", sign: float) -> "MatrixPoly2":
        if not isinstance(other, MatrixPoly2):
            other = MatrixPoly2.constant(other)
        if other.shape != self.shape:
            raise ShapeMismatch(f"cannot add shapes {self.shape} and {other.shape}")
        out = {e: c.copy() for e, c in self.terms.items()}
        for e, c in other.terms.items():
            if e in out:
                out[e] = out[e] + sign * c
            else:
                out[e] = sign * c
        return type(self)(out, self.shape)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __radd__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __rsub__(self, other):
        return (-self)._combine(other, 1.0)

    def __neg__(self):
        return type(self)({e: -c for e, c in self.terms.items()}, self.shape)

    def __mul__(self, scalar):
        if isinstance(scalar, MatrixPoly2):
            return NotImplemented
        return type(self)({e: scalar * c for e, c in self.terms.items()}, self.shape)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if not isinstance(other, MatrixPoly2):
            other = np.atleast_2d(np.asarray(other, dtype=np.complex128))
            if other.shape[0] != self.cols:
                raise ShapeMismatch(f"cannot multiply {self.shape} by {other.shape}")
            return MatrixPoly2({e: c @ other for e, c in self.terms.items()},
                               (self.rows, other.shape[1]))
        if self.cols != other.rows:
            raise ShapeMismatch(f"cannot multiply {self.shape} by {other.shape}")
        out: Dict[Exponent, np.ndarray] = {}
        for (i1, j1), a in self.terms.items():
            for (i2, j2), b in other.terms.items():
                e = (i1 + i2, j1 + j2)
                prod_ = a @ b
                out[e] = out[e] + prod_ if e in out else prod_
        return MatrixPoly2(out, (self.rows, other.cols))

    def __rmatmul__(self, other):
        other = np.atleast_2d(np.asarray(other, dtype=np.complex128))
        if other.shape[1] != self.rows:
            raise ShapeMismatch(f"cannot multiply {other.shape} by {self.shape}")
        return MatrixPoly2({e: other @ c for e, c in self.terms.items()},
                           (other.shape[0], self.cols))

    @property
    def H(self) -> "MatrixPoly2":
        """Conjugate transpose; ``x`` and ``t`` are real so only coefficients change."""
        return MatrixPoly2({e: c.conj().T for e, c in self.terms.items()}, (self.cols, self.rows))

    # -- calculus ---------------------------------------------------------
    def integrate_x(self, const=None) -> "MatrixPoly2":
        """Antiderivative in ``x``; ``const`` (matrix or pure-``t`` poly) is the value at ``x = 0``."""
        out = {(i + 1, j): c / (i + 1) for (i, j), c in self.terms.items()}
        res = MatrixPoly2(out, self.shape)
        if const is not None:
            if isinstance(const, MatrixPoly2) and const.degx > 0:
                raise ValueError("integration constant in x must not depend on x")
            res = res + const
        return res

    def integrate_t(self, const=None) -> "MatrixPoly2":
        """Antiderivative in ``t``; ``const`` (matrix or pure-``x`` poly) is the value at ``t = 0``."""
        out = {(i, j + 1): c / (j + 1) for (i, j), c in self.terms.items()}
        res = MatrixPoly2(out, self.shape)
        if const is not None:
            if isinstance(const, MatrixPoly2) and const.degt > 0:
                raise ValueError("integration constant in t must not depend on t")
            res = res + const
        return res

    def diff_x(self) -> "MatrixPoly2":
        return MatrixPoly2({(i - 1, j): i * c for (i, j), c in self.terms.items() if i > 0}, self.shape)

    def diff_t(self) -> "MatrixPoly2":
        return MatrixPoly2({(i, j - 1): j * c for (i, j), c in self.terms.items() if j > 0}, self.shape)

    def at_x0(self) -> "MatrixPoly2":
        """Restriction to ``x = 0`` (a pure-``t`` polynomial)."""
        return MatrixPoly2({e: c for e, c in self.terms.items() if e[0] == 0}, self.shape)

    def at_t0(self) -> "MatrixPoly2":
        """Restriction to ``t = 0`` (a pure-``x`` polynomial)."""
        return MatrixPoly2({e: c for e, c in self.terms.items() if e[1] == 0}, self.shape)

    # -- evaluation -------------------------------------------------------
    def eval(self, x, t=0.0) -> np.ndarray:
        """Evaluate at ``(x, t)``; array arguments broadcast to ``(..., rows, cols)``."""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        bshape = np.broadcast(x, t).shape
        out = np.zeros(bshape + self.shape, dtype=np.complex128)
        if not self.terms:
            return out
        px = np.stack([x ** k for k in range(self.degx + 1)])
        pt = np.stack([t ** k for k in range(self.degt + 1)])
        for (i, j), c in self.terms.items():
            w = np.broadcast_to(px[i] * pt[j], bshape)
            out = out + w[..., None, None] * c
        return out

    __call__ = eval

    def allclose(self, other: "MatrixPoly2", atol: float = 0.0) -> bool:
        diff = self - other
        return diff.max_coeff_norm() <= atol

    def __repr__(self):
        return f"{type(self).__name__}(shape={self.shape}, nterms={len(self.terms)}, deg=({self.degx},{self.degt}))"


class ScalarPoly2(MatrixPoly2):
    """Scalar polynomial in ``(x, t)``, stored as a 1x1 :class:`MatrixPoly2`."""

    __slots__ = ()

    def __init__(self, terms, shape=(1, 1)):
        if tuple(shape) != (1, 1):
            raise ShapeMismatch("ScalarPoly2 is always 1x1")
        super().__init__({e: np.reshape(c, (1, 1)) for e, c in terms.items()}, (1, 1))

    @classmethod
    def from_matrix_poly(cls, p: MatrixPoly2) -> "ScalarPoly2":
        if p.shape != (1, 1):
            raise ShapeMismatch(f"expected a 1x1 polynomial, got {p.shape}")
        return cls(p.terms)

    def scalar_terms(self) -> Dict[Exponent, complex]:
        return {e: complex(c[0, 0]) for e, c in self.terms.items()}

    def eval(self, x, t=0.0):
        return super().eval(x, t)[..., 0, 0]

    __call__ = eval

    def __mul__(self, other):
        if isinstance(other, ScalarPoly2):
            return ScalarPoly2.from_matrix_poly(MatrixPoly2.__matmul__(self, other))
        if isinstance(other, MatrixPoly2):
            # scalar times matrix polynomial
            out: Dict[Exponent, np.ndarray] = {}
            for (i1, j1), a in self.terms.items():
                for (i2, j2), b in other.terms.items():
                    e = (i1 + i2, j1 + j2)
                    out[e] = out[e] + a[0, 0] * b if e in out else a[0, 0] * b
            return MatrixPoly2(out, other.shape)
        return ScalarPoly2({e: other * c for e, c in self.terms.items()})

    def __rmul__(self, other):
        return self.__mul__(other)

    def __add__(self, other):
        if not isinstance(other, MatrixPoly2):
            other = ScalarPoly2({(0, 0): other})
        return ScalarPoly2.from_matrix_poly(MatrixPoly2._combine(self, other, 1.0))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, MatrixPoly2):
            other = ScalarPoly2({(0, 0): other})
        return ScalarPoly2.from_matrix_poly(MatrixPoly2._combine(self, other, -1.0))

    def __neg__(self):
        return ScalarPoly2({e: -c for e, c in self.terms.items()})


def _check_nilpotent(a: np.ndarray, rtol: float = NILPOTENT_RTOL) -> None:
    n = a.shape[0]
    an = np.linalg.matrix_power(a, n)
    bound = rtol * max(1.0, fro(a) ** n)
    if fro(an) > bound:
        raise NotNilpotent(f"||A^{n}|| = {fro(an):.3e} exceeds {bound:.3e}")


def is_nilpotent(a, rtol: float = NILPOTENT_RTOL) -> bool:
    try:
        _check_nilpotent(np.asarray(a, dtype=np.complex128), rtol)
    except NotNilpotent:
        return False
    return True


def nilpotent_exp_poly(a, c: complex, variable: str = "x") -> MatrixPoly2:
    """Polynomial form of ``exp(c * A * x)`` for nilpotent ``A``.

    The exponential series terminates after ``n`` terms, so the returned
    polynomial ``sum_k (cA)^k x^k / k!`` is the exponential itself.

    Parameters
    ----------
    a : (n, n) array_like
        Nilpotent matrix; ``||A^n|| <= 1e-12 * max(1, ||A||^n)`` is required.
    c : complex
        Scalar multiplier.
    variable : {"x", "t"}
        Which variable the polynomial is written in.

    Raises
    ------
    NotNilpotent
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if a.shape[0] != a.shape[1]:
        raise ShapeMismatch(f"A must be square, got {a.shape}")
    _check_nilpotent(a)
    n = a.shape[0]
    ca = c * a
    power = np.eye(n, dtype=np.complex128)
    terms = {}
    for k in range(n):
        e = (k, 0) if variable == "x" else (0, k)
        terms[e] = power / math.factorial(k)
        power = power @ ca
    return MatrixPoly2(terms, (n, n))


# -- determinant and adjugate --------------------------------------------

def _cofactor_det(entries, rows, cols, memo):
    key = (rows, cols)
    if key in memo:
        return memo[key]
    if len(rows) == 1:
        res = entries[rows[0]][cols[0]]
    else:
        res = ScalarPoly2({})
        r0, rest = rows[0], rows[1:]
        for pos, c in enumerate(cols):
            e = entries[r0][c]
            if e.is_zero():
                continue
            minor = _cofactor_det(entries, rest, cols[:pos] + cols[pos + 1:], memo)
            term = e * minor
            res = res + term if pos % 2 == 0 else res - term
    memo[key] = res
    return res


def _cofactor_det_adj(p: MatrixPoly2):
    n = p.rows
    entries = [[p.entry(r, c) for c in range(n)] for r in range(n)]
    memo: dict = {}
    idx = tuple(range(n))
    det = _cofactor_det(entries, idx, idx, memo)
    adj_terms: Dict[Exponent, np.ndarray] = {}
    if n == 1:
        return det, MatrixPoly2.identity(1)
    for i, j in product(range(n), range(n)):
        # adj[j, i] = (-1)^(i+j) * det(minor without row i, column j)
        minor = _cofactor_det(entries, idx[:i] + idx[i + 1:], idx[:j] + idx[j + 1:], memo)
        sign = -1.0 if (i + j) % 2 else 1.0
        for e, c in minor.terms.items():
            acc = adj_terms.setdefault(e, np.zeros((n, n), dtype=np.complex128))
            acc[j, i] += sign * c[0, 0]
    return det, MatrixPoly2(adj_terms, (n, n))


def _berkowitz_charpoly(p: MatrixPoly2):
    """Coefficients ``[1, q_{n-1}, ..., q_0]`` of ``det(lambda I - P)``, division free."""
    n = p.rows
    vec = [ScalarPoly2({(0, 0): 1.0})]
    for r in range(n):
        a_rr = p.entry(r, r)
        if r == 0:
            col = [ScalarPoly2({(0, 0): 1.0}), -a_rr]
        else:
            sub = MatrixPoly2({e: c[:r, :r] for e, c in p.terms.items()}, (r, r))
            row = MatrixPoly2({e: c[r:r + 1, :r] for e, c in p.terms.items()}, (1, r))
            colv = MatrixPoly2({e: c[:r, r:r + 1] for e, c in p.terms.items()}, (r, 1))
            col = [ScalarPoly2({(0, 0): 1.0}), -a_rr]
            w = colv
            for _ in range(r):
                col.append(-ScalarPoly2.from_matrix_poly(row @ w))
                w = sub @ w
        # Toeplitz (r+2) x (r+1) lower-triangular product with vec
        new = []
        for i in range(r + 2):
            acc = ScalarPoly2({})
            for j in range(min(i, r) + 1):
                if i - j < len(col):
                    acc = acc + col[i - j] * vec[j]
            new.append(acc)
        vec = new
    return vec


def _berkowitz_det_adj(p: MatrixPoly2):
    n = p.rows
    q = _berkowitz_charpoly(p)  # q[k] multiplies lambda^(n-k)
    det = q[n] if n % 2 == 0 else -q[n]
    # Cayley-Hamilton: adj(P) = (-1)^(n+1) (P^{n-1} + q_1 P^{n-2} + ... + q_{n-1} I)
    acc = MatrixPoly2.identity(n)
    for k in range(1, n):
        acc = (p @ acc) + q[k] * MatrixPoly2.identity(n)
    adj = acc if (n + 1) % 2 == 0 else -acc
    return det, adj


def poly_det_adj(p: MatrixPoly2):
    """Determinant and adjugate of a square matrix polynomial.

    Uses cofactor expansion for ``n <= 4`` and the division-free Berkowitz
    recurrence above that. ``P @ adj == det * I`` holds coefficient-wise.

    Returns
    -------
    det : ScalarPoly2
    adj : MatrixPoly2
    """
    if p.rows != p.cols:
        raise ShapeMismatch(f"determinant needs a square polynomial, got {p.shape}")
    if p.rows <= 4:
        return _cofactor_det_adj(p)
    return _berkowitz_det_adj(p)
