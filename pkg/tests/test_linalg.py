import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nwave_gbdt.errors import ShapeMismatch, SingularMatrix
from nwave_gbdt.linalg import as_cmatrix, cmat_solve, comm, diag_comm, herm


def test_solve_identity_returns_rhs(rng):
    R = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
    assert np.array_equal(cmat_solve(np.eye(3), R), R)


def test_solve_diagonal():
    X = cmat_solve(np.diag([2.0, 4.0]), [[2.0], [4.0]])
    assert np.allclose(X, [[1.0], [1.0]], rtol=0, atol=1e-15)


def test_solve_round_trip(rng):
    L = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)) + 5 * np.eye(5)
    X0 = rng.normal(size=(5, 2)) + 1j * rng.normal(size=(5, 2))
    X, cond = cmat_solve(L, L @ X0, return_cond=True)
    assert np.linalg.norm(X - X0) <= 1e-10 * np.linalg.norm(X0)
    assert cond == pytest.approx(np.linalg.cond(L))


def test_solve_singular_raises_with_condition():
    with pytest.raises(SingularMatrix) as info:
        cmat_solve([[1.0, 2.0], [2.0, 4.0]], [[1.0], [1.0]])
    assert info.value.cond is None or info.value.cond > 1e12


def test_solve_threshold_is_configurable():
    lhs = np.diag([1.0, 1e-7])
    cmat_solve(lhs, np.ones((2, 1)))
    with pytest.raises(SingularMatrix):
        cmat_solve(lhs, np.ones((2, 1)), max_cond=1e6)


@pytest.mark.parametrize("lhs, rhs", [(np.ones((2, 3)), np.ones((2, 1))), (np.eye(2), np.ones((3, 1)))])
def test_solve_shape_errors(lhs, rhs):
    with pytest.raises(ShapeMismatch):
        cmat_solve(lhs, rhs)


def test_as_cmatrix_rejects_non_finite_and_bad_shape():
    with pytest.raises(ValueError):
        as_cmatrix([[1.0, np.nan]])
    with pytest.raises(ShapeMismatch):
        as_cmatrix(np.ones((2, 2)), shape=(3, None))
    assert as_cmatrix(2.0).shape == (1, 1)


def test_diag_comm_matches_commutator(rng):
    d = rng.normal(size=4)
    rho = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert np.allclose(diag_comm(d, rho), comm(np.diag(d), rho), atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_solve_backward_error_property(n, seed):
    r = np.random.default_rng(seed)
    L = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    if np.linalg.cond(L) > 1e8:
        return
    rhs = r.normal(size=(n, 3)) + 1j * r.normal(size=(n, 3))
    X = cmat_solve(L, rhs)
    assert np.linalg.norm(L @ X - rhs) <= 1e-12 * np.linalg.norm(L) * max(1.0, np.linalg.norm(X))
    assert np.allclose(herm(herm(L)), L)
