import numpy as np
import pytest
from cvxopt import matrix, solvers

from semcast import _kernels_py, kernels

solvers.options["show_progress"] = False
solvers.options["abstol"] = solvers.options["reltol"] = solvers.options["feastol"] = 1e-12

BACKENDS = [_kernels_py.solve_qp, kernels.solve_qp]


@pytest.mark.parametrize("solve", BACKENDS)
def test_unconstrained_identity(solve):
    g = np.array([1.0, -2.0, 0.5])
    d, lam, status, _ = solve(np.eye(3), g, np.zeros((0, 3)), np.zeros(0))
    assert status == kernels.QP_OK
    np.testing.assert_allclose(d, -g)


@pytest.mark.parametrize("solve", BACKENDS)
def test_inactive_constraint_leaves_newton_step(solve):
    g = np.array([1.0, 1.0])
    d, lam, status, _ = solve(np.eye(2), g, np.array([[1.0, 0.0]]), np.array([5.0]))
    np.testing.assert_allclose(d, -g)
    assert lam[0] == 0.0


@pytest.mark.parametrize("solve", BACKENDS)
def test_halfspace_projection_hand_solution(solve):
    # min g.d + |d|^2/2  s.t.  d1 + d2 - 1 >= 0 with g = (1, 0):
    # d = -g + lam a, a.d = 1  =>  lam = (1 + a.g)/|a|^2 = 1,  d = (0, 1)
    g = np.array([1.0, 0.0])
    a = np.array([[1.0, 1.0]])
    d, lam, status, _ = solve(np.eye(2), g, a, np.array([-1.0]))
    assert status == kernels.QP_OK
    np.testing.assert_allclose(d, [0.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(lam, [1.0], atol=1e-14)
    np.testing.assert_allclose(d, -g + (1 + g @ a[0]) / (a[0] @ a[0]) * a[0], atol=1e-14)


@pytest.mark.parametrize("solve", BACKENDS)
def test_random_qps_match_interior_point(solve):
    rng = np.random.default_rng(3)
    for _ in range(60):
        n, m = int(rng.integers(2, 12)), int(rng.integers(1, 20))
        M = rng.normal(size=(n, n))
        H = M @ M.T + 0.1 * np.eye(n)
        g = rng.normal(size=n)
        A = rng.normal(size=(m, n))
        x0 = rng.normal(size=n)
        b = -A @ x0 + rng.uniform(0, 1, m)  # x0 strictly feasible
        d, lam, status, _ = solve(H, g, A, b)
        assert status == kernels.QP_OK
        ref = solvers.qp(matrix(H), matrix(g), matrix(-A), matrix(b))
        dref = np.array(ref["x"]).ravel()
        np.testing.assert_allclose(d, dref, atol=1e-7)
        # KKT of the QP itself, to 1e-9
        assert np.abs(H @ d + g - A.T @ lam).max() < 1e-9
        assert (A @ d + b).min() > -1e-9 and lam.min() >= 0
        assert np.abs(lam * (A @ d + b)).max() < 1e-9


@pytest.mark.parametrize("solve", BACKENDS)
def test_infeasible_and_not_spd(solve):
    A = np.array([[1.0], [-1.0]])
    b = np.array([-1.0, -1.0])  # d >= 1 and d <= -1
    assert solve(np.eye(1), np.zeros(1), A, b)[2] == kernels.QP_INFEASIBLE
    assert solve(-np.eye(1), np.zeros(1), A[:1], b[:1])[2] == kernels.QP_NOT_SPD


def test_backends_agree():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n, m = 8, 14
        M = rng.normal(size=(n, n))
        H = M @ M.T + np.eye(n)
        g, A, b = rng.normal(size=n), rng.normal(size=(m, n)), rng.normal(size=m)
        r1, r2 = _kernels_py.solve_qp(H, g, A, b), kernels.solve_qp(H, g, A, b)
        assert r1[2] == r2[2]
        if r1[2] == kernels.QP_OK:
            np.testing.assert_allclose(r1[0], r2[0], atol=1e-12)
