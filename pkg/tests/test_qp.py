import numpy as np
import pytest
import scipy.sparse as sp

from dlcflow.qp import QpInfeasible, QuadProgram, kkt_residuals, solve_qp

from oracles import active_set_qp_oracle, random_qp_instance


def test_clipped_quadratic():
    # minimize (x - 3)^2 subject to x <= 2
    qp = QuadProgram(n=1, P=sp.eye(1) * 2, c=np.array([-6.0]), A_in=sp.csr_matrix([[1.0]]), b_in=np.array([2.0]))
    res = solve_qp(qp)
    assert abs(res.x[0] - 2.0) < 1e-7


def test_equality_symmetry():
    # minimize x^2 + y^2 subject to x + y = 1
    qp = QuadProgram(
        n=2,
        P=sp.eye(2) * 2,
        A_eq=sp.csr_matrix([[1.0, 1.0]]),
        b_eq=np.array([1.0]),
    )
    res = solve_qp(qp)
    assert np.allclose(res.x, [0.5, 0.5], atol=1e-8)


def test_bounds_match_rows():
    rng = np.random.default_rng(7)
    n = 6
    M = rng.normal(size=(n, n))
    P = M @ M.T + n * np.eye(n)
    c = rng.normal(size=n)
    lb = np.full(n, -0.3)
    ub = np.full(n, 0.4)
    as_bounds = solve_qp(QuadProgram(n=n, P=sp.csr_matrix(P), c=c, lb=lb, ub=ub))
    rows = sp.vstack([sp.identity(n), -sp.identity(n)]).tocsr()
    rhs = np.concatenate([ub, -lb])
    as_rows = solve_qp(QuadProgram(n=n, P=sp.csr_matrix(P), c=c, A_in=rows, b_in=rhs))
    assert np.allclose(as_bounds.x, as_rows.x, atol=1e-6)


def test_matches_active_set_oracle_sample():
    rng = np.random.default_rng(42)
    for _ in range(15):
        P, c, A_eq, b_eq, A_in, b_in = random_qp_instance(rng, n_max=12, mi_max=10)
        obj_ref, x_ref = active_set_qp_oracle(P, c, A_eq, b_eq, A_in, b_in)
        qp = QuadProgram(
            n=len(c),
            P=sp.csr_matrix(P),
            c=c,
            A_eq=sp.csr_matrix(A_eq),
            b_eq=b_eq,
            A_in=sp.csr_matrix(A_in),
            b_in=b_in,
        )
        res = solve_qp(qp)
        assert abs(res.objective - obj_ref) < 1e-6 * (1 + abs(obj_ref))
        for key, val in res.residuals.items():
            assert val < 1e-6, (key, val)


def test_tie_presolve_round_trip():
    # x1 free, defined by x1 - 2 x0 = 0; objective only on x0
    qp = QuadProgram(
        n=3,
        P=sp.diags([2.0, 0.0, 2.0]).tocsr(),
        c=np.array([-2.0, 0.0, 0.0]),
        A_eq=sp.csr_matrix(np.array([[-2.0, 1.0, 0.0], [0.0, 1.0, 1.0]])),
        b_eq=np.array([0.0, 3.0]),
        lb=np.array([-np.inf, -np.inf, 0.0]),
        ub=np.array([np.inf, np.inf, 2.5]),
    )
    res = solve_qp(qp)
    # x1 = 2 x0 and x1 + x2 = 3 exactly
    assert abs(res.x[1] - 2 * res.x[0]) < 1e-9
    assert abs(res.x[1] + res.x[2] - 3.0) < 1e-8
    for val in res.residuals.values():
        assert val < 1e-6
    no_pre = solve_qp(qp, presolve=False)
    assert np.allclose(res.x, no_pre.x, atol=1e-6)


def test_infeasible_reports_rows():
    qp = QuadProgram(
        n=1,
        P=sp.eye(1).tocsr(),
        A_in=sp.csr_matrix([[1.0], [-1.0]]),
        b_in=np.array([-1.0, -1.0]),  # x <= -1 and x >= 1
        in_labels=["upper", "lower"],
    )
    with pytest.raises(QpInfeasible):
        solve_qp(qp, max_iter=60)


def test_determinism():
    rng = np.random.default_rng(3)
    P, c, A_eq, b_eq, A_in, b_in = random_qp_instance(rng)
    qp = QuadProgram(
        n=len(c), P=sp.csr_matrix(P), c=c, A_eq=sp.csr_matrix(A_eq), b_eq=b_eq,
        A_in=sp.csr_matrix(A_in), b_in=b_in,
    )
    r1 = solve_qp(qp)
    r2 = solve_qp(qp)
    assert np.array_equal(r1.x, r2.x)
