"""Independent brute-force / fixed-point oracles used only by the tests.

These deliberately re-derive results through different algorithms than the
package under test: active-set enumeration instead of interior point, and
an admittance-matrix Gauss iteration instead of the backward/forward sweep.
"""

import numpy as np


def active_set_qp_oracle(P, c, A_eq, b_eq, A_in, b_in, tol=1e-9):
    """Global minimum of a strictly convex QP by enumerating active sets.

    Any KKT point of a strictly convex QP is its unique global minimizer,
    so the best objective over all sign- and feasibility-consistent active
    sets is the optimum.  Exponential in the number of inequalities; only
    for small instances.
    """
    n = len(c)
    me = 0 if A_eq is None else A_eq.shape[0]
    mi = A_in.shape[0]
    best = None
    for mask in range(2 ** mi):
        act = [i for i in range(mi) if (mask >> i) & 1]
        rows = []
        rhs = []
        if me:
            rows.append(A_eq)
            rhs.append(b_eq)
        if act:
            rows.append(A_in[act])
            rhs.append(b_in[act])
        if rows:
            A = np.vstack(rows)
            b = np.concatenate(rhs)
        else:
            A = np.zeros((0, n))
            b = np.zeros(0)
        m = A.shape[0]
        kkt = np.block([[P, A.T], [A, np.zeros((m, m))]])
        rhs_full = np.concatenate([-c, b])
        try:
            sol = np.linalg.solve(kkt, rhs_full)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(sol)) or np.linalg.norm(kkt @ sol - rhs_full) > 1e-7:
            continue
        x = sol[:n]
        lam = sol[n + me:]
        if np.any(A_in @ x > b_in + 1e-8):
            continue
        if np.any(lam < -1e-8):
            continue
        obj = 0.5 * x @ P @ x + c @ x
        if best is None or obj < best[0]:
            best = (obj, x)
    if best is None:
        raise RuntimeError("oracle found no KKT point; instance may be infeasible")
    return best


def random_qp_instance(rng, n_max=20, mi_max=15):
    """A strictly convex QP with a known strictly feasible interior point."""
    n = int(rng.integers(2, n_max + 1))
    mi = int(rng.integers(1, mi_max + 1))
    me = int(rng.integers(0, min(n - 1, 5) + 1))
    M = rng.normal(size=(n, n))
    P = M @ M.T + n * np.eye(n)
    c = rng.normal(size=n)
    x0 = rng.normal(size=n)
    A_eq = rng.normal(size=(me, n))
    b_eq = A_eq @ x0
    A_in = rng.normal(size=(mi, n))
    b_in = A_in @ x0 + rng.uniform(0.1, 2.0, size=mi)
    return P, c, A_eq, b_eq, A_in, b_in


def ybus_gauss_power_flow(lines, n_buses, v_slack, s_load, tol=1e-12, max_iter=5000):
    """Three-phase power flow by Gauss iteration on the bus admittance matrix.

    ``lines`` is a list of (from, to, z_matrix, phase_mask) with complex
    3x3 impedances; ``s_load`` is (n_buses, 3) complex constant-power draw.
    Missing phases must be masked out.  Returns complex voltages (n_buses, 3).
    """
    dim = 3 * n_buses
    Y = np.zeros((dim, dim), dtype=complex)
    active = np.zeros(dim, dtype=bool)
    active[0:3] = True
    for f, t, z, mask in lines:
        idx = np.flatnonzero(mask)
        zs = z[np.ix_(idx, idx)]
        ys = np.linalg.inv(zs)
        fi = [3 * f + i for i in idx]
        ti = [3 * t + i for i in idx]
        Y[np.ix_(fi, fi)] += ys
        Y[np.ix_(ti, ti)] += ys
        Y[np.ix_(fi, ti)] -= ys
        Y[np.ix_(ti, fi)] -= ys
        active[fi] = True
        active[ti] = True
    slack = np.zeros(dim, dtype=bool)
    slack[0:3] = True
    red = active & ~slack
    Yll = Y[np.ix_(red, red)]
    Yls = Y[np.ix_(red, slack)]
    v0 = v_slack.reshape(-1)
    v = np.tile(v_slack, n_buses).reshape(dim)[red]
    s = s_load.reshape(dim)[red]
    Yll_inv = np.linalg.inv(Yll)
    for _ in range(max_iter):
        i_inj = np.conj(s / v)  # load draws current, sign folded below
        v_new = Yll_inv @ (-i_inj - Yls @ v0)
        if np.max(np.abs(v_new - v)) < tol:
            v = v_new
            break
        v = v_new
    out = np.tile(v_slack, n_buses).reshape(n_buses, 3).astype(complex)
    flat = out.reshape(dim)
    flat[red] = v
    return flat.reshape(n_buses, 3)
