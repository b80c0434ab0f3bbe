"""Embedded convex-QP solver: primal-dual interior point, Mehrotra steps.

Solves  minimize 1/2 x'Px + c'x  subject to  A_eq x = b_eq,
A_in x <= b_in and lb <= x <= ub, with P positive semidefinite.  The KKT
system is reduced to a sparse quasi-definite augmented form and factorized
with SuperLU each iteration.  A light presolve eliminates free variables
that are defined by two-term equality rows (e.g. fixed-ratio ties), which
roughly halves appliance-scheduling problems.

Everything is deterministic: identical inputs produce identical iterates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


class QpError(Exception):
    pass


class QpInfeasible(QpError):
    """No feasible point found; carries the apparently-active row labels."""

    def __init__(self, message: str, active_rows=()):
        self.active_rows = list(active_rows)
        super().__init__(message)


class QpMaxIterations(QpError):
    def __init__(self, message: str, residuals=None):
        self.residuals = residuals
        super().__init__(message)


@dataclass
class QuadProgram:
    """Data of one convex QP.  Matrices may be sparse or dense; None = empty."""

    n: int
    P: Optional[sp.spmatrix] = None
    c: Optional[np.ndarray] = None
    A_eq: Optional[sp.spmatrix] = None
    b_eq: Optional[np.ndarray] = None
    A_in: Optional[sp.spmatrix] = None
    b_in: Optional[np.ndarray] = None
    lb: Optional[np.ndarray] = None
    ub: Optional[np.ndarray] = None
    obj_const: float = 0.0
    eq_labels: list = field(default_factory=list)
    in_labels: list = field(default_factory=list)

    def canonical(self):
        n = self.n
        P = sp.csr_matrix((n, n)) if self.P is None else sp.csr_matrix(self.P)
        c = np.zeros(n) if self.c is None else np.asarray(self.c, dtype=float)
        A_eq = sp.csr_matrix((0, n)) if self.A_eq is None else sp.csr_matrix(self.A_eq)
        b_eq = np.zeros(A_eq.shape[0]) if self.b_eq is None else np.asarray(self.b_eq, dtype=float)
        A_in = sp.csr_matrix((0, n)) if self.A_in is None else sp.csr_matrix(self.A_in)
        b_in = np.zeros(A_in.shape[0]) if self.b_in is None else np.asarray(self.b_in, dtype=float)
        lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float)
        ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        return P, c, A_eq, b_eq, A_in, b_in, lb, ub

    def objective(self, x: np.ndarray) -> float:
        P, c = self.canonical()[:2]
        return 0.5 * float(x @ (P @ x)) + float(c @ x) + self.obj_const


@dataclass
class QpResult:
    x: np.ndarray
    y_eq: np.ndarray
    z_in: np.ndarray
    z_lb: np.ndarray
    z_ub: np.ndarray
    objective: float
    iterations: int
    residuals: dict


def kkt_residuals(qp: QuadProgram, res: QpResult) -> dict:
    """Scaled KKT residuals of a candidate solution on the original problem."""
    P, c, A_eq, b_eq, A_in, b_in, lb, ub = qp.canonical()
    x = res.x
    grad = P @ x + c
    stat = grad + A_eq.T @ res.y_eq + A_in.T @ res.z_in - res.z_lb + res.z_ub
    stat_scale = 1.0 + max(np.abs(grad).max(initial=0.0), np.abs(c).max(initial=0.0))
    primal = 0.0
    pr_scale = 1.0 + max(
        np.abs(b_eq).max(initial=0.0),
        np.abs(b_in).max(initial=0.0),
        np.abs(x).max(initial=0.0),
    )
    if A_eq.shape[0]:
        primal = max(primal, np.abs(A_eq @ x - b_eq).max())
    if A_in.shape[0]:
        primal = max(primal, np.maximum(A_in @ x - b_in, 0.0).max())
    finite_lb = np.isfinite(lb)
    finite_ub = np.isfinite(ub)
    if finite_lb.any():
        primal = max(primal, np.maximum(lb[finite_lb] - x[finite_lb], 0.0).max())
    if finite_ub.any():
        primal = max(primal, np.maximum(x[finite_ub] - ub[finite_ub], 0.0).max())
    comp = 0.0
    if A_in.shape[0]:
        comp = max(comp, np.abs(res.z_in * (b_in - A_in @ x)).max(initial=0.0))
    if finite_lb.any():
        comp = max(comp, np.abs(res.z_lb[finite_lb] * (x - lb)[finite_lb]).max(initial=0.0))
    if finite_ub.any():
        comp = max(comp, np.abs(res.z_ub[finite_ub] * (ub - x)[finite_ub]).max(initial=0.0))
    return {
        "primal": primal / pr_scale,
        "stationarity": np.abs(stat).max(initial=0.0) / stat_scale,
        "complementarity": comp / pr_scale / stat_scale,
    }


# ---------------------------------------------------------------------------
# presolve: eliminate free variables pinned by two-term equality rows


def _presolve_ties(P, c, A_eq, b_eq, A_in, lb, ub):
    """Find substitutions x_j = (b_i - a_ik x_k) / a_ij.

    Variable j must be free (no finite bounds), absent from the objective
    and from every inequality row; row i must have exactly two nonzeros.
    Returns (subs, used_rows) where subs maps j -> (i, a_ij, k, a_ik, b_i).
    """
    me = A_eq.shape[0]
    if me == 0:
        return {}, set()
    A_csr = A_eq.tocsr()
    nnz_per_row = np.diff(A_csr.indptr)
    in_ineq = np.zeros(A_eq.shape[1], dtype=bool)
    if A_in is not None and A_in.shape[0]:
        in_ineq[np.unique(sp.csr_matrix(A_in).indices)] = True
    P_csc = sp.csc_matrix(P)
    obj_col = np.diff(P_csc.indptr) > 0
    free = ~np.isfinite(lb) & ~np.isfinite(ub) & ~in_ineq & ~obj_col & (c == 0.0)
    subs, used_rows = {}, set()
    eliminated, pinned = set(), set()
    for i in np.flatnonzero(nnz_per_row == 2):
        start, end = A_csr.indptr[i], A_csr.indptr[i + 1]
        cols = A_csr.indices[start:end]
        vals = A_csr.data[start:end]
        for pick in (0, 1):
            j, k = int(cols[pick]), int(cols[1 - pick])
            aj, ak = vals[pick], vals[1 - pick]
            if free[j] and j not in eliminated and j not in pinned and k not in eliminated and abs(aj) > 1e-9:
                subs[j] = (i, aj, k, ak, b_eq[i])
                used_rows.add(int(i))
                eliminated.add(j)
                pinned.add(k)
                break
    return subs, used_rows


def _apply_presolve(P, c, A_eq, b_eq, A_in, b_in, lb, ub, subs, used_rows):
    n = A_eq.shape[1]
    keep_cols = np.ones(n, dtype=bool)
    for j in subs:
        keep_cols[j] = False
    keep_rows = np.ones(A_eq.shape[0], dtype=bool)
    for i in used_rows:
        keep_rows[i] = False
    # fold x_j = (b_i - a_ik x_k)/a_ij into remaining equality rows
    A = A_eq.tocsc()
    extra = []
    b_new = b_eq.copy()
    for j, (i, aj, k, ak, bi) in subs.items():
        col = A.getcol(j).tocoo()
        for r, a_rj in zip(col.row, col.data):
            if r == i:
                continue
            b_new[r] -= a_rj * bi / aj
            extra.append((r, k, -a_rj * ak / aj))
    if extra:
        rows, cols, vals = zip(*extra)
        patch = sp.coo_matrix((vals, (rows, cols)), shape=A_eq.shape)
        A_eq = (A_eq + patch).tocsr()
    A_eq_red = A_eq[keep_rows][:, keep_cols].tocsr()
    b_eq_red = b_new[keep_rows]
    A_in_red = A_in[:, keep_cols].tocsr() if A_in.shape[0] else sp.csr_matrix((0, int(keep_cols.sum())))
    P_red = sp.csr_matrix(P)[keep_cols][:, keep_cols].tocsr()
    return (
        P_red,
        c[keep_cols],
        A_eq_red,
        b_eq_red,
        A_in_red,
        b_in,
        lb[keep_cols],
        ub[keep_cols],
        keep_cols,
        keep_rows,
    )


# ---------------------------------------------------------------------------
# interior point core


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not neg.any():
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def solve_qp(qp: QuadProgram, tol: float = 1e-8, max_iter: int = 100, presolve: bool = True) -> QpResult:
    """KKT-certified minimizer of a convex QP.

    Raises :class:`QpInfeasible` when the primal residual cannot be driven
    down, :class:`QpMaxIterations` on iteration exhaustion.
    """
    P0, c0, Aeq0, beq0, Ain0, bin0, lb0, ub0 = qp.canonical()
    n0 = qp.n

    subs, used_rows = ({}, set())
    if presolve and Aeq0.shape[0]:
        subs, used_rows = _presolve_ties(P0, c0, Aeq0, beq0, Ain0, lb0, ub0)
    if subs:
        (P, c, A_eq, b_eq, A_in, b_in, lb, ub, keep_cols, keep_rows) = _apply_presolve(
            P0, c0, Aeq0, beq0, Ain0, bin0, lb0, ub0, subs, used_rows
        )
    else:
        P, c, A_eq, b_eq, A_in, b_in, lb, ub = P0, c0, Aeq0, beq0, Ain0, bin0, lb0, ub0
        keep_cols = np.ones(n0, dtype=bool)
        keep_rows = np.ones(Aeq0.shape[0], dtype=bool)

    x, y, z, zl, zu, iters, scaled_resid = _ip_core(
        P, c, A_eq, b_eq, A_in, b_in, lb, ub, tol, max_iter, qp
    )

    # undo presolve: recover eliminated variables and their defining-row duals
    x_full = np.zeros(n0)
    x_full[keep_cols] = x
    y_full = np.zeros(Aeq0.shape[0])
    y_full[keep_rows] = y
    zl_full = np.zeros(n0)
    zu_full = np.zeros(n0)
    zl_full[keep_cols] = zl
    zu_full[keep_cols] = zu
    if subs:
        for j, (i, aj, k, ak, bi) in subs.items():
            x_full[j] = (bi - ak * x_full[k]) / aj
        Aeq_csc = Aeq0.tocsc()
        for j, (i, aj, k, ak, bi) in subs.items():
            col = Aeq_csc.getcol(j).tocoo()
            acc = 0.0
            for r, a_rj in zip(col.row, col.data):
                if r != i:
                    acc += a_rj * y_full[r]
            y_full[i] = -acc / aj

    result = QpResult(
        x=x_full,
        y_eq=y_full,
        z_in=z,
        z_lb=zl_full,
        z_ub=zu_full,
        objective=qp.objective(x_full),
        iterations=iters,
        residuals=scaled_resid,
    )
    result.residuals = kkt_residuals(qp, result)
    return result


def _ip_core(P, c, A_eq, b_eq, A_in, b_in, lb, ub, tol, max_iter, qp):
    n = P.shape[0]
    me, mi = A_eq.shape[0], A_in.shape[0]

    # row equilibration to unit inf-norm; duals are rescaled on the way out
    def row_scales(A, b):
        if A.shape[0] == 0:
            return np.ones(0)
        mags = np.abs(A).max(axis=1).toarray().ravel()
        mags[mags == 0.0] = 1.0
        return 1.0 / mags

    d_eq = row_scales(A_eq, b_eq)
    d_in = row_scales(A_in, b_in)
    A_eq = sp.diags(d_eq) @ A_eq if me else A_eq
    b_eq = d_eq * b_eq
    A_in = sp.diags(d_in) @ A_in if mi else A_in
    b_in = d_in * b_in
    obj_scale = 1.0 / max(
        1.0, np.abs(c).max(initial=0.0), np.abs(P.data).max(initial=0.0) if P.nnz else 0.0
    )
    P = (P * obj_scale).tocsr()
    c = c * obj_scale

    F = np.isfinite(lb)
    G = np.isfinite(ub)
    nF, nG = int(F.sum()), int(G.sum())

    x = np.zeros(n)
    both = F & G
    x[both] = 0.5 * (lb[both] + ub[both])
    x[F & ~G] = lb[F & ~G] + 1.0
    x[G & ~F] = ub[G & ~F] - 1.0
    y = np.zeros(me)
    s = np.maximum(b_in - A_in @ x, 1.0) if mi else np.zeros(0)
    z = np.ones(mi)
    u = np.maximum(x[F] - lb[F], 1.0)
    w = np.maximum(ub[G] - x[G], 1.0)
    zl = np.ones(nF)
    zu = np.ones(nG)

    n_comp = mi + nF + nG
    A_in_csr = A_in.tocsr()
    A_eq_csr = A_eq.tocsr()

    best_primal = np.inf
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        rd = P @ x + c + (A_eq_csr.T @ y if me else 0.0) + (A_in_csr.T @ z if mi else 0.0)
        if nF:
            rd -= np.bincount(np.flatnonzero(F), weights=zl, minlength=n)
        if nG:
            rd += np.bincount(np.flatnonzero(G), weights=zu, minlength=n)
        rpe = A_eq_csr @ x - b_eq if me else np.zeros(0)
        rpi = A_in_csr @ x + s - b_in if mi else np.zeros(0)
        rlb = (x[F] - lb[F]) - u
        rub = (ub[G] - x[G]) - w

        mu = 0.0
        if n_comp:
            mu = (s @ z + u @ zl + w @ zu) / n_comp

        stat_scale = 1.0 + max(np.abs(c).max(initial=0.0), np.abs(P @ x).max(initial=0.0))
        pr_scale = 1.0 + max(
            np.abs(b_eq).max(initial=0.0), np.abs(b_in).max(initial=0.0), np.abs(x).max(initial=0.0)
        )
        res_pr = max(
            np.abs(rpe).max(initial=0.0),
            np.abs(rpi).max(initial=0.0),
            np.abs(rlb).max(initial=0.0),
            np.abs(rub).max(initial=0.0),
        ) / pr_scale
        res_du = np.abs(rd).max(initial=0.0) / stat_scale
        res_mu = mu / stat_scale
        if res_pr <= tol and res_du <= tol and res_mu <= tol:
            break

        if res_pr < best_primal * 0.9:
            best_primal = res_pr
            stall = 0
        else:
            stall += 1
        dual_mag = max(
            np.abs(y).max(initial=0.0), np.abs(z).max(initial=0.0),
            np.abs(zl).max(initial=0.0), np.abs(zu).max(initial=0.0),
        )
        if (res_pr > 1e-6 and dual_mag > 1e10) or (res_pr > 1e-5 and stall > 30):
            raise QpInfeasible(
                f"primal residual stalled at {res_pr:.2e} with diverging duals",
                active_rows=_active_row_labels(qp, mi, s, z, d_in),
            )

        d_bounds = np.zeros(n)
        if nF:
            d_bounds[F] += zl / u
        if nG:
            d_bounds[G] += zu / w
        H = P + sp.diags(d_bounds)
        if mi:
            H = H + A_in_csr.T @ sp.diags(z / s) @ A_in_csr

        def assemble_rhs(cs, cu, cw):
            rhs_x = -rd.copy()
            if mi:
                a_z = (cs / s - z) + (z / s) * rpi
                rhs_x -= A_in_csr.T @ a_z
            if nF:
                a_l = (cu / u - zl) - (zl / u) * rlb
                rhs_x += np.bincount(np.flatnonzero(F), weights=a_l, minlength=n)
            if nG:
                a_u = (cw / w - zu) - (zu / w) * rub
                rhs_x -= np.bincount(np.flatnonzero(G), weights=a_u, minlength=n)
            return rhs_x

        def recover(dx, cs, cu, cw):
            ds = -rpi - (A_in_csr @ dx) if mi else np.zeros(0)
            dz = (cs / s - z) + (z / s) * (rpi + A_in_csr @ dx) if mi else np.zeros(0)
            du = dx[F] + rlb
            dzl = (cu / u - zl) - (zl / u) * du if nF else np.zeros(0)
            dw = rub - dx[G]
            dzu = (cw / w - zu) - (zu / w) * dw if nG else np.zeros(0)
            return ds, dz, du, dzl, dw, dzu

        reg = 1e-9 * (1.0 + stat_scale)
        try:
            lu = _factor_augmented(H, A_eq_csr, reg)
        except RuntimeError as exc:
            raise QpError(f"KKT factorization failed: {exc}") from exc

        zeros = (np.zeros(mi), np.zeros(nF), np.zeros(nG))
        rhs_x = assemble_rhs(*zeros)
        dx_aff, dy_aff = _solve_with(lu, rhs_x, -rpe, n, me)
        ds_a, dz_a, du_a, dzl_a, dw_a, dzu_a = recover(dx_aff, *zeros)

        alpha_p = min(_max_step(s, ds_a), _max_step(u, du_a), _max_step(w, dw_a))
        alpha_d = min(_max_step(z, dz_a), _max_step(zl, dzl_a), _max_step(zu, dzu_a))
        if n_comp:
            mu_aff = (
                (s + alpha_p * ds_a) @ (z + alpha_d * dz_a)
                + (u + alpha_p * du_a) @ (zl + alpha_d * dzl_a)
                + (w + alpha_p * dw_a) @ (zu + alpha_d * dzu_a)
            ) / n_comp
            sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
            sigma = min(max(sigma, 0.0), 1.0)
        else:
            sigma = 0.0

        cs = sigma * mu - ds_a * dz_a if mi else np.zeros(0)
        cu = sigma * mu - du_a * dzl_a if nF else np.zeros(0)
        cw = sigma * mu - dw_a * dzu_a if nG else np.zeros(0)
        rhs_x = assemble_rhs(cs, cu, cw)
        dx, dy = _solve_with(lu, rhs_x, -rpe, n, me)
        ds, dz, du, dzl, dw, dzu = recover(dx, cs, cu, cw)

        if n_comp == 0:
            alpha_p = alpha_d = 1.0  # equality-constrained QP: plain Newton
        else:
            damp = 0.99995 if mu < 1e-4 else 0.9995
            alpha_p = min(damp * min(_max_step(s, ds), _max_step(u, du), _max_step(w, dw)), 1.0)
            alpha_d = min(damp * min(_max_step(z, dz), _max_step(zl, dzl), _max_step(zu, dzu)), 1.0)

        x = x + alpha_p * dx
        s = s + alpha_p * ds
        u = u + alpha_p * du
        w = w + alpha_p * dw
        y = y + alpha_d * dy
        z = z + alpha_d * dz
        zl = zl + alpha_d * dzl
        zu = zu + alpha_d * dzu
    else:
        resid = {"primal": res_pr, "stationarity": res_du, "complementarity": res_mu}
        if res_pr > 100 * tol:
            raise QpInfeasible(
                f"no feasible point after {max_iter} iterations (primal residual {res_pr:.2e})",
                active_rows=_active_row_labels(qp, mi, s, z, d_in),
            )
        raise QpMaxIterations(f"not converged in {max_iter} iterations", resid)

    scaled = {"primal": res_pr, "stationarity": res_du, "complementarity": res_mu}
    # undo row equilibration and objective scaling on the duals
    y_out = (d_eq * y) / obj_scale if me else y
    z_out = (d_in * z) / obj_scale if mi else z
    zl_out = np.zeros(n)
    zu_out = np.zeros(n)
    zl_out[F] = zl / obj_scale
    zu_out[G] = zu / obj_scale
    return x, y_out, z_out, zl_out, zu_out, it, scaled


def _factor_augmented(H, A_eq, reg):
    n = H.shape[0]
    me = A_eq.shape[0]
    if me:
        K = sp.bmat(
            [[H + reg * sp.identity(n), A_eq.T], [A_eq, -reg * sp.identity(me)]],
            format="csc",
        )
    else:
        K = (H + reg * sp.identity(n)).tocsc()
    return splu(K)


def _solve_with(lu, rhs_x, rhs_y, n, me):
    rhs = np.concatenate([rhs_x, rhs_y]) if me else rhs_x
    sol = lu.solve(rhs)
    if me:
        return sol[:n], sol[n:]
    return sol, np.zeros(0)


def _active_row_labels(qp: QuadProgram, mi, s, z, d_in):
    """Inequality rows that look binding at the final iterate."""
    labels = []
    if mi and qp.in_labels:
        order = np.argsort(s / np.maximum(z, 1e-30))
        for idx in order[: min(10, mi)]:
            if idx < len(qp.in_labels):
                labels.append(str(qp.in_labels[idx]))
    return labels
