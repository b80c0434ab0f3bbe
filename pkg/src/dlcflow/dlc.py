"""DLC optimization: problem assembly, cap cutting planes, outer loop, baselines.

One concave QP couples all slots of the horizon: appliance utilities and
generation/PCC cost in the objective, appliance feasible sets, the
linearized DistFlow rows, security boxes, DG reactive bounds, and lazily
added supporting hyperplanes of the feeder-head apparent-power ball.  The
outer loop alternates solving the QP with exact power-flow simulation and
re-linearizes at the simulated state, so convergence is declared on the
*simulated* voltages.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import qp as qpmod
from .appliances import (
    Appliance,
    ApplianceSchedule,
    Critical,
    Deferrable,
    Household,
    Interruptible,
    Schedule,
    Thermostatic,
    check_household_schedule,
    deferrable_weights,
    reactive_ratio,
    temperature_series,
    thermal_response,
    utility,
)
from .distflow import (
    LinearSystem,
    NetworkState,
    OperatingPoint,
    VariableMap,
    format_label,
    linearize,
    nodal_injections,
    register_network_variables,
    security_rows,
)
from .network import DlcEvent, Network, Scenario, to_per_unit
from .powerflow import PowerFlowNotConverged, SimulationResult, simulate_schedule

__all__ = [
    "DlcEvent",
    "DlcInfeasible",
    "ObjectiveSpec",
    "OuterLoopNotConverged",
    "QpProblem",
    "Solution",
    "baseline_conventional_dlc",
    "baseline_wo_dlc",
    "build_problem",
    "pcc_cap_cuts",
    "solve_dlc",
    "solve_qp",
]


class DlcInfeasible(RuntimeError):
    def __init__(self, message: str, active_rows=()):
        self.active_rows = list(active_rows)
        detail = "; ".join(active_rows[:6])
        super().__init__(f"{message}" + (f" (active rows: {detail})" if detail else ""))


class OuterLoopNotConverged(RuntimeError):
    def __init__(self, message: str, solution=None):
        self.solution = solution
        super().__init__(message)


@dataclass(frozen=True)
class ObjectiveSpec:
    """Utility weight and the cost curves charged to the LSE."""

    kappa: float = 1.0

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise ValueError("kappa must be positive")


@dataclass
class PccMap:
    """Affine map from QP variables to the stacked (p_G0; q_G0) 6-vector in MVA."""

    const: np.ndarray  # (6, T)
    cols: list  # per slot: list of (col, 6-vector coefficient)

    def value(self, x: np.ndarray, t: int) -> np.ndarray:
        z = self.const[:, t - 1].copy()
        for col, coef in self.cols[t - 1]:
            z += coef * x[col]
        return z

    def values(self, x: np.ndarray) -> np.ndarray:
        T = self.const.shape[1]
        return np.stack([self.value(x, t) for t in range(1, T + 1)], axis=1)


@dataclass
class QpProblem:
    """Assembled QP plus the bookkeeping needed to interpret its solution."""

    qp: qpmod.QuadProgram
    varmap: VariableMap
    system: LinearSystem
    pcc: PccMap
    net: Network
    households: tuple
    event: Optional[DlcEvent]
    objective_spec: ObjectiveSpec
    includes_network: bool

    def refresh_matrices(self):
        A_eq, b_eq, A_in, b_in = self.system.matrices()
        self.qp.A_eq, self.qp.b_eq = A_eq, b_eq
        self.qp.A_in, self.qp.b_in = A_in, b_in
        self.qp.lb, self.qp.ub = self.system.lb, self.system.ub
        self.qp.eq_labels = [format_label(l) for l in self.system.eq_labels]
        self.qp.in_labels = [format_label(l) for l in self.system.in_labels]


@dataclass
class Solution:
    """Result of one policy solve."""

    schedule: Schedule
    state: Optional[NetworkState]
    sim: Optional[SimulationResult]
    objective: float
    kkt_residuals: dict
    cut_count: int
    outer_iterations: int
    solve_time_s: float
    converged: bool
    policy: str


# ---------------------------------------------------------------------------
# objective and appliance-row assembly


def _appliance_blocks(varmap: VariableMap, households):
    for hh in households:
        for app in hh.appliances:
            if app.is_schedulable:
                n = len(app.work_window)
                varmap.register(("ap", hh.id, app.id), n)
                varmap.register(("aq", hh.id, app.id), n)


def _appliance_rows(system: LinearSystem, households, dt_h: float):
    varmap = system.varmap
    for hh in households:
        for app in hh.appliances:
            if not app.is_schedulable:
                continue
            slots = app.window_slots
            p_off = varmap.offset(("ap", hh.id, app.id))
            q_off = varmap.offset(("aq", hh.id, app.id))
            kappa_eta = reactive_ratio(app.eta)
            for k, t in enumerate(slots):
                system.tighten_bounds(p_off + k, app.p_min_kw[t - 1], app.p_max_kw[t - 1])
                system.add_eq(("tie", hh.id, app.id, t), [q_off + k, p_off + k], [1.0, -kappa_eta], 0.0)
            kind = app.kind
            if isinstance(kind, Deferrable):
                cols = [p_off + k for k in range(len(slots))]
                coefs = [dt_h] * len(slots)
                if kind.e_min_kwh == kind.e_max_kwh:
                    system.add_eq(("energy_lo", hh.id, app.id), cols, coefs, kind.e_min_kwh)
                else:
                    system.add_ineq(("energy_hi", hh.id, app.id), cols, coefs, kind.e_max_kwh)
                    system.add_ineq(
                        ("energy_lo", hh.id, app.id), cols, [-c for c in coefs], -kind.e_min_kwh
                    )
            if isinstance(kind, Thermostatic):
                free, gain = thermal_response(kind, app.horizon)
                for t in range(1, app.horizon + 1):
                    cols, coefs = [], []
                    for k, tau in enumerate(slots):
                        g = gain[t - 1, tau - 1]
                        if g != 0.0:
                            cols.append(p_off + k)
                            coefs.append(g)
                    lo = kind.t_min_f[t - 1] - free[t - 1]
                    hi = kind.t_max_f[t - 1] - free[t - 1]
                    if cols:
                        system.add_ineq(("band_hi", hh.id, app.id, t), cols, coefs, hi)
                        system.add_ineq(("band_lo", hh.id, app.id, t), cols, [-c for c in coefs], -lo)
                    elif lo > 0.0 or hi < 0.0:
                        raise DlcInfeasible(
                            f"household {hh.id}/{app.id}: free temperature response leaves "
                            f"the comfort band at slot {t} with no control authority"
                        )


def _objective_terms(varmap: VariableMap, households, net: Network, spec: ObjectiveSpec, dt_h: float):
    """COO Hessian triplets, linear vector and constant for -kappa*U + cost."""
    rows, cols, vals = [], [], []
    c = np.zeros(varmap.size)
    const = 0.0
    kappa = spec.kappa
    for hh in households:
        for app in hh.appliances:
            if not app.is_schedulable:
                continue
            slots = app.window_slots
            p_off = varmap.offset(("ap", hh.id, app.id))
            b = kappa * app.b_utility
            kind = app.kind
            if isinstance(kind, Interruptible):
                pref = np.array([kind.p_pref_kw[t - 1] for t in slots])
                for k in range(len(slots)):
                    rows.append(p_off + k)
                    cols.append(p_off + k)
                    vals.append(2.0 * b)
                c[p_off : p_off + len(slots)] += -2.0 * b * pref
                const += b * float(pref @ pref)
            elif isinstance(kind, Deferrable):
                pref = np.array([kind.p_pref_kw[t - 1] for t in slots])
                w = deferrable_weights(app)
                for k in range(len(slots)):
                    rows.append(p_off + k)
                    cols.append(p_off + k)
                    vals.append(2.0 * b * w[k])
                c[p_off : p_off + len(slots)] += -2.0 * b * w * pref - b * dt_h
                const += b * float(w @ (pref * pref))
            elif isinstance(kind, Thermostatic):
                free, gain = thermal_response(kind, app.horizon)
                W = gain[:, [t - 1 for t in slots]]
                H = 2.0 * b * (W.T @ W)
                dev = free - kind.t_conf_f
                for a_idx in range(len(slots)):
                    for b_idx in range(len(slots)):
                        if H[a_idx, b_idx] != 0.0:
                            rows.append(p_off + a_idx)
                            cols.append(p_off + b_idx)
                            vals.append(H[a_idx, b_idx])
                c[p_off : p_off + len(slots)] += 2.0 * b * (W.T @ dev)
                const += b * float(dev @ dev)
    # DG active generation is fixed at its maximum: cost is a constant
    mva = net.s_base_kva / 1000.0
    for g in net.dg_units:
        if g.cost is not None:
            const += g.cost.evaluate(g.p_max * mva)
    return rows, cols, vals, c, const


def _pcc_cost_terms(varmap, net: Network, pcc_map: PccMap, system, rows, cols, vals, c):
    """Quadratic PCC energy cost on the total active feeder-head draw (MW).

    With the network model the total is a 3-term sum of root flows and the
    square is expanded directly; the aggregate model sums hundreds of
    appliance columns, so an auxiliary total variable keeps the Hessian
    sparse (one equality row per slot, diagonal quadratic).
    """
    const = 0.0
    a, b_lin, c_const = net.pcc_cost.a, net.pcc_cost.b, net.pcc_cost.c
    T = net.horizon
    use_aux = varmap.has(("upcc",))
    for t in range(1, T + 1):
        terms = [(col, coef[:3].sum()) for col, coef in pcc_map.cols[t - 1] if np.any(coef[:3])]
        base = float(pcc_map.const[:3, t - 1].sum())
        at, bt = float(a[t - 1]), float(b_lin[t - 1])
        if use_aux:
            u_col = varmap.offset(("upcc",)) + (t - 1)
            row_cols = [u_col] + [col for col, _ in terms]
            row_coefs = [1.0] + [-coef for _, coef in terms]
            system.add_eq(("pcc_total", t), row_cols, row_coefs, base)
            rows.append(u_col)
            cols.append(u_col)
            vals.append(2.0 * at)
            c[u_col] += bt
            const += float(c_const[t - 1])
        else:
            for col_i, coef_i in terms:
                c[col_i] += bt * coef_i + 2.0 * at * base * coef_i
                for col_j, coef_j in terms:
                    if at != 0.0:
                        rows.append(col_i)
                        cols.append(col_j)
                        vals.append(2.0 * at * coef_i * coef_j)
            const += at * base * base + bt * base + float(c_const[t - 1])
    return const


# ---------------------------------------------------------------------------
# PCC expressions for the two network models


def _pcc_map_network(varmap: VariableMap, net: Network) -> PccMap:
    from .distflow import flow_col

    T = net.horizon
    mva = net.s_base_kva / 1000.0
    cols = [[] for _ in range(T)]
    root_lines = [li for li, line in enumerate(net.lines) if line.from_bus == 0]
    for t in range(1, T + 1):
        for li in root_lines:
            for ph in range(3):
                e = np.zeros(6)
                e[ph] = mva
                cols[t - 1].append((flow_col(varmap, "fp", li, ph, t), e))
                e = np.zeros(6)
                e[3 + ph] = mva
                cols[t - 1].append((flow_col(varmap, "fq", li, ph, t), e))
    return PccMap(const=np.zeros((6, T)), cols=cols)


def _pcc_map_aggregate(varmap: VariableMap, net: Network, households) -> PccMap:
    """Lossless per-phase aggregate of load minus generation (conventional model)."""
    T = net.horizon
    const = np.zeros((6, T))
    cols = [[] for _ in range(T)]
    kw_to_mva = 1.0 / 1000.0
    mva = net.s_base_kva / 1000.0
    for bus in net.buses:
        const[:3] += bus.critical_p * mva
        const[3:] += bus.critical_q * mva
    for g in net.dg_units:
        const[g.phase] -= g.p_max * mva
        for t in range(1, T + 1):
            e = np.zeros(6)
            e[3 + g.phase] = -kw_to_mva  # qg variables are in kvar
            cols[t - 1].append((varmap.offset(("qg", g.id)) + (t - 1), e))
    for hh in households:
        for app in hh.appliances:
            if not app.is_schedulable:
                continue
            p_off = varmap.offset(("ap", hh.id, app.id))
            q_off = varmap.offset(("aq", hh.id, app.id))
            for k, t in enumerate(app.window_slots):
                e = np.zeros(6)
                e[hh.phase] = kw_to_mva
                cols[t - 1].append((p_off + k, e))
                e = np.zeros(6)
                e[3 + hh.phase] = kw_to_mva
                cols[t - 1].append((q_off + k, e))
    return PccMap(const=const, cols=cols)


# ---------------------------------------------------------------------------
# problem assembly


def build_problem(
    scenario: Scenario,
    objective: ObjectiveSpec = ObjectiveSpec(),
    op_point: Optional[OperatingPoint] = None,
    include_network: bool = True,
) -> QpProblem:
    """One QP over the full horizon; the PCC cap enters later as cuts."""
    net = to_per_unit(scenario.network)
    households = scenario.households
    T = net.horizon
    if op_point is None:
        op_point = OperatingPoint.flat(len(net.lines), len(net.buses), T)
    op_point.validate()

    varmap = VariableMap()
    _appliance_blocks(varmap, households)
    for g in net.dg_units:
        varmap.register(("qg", g.id), T)
    if include_network:
        register_network_variables(net, varmap)
    else:
        varmap.register(("upcc",), T)

    system = LinearSystem(varmap)
    _appliance_rows(system, households, net.dt_h)
    for g in net.dg_units:
        off = varmap.offset(("qg", g.id))
        for t in range(T):
            system.tighten_bounds(off + t, g.q_min * net.s_base_kva, g.q_max * net.s_base_kva)
    if include_network:
        for t in range(1, T + 1):
            injections = nodal_injections(net, households, varmap, t, net.s_base_kva)
            linearize(op_point, net, t, injections, system)
            security_rows(net, t, system)
        pcc_map = _pcc_map_network(varmap, net)
    else:
        pcc_map = _pcc_map_aggregate(varmap, net, households)

    rows, cols, vals, c, const = _objective_terms(varmap, households, net, objective, net.dt_h)
    const += _pcc_cost_terms(varmap, net, pcc_map, system, rows, cols, vals, c)
    P = sp.coo_matrix((vals, (rows, cols)), shape=(varmap.size, varmap.size)).tocsr()
    quad = qpmod.QuadProgram(n=varmap.size, P=P, c=c, obj_const=const)
    prob = QpProblem(
        qp=quad,
        varmap=varmap,
        system=system,
        pcc=pcc_map,
        net=net,
        households=households,
        event=scenario.event,
        objective_spec=objective,
        includes_network=include_network,
    )
    prob.refresh_matrices()
    return prob


def expected_variable_count(scenario: Scenario, include_network: bool = True) -> int:
    n = 0
    for hh in scenario.households:
        for app in hh.appliances:
            if app.is_schedulable:
                n += 2 * len(app.work_window)
    net = scenario.network
    n += len(net.dg_units) * net.horizon
    if include_network:
        n += (3 * len(net.buses) + 6 * len(net.lines)) * net.horizon
    return n


# ---------------------------------------------------------------------------
# cutting planes for the apparent-power cap


def pcc_cap_cuts(pcc_values: np.ndarray, event: DlcEvent, tol: float = 1e-6):
    """Supporting hyperplanes separating cap violations.

    ``pcc_values`` is the stacked (6, T) feeder-head vector in MVA.  For
    every event slot whose norm exceeds the cap by more than ``tol``,
    returns (slot, unit direction); an empty list means satisfied.
    """
    cuts = []
    for t in sorted(event.window):
        z = pcc_values[:, t - 1]
        norm = float(np.linalg.norm(z))
        if norm > event.s_cap_mva + tol:
            cuts.append((t, z / norm))
    return cuts


def _add_cut_rows(prob: QpProblem, cuts, counter):
    for t, d in cuts:
        k = counter[t] = counter.get(t, 0) + 1
        cols, coefs = [], []
        for col, coef in prob.pcc.cols[t - 1]:
            w = float(d @ coef)
            if w != 0.0:
                cols.append(col)
                coefs.append(w)
        rhs = prob.event.s_cap_mva - float(d @ prob.pcc.const[:, t - 1])
        label = ("cap_cut", t, k) if prob.includes_network else ("agg_cut", t, k)
        prob.system.add_ineq(label, cols, coefs, rhs)


# ---------------------------------------------------------------------------
# solution extraction


def _extract_schedule(prob: QpProblem, x: np.ndarray) -> Schedule:
    """Schedule from a QP iterate with exact reconstruction of tied values."""
    T = prob.net.horizon
    p_kw, q_kvar, t_in = {}, {}, {}
    for hh in prob.households:
        for app in hh.appliances:
            if not app.is_schedulable:
                continue
            slots = app.window_slots
            off = prob.varmap.offset(("ap", hh.id, app.id))
            p = np.zeros(T)
            for k, t in enumerate(slots):
                p[t - 1] = min(max(x[off + k], app.p_min_kw[t - 1]), app.p_max_kw[t - 1])
            key = (hh.id, app.id)
            p_kw[key] = p
            q_kvar[key] = p * reactive_ratio(app.eta)
            if isinstance(app.kind, Thermostatic):
                t_in[key] = temperature_series(app.kind, p)
    dg_q = {}
    for g in prob.net.dg_units:
        off = prob.varmap.offset(("qg", g.id))
        dg_q[g.id] = x[off : off + T].copy()
    return Schedule(appliance_p_kw=p_kw, appliance_q_kvar=q_kvar, dg_q_kvar=dg_q, t_in_f=t_in)


def _extract_state(prob: QpProblem, x: np.ndarray) -> Optional[NetworkState]:
    if not prob.includes_network:
        return None
    net = prob.net
    T = net.horizon
    B, L = len(net.buses), len(net.lines)
    v = np.zeros((B, 3, T))
    P = np.zeros((L, 3, T))
    Q = np.zeros((L, 3, T))
    for i, bus in enumerate(net.buses):
        off = prob.varmap.offset(("v", bus.id))
        v[i] = x[off : off + 3 * T].reshape(3, T)
    for li in range(L):
        off = prob.varmap.offset(("fp", li))
        P[li] = x[off : off + 3 * T].reshape(3, T)
        off = prob.varmap.offset(("fq", li))
        Q[li] = x[off : off + 3 * T].reshape(3, T)
    return NetworkState(v_sq=v, p_flow=P, q_flow=Q)


def _verify_schedule(prob: QpProblem, schedule: Schedule, tol: float = 1e-6):
    bad = []
    for hh in prob.households:
        scheds = {
            (hh.id, a.id): schedule.appliance(hh.id, a.id) for a in hh.appliances if a.is_schedulable
        }
        bad.extend(check_household_schedule(hh, scheds, prob.net.dt_h, tol))
    if bad:
        raise RuntimeError("schedule failed the independent appliance re-check: " + "; ".join(bad[:5]))


def solve_qp(prob: QpProblem, tol: float = 1e-9, max_iter: int = 100) -> qpmod.QpResult:
    """Solve the assembled QP, mapping solver errors to DLC diagnostics."""
    try:
        return qpmod.solve_qp(prob.qp, tol=tol, max_iter=max_iter)
    except qpmod.QpInfeasible as exc:
        raise DlcInfeasible("optimization infeasible", exc.active_rows) from exc


def _schedule_objective(prob: QpProblem, schedule: Schedule, sim: Optional[SimulationResult]) -> float:
    """kappa * total utility - LSE cost, evaluated on the realized schedule."""
    total_u = 0.0
    for hh in prob.households:
        for app in hh.appliances:
            if app.is_schedulable:
                total_u += utility(app, schedule.appliance(hh.id, app.id))
    return prob.objective_spec.kappa * total_u - lse_cost(prob.net, sim)


def lse_cost(net: Network, sim: Optional[SimulationResult]) -> float:
    """Generation cost of DGs plus cost of power drawn at the PCC (from exact PF)."""
    mva = net.s_base_kva / 1000.0
    cost = 0.0
    for g in net.dg_units:
        if g.cost is not None:
            cost += g.cost.evaluate(g.p_max * mva)
    if sim is not None:
        pcc_mw = sim.pcc_p.sum(axis=0) * mva
        cost += net.pcc_cost.evaluate(pcc_mw)
    return cost


# ---------------------------------------------------------------------------
# policies


def solve_dlc(
    scenario: Scenario,
    objective: ObjectiveSpec = ObjectiveSpec(),
    outer_tol: float = 1e-4,
    max_outer: int = 10,
    max_cuts_per_t: int = 50,
    qp_tol: float = 1e-9,
    raise_on_stall: bool = False,
) -> Solution:
    """Proposed policy: network-constrained DLC with sequential re-linearization.

    The outer loop terminates when the exact-simulation squared voltages
    move less than ``outer_tol`` between iterations.  If ``max_outer`` is
    exhausted the best iterate is returned flagged (``converged=False``),
    or :class:`OuterLoopNotConverged` is raised when ``raise_on_stall``.
    """
    t_start = time.perf_counter()
    net = to_per_unit(scenario.network)
    op = OperatingPoint.flat(len(net.lines), len(net.buses), net.horizon)
    cuts_acc = []
    counter = {}
    prev_v = None
    sim = None
    res = None
    prob = None
    converged = False
    outer = 0
    for outer in range(1, max_outer + 1):
        prob = build_problem(scenario, objective, op_point=op, include_network=True)
        _add_cut_rows(prob, cuts_acc, {})
        counter = {t: sum(1 for ct, _ in cuts_acc if ct == t) for t, _ in cuts_acc}
        prob.refresh_matrices()
        while True:
            res = solve_qp(prob, tol=qp_tol)
            new_cuts = pcc_cap_cuts(prob.pcc.values(res.x), scenario.event)
            new_cuts = [
                (t, d) for t, d in new_cuts if counter.get(t, 0) < max_cuts_per_t
            ]
            if not new_cuts:
                break
            cuts_acc.extend(new_cuts)
            _add_cut_rows(prob, new_cuts, counter)
            prob.refresh_matrices()
        schedule = _extract_schedule(prob, res.x)
        sim = simulate_schedule(net, scenario.households, schedule)
        if prev_v is not None and float(np.max(np.abs(sim.v_sq - prev_v))) <= outer_tol:
            converged = True
            break
        prev_v = sim.v_sq
        op = OperatingPoint(p_flow=sim.p_flow, q_flow=sim.q_flow, v_sq=sim.v_sq)
    _verify_schedule(prob, schedule)
    solution = Solution(
        schedule=schedule,
        state=_extract_state(prob, res.x),
        sim=sim,
        objective=_schedule_objective(prob, schedule, sim),
        kkt_residuals=res.residuals,
        cut_count=len(cuts_acc),
        outer_iterations=outer,
        solve_time_s=time.perf_counter() - t_start,
        converged=converged,
        policy="proposed",
    )
    if not converged and raise_on_stall:
        raise OuterLoopNotConverged(
            f"simulated voltages still moving after {max_outer} outer iterations", solution
        )
    return solution


def baseline_conventional_dlc(
    scenario: Scenario,
    objective: ObjectiveSpec = ObjectiveSpec(),
    max_cuts_per_t: int = 50,
    qp_tol: float = 1e-9,
) -> Solution:
    """Conventional DLC: aggregate supply-demand cap, no network model."""
    t_start = time.perf_counter()
    net = to_per_unit(scenario.network)
    prob = build_problem(scenario, objective, include_network=False)
    counter = {}
    cut_count = 0
    while True:
        res = solve_qp(prob, tol=qp_tol)
        new_cuts = pcc_cap_cuts(prob.pcc.values(res.x), scenario.event)
        new_cuts = [(t, d) for t, d in new_cuts if counter.get(t, 0) < max_cuts_per_t]
        if not new_cuts:
            break
        cut_count += len(new_cuts)
        _add_cut_rows(prob, new_cuts, counter)
        prob.refresh_matrices()
    schedule = _extract_schedule(prob, res.x)
    _verify_schedule(prob, schedule)
    sim = simulate_schedule(net, scenario.households, schedule)
    return Solution(
        schedule=schedule,
        state=None,
        sim=sim,
        objective=_schedule_objective(prob, schedule, sim),
        kkt_residuals=res.residuals,
        cut_count=cut_count,
        outer_iterations=0,
        solve_time_s=time.perf_counter() - t_start,
        converged=True,
        policy="conventional",
    )


def baseline_wo_dlc(scenario: Scenario) -> Schedule:
    """No-DLC behavior: comfort tracking, max-power deferrables, preferred draws."""
    net = scenario.network
    T = net.horizon
    p_kw, q_kvar, t_in = {}, {}, {}
    for hh in scenario.households:
        for app in hh.appliances:
            if not app.is_schedulable:
                continue
            kind = app.kind
            p = np.zeros(T)
            if isinstance(kind, Interruptible):
                p = kind.p_pref_kw.copy()
            elif isinstance(kind, Deferrable):
                remaining = kind.e_max_kwh
                for t in app.window_slots:
                    if remaining <= 0.0:
                        break
                    take = min(app.p_max_kw[t - 1], remaining / net.dt_h)
                    p[t - 1] = take
                    remaining -= take * net.dt_h
            elif isinstance(kind, Thermostatic):
                prev = kind.t_init_f
                for t in range(1, T + 1):
                    drift = prev + kind.alpha * (kind.t_out_f[t - 1] - prev)
                    want = (kind.t_conf_f[t - 1] - drift) / kind.beta_f_per_kw
                    p[t - 1] = min(max(want, app.p_min_kw[t - 1]), app.p_max_kw[t - 1])
                    prev = drift + kind.beta_f_per_kw * p[t - 1]
            key = (hh.id, app.id)
            p_kw[key] = p
            q_kvar[key] = p * reactive_ratio(app.eta)
            if isinstance(kind, Thermostatic):
                t_in[key] = temperature_series(kind, p)
    dg_q = {g.id: np.zeros(T) for g in net.dg_units}
    return Schedule(appliance_p_kw=p_kw, appliance_q_kvar=q_kvar, dg_q_kvar=dg_q, t_in_f=t_in)


def evaluate_wo_dlc(scenario: Scenario, objective: ObjectiveSpec = ObjectiveSpec()) -> Solution:
    """Simulate and score the W/O DLC baseline like any other policy."""
    t_start = time.perf_counter()
    net = to_per_unit(scenario.network)
    schedule = baseline_wo_dlc(scenario)
    sim = simulate_schedule(net, scenario.households, schedule)
    total_u = 0.0
    for hh in scenario.households:
        for app in hh.appliances:
            if app.is_schedulable:
                total_u += utility(app, schedule.appliance(hh.id, app.id))
    return Solution(
        schedule=schedule,
        state=None,
        sim=sim,
        objective=objective.kappa * total_u - lse_cost(net, sim),
        kkt_residuals={},
        cut_count=0,
        outer_iterations=0,
        solve_time_s=time.perf_counter() - t_start,
        converged=True,
        policy="wo-dlc",
    )
