"""Exact three-phase power flow on the radial feeder (backward/forward sweep).

Used to validate schedules against the true nonlinear physics and to
refresh the operating point of the linearized model.  Loads are constant
power at each slot; the slack bus holds the reference voltage with the
standard 0/-120/+120 degree phase displacement.  All slots of a horizon
are swept simultaneously (they are independent), which also makes results
order-independent by construction.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import Network, validate_topology

SLACK_PHASORS = np.array([1.0, cmath.exp(-2j * cmath.pi / 3), cmath.exp(2j * cmath.pi / 3)])


class PowerFlowNotConverged(RuntimeError):
    def __init__(self, iterations: int, residual: float, slot: Optional[int] = None):
        self.iterations = iterations
        self.residual = residual
        self.slot = slot
        at = f" at slot {slot}" if slot is not None else ""
        super().__init__(
            f"power flow not converged{at}: residual {residual:.3e} after {iterations} iterations"
        )


@dataclass
class ComplexVoltageState:
    """Converged complex phase voltages and line currents for one slot (pu)."""

    v_bus: np.ndarray  # (B, 3) complex
    i_line: np.ndarray  # (L, 3) complex
    iterations: int
    residual: float


@dataclass
class InjectionSpec:
    """Constant-power net withdrawal per bus, phase and slot (pu, complex)."""

    s_inj: np.ndarray  # (B, 3, T)


@dataclass
class SimulationResult:
    """Exact-physics evaluation of one schedule over the horizon."""

    v_sq: np.ndarray  # (B, 3, T) pu^2
    p_flow: np.ndarray  # (L, 3, T) pu, sending end
    q_flow: np.ndarray  # (L, 3, T)
    pcc_p: np.ndarray  # (3, T) pu
    pcc_q: np.ndarray  # (3, T)
    pcc_s_mva: np.ndarray  # (T,)
    vmin_kv: np.ndarray  # (3, T) minimum over buses, per phase
    iterations: int


def _structure(net: Network):
    order = validate_topology(net)
    index = {bid: i for i, bid in enumerate(sorted(b.id for b in net.buses))}
    idx_of = {b.id: i for i, b in enumerate(net.buses)}
    parent_line = {}
    child_lines = {b.id: [] for b in net.buses}
    for li, line in enumerate(net.lines):
        parent_line[line.to_bus] = li
        child_lines[line.from_bus].append(li)
    return order, idx_of, parent_line, child_lines


def phase_mask(net: Network) -> np.ndarray:
    mask = np.zeros((len(net.buses), 3), dtype=bool)
    for i, b in enumerate(net.buses):
        for p in b.phases_present:
            mask[i, p] = True
    return mask


def _sweep(net: Network, s_inj: np.ndarray, max_iter: int = 100, tol: float = 1e-8):
    """Backward/forward sweep on (B, 3, K) injections; flat start."""
    if not net.per_unit:
        raise ValueError("power flow expects a per-unit network")
    order, idx_of, parent_line, child_lines = _structure(net)
    B = len(net.buses)
    L = len(net.lines)
    K = s_inj.shape[2]
    mask = phase_mask(net)
    v0 = SLACK_PHASORS[None, :, None]

    V = np.broadcast_to(v0, (B, 3, K)).copy()
    J = np.zeros((L, 3, K), dtype=complex)
    z_mats = [net.lines[li].z for li in range(L)]
    rev = order[::-1]
    residual = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        # backward: aggregate load currents toward the root
        I_bus = np.conj(s_inj / V)
        I_bus[~mask] = 0.0
        for bid in rev:
            if bid == 0:
                continue
            li = parent_line[bid]
            acc = I_bus[idx_of[bid]].copy()
            for ck in child_lines[bid]:
                acc = acc + J[ck]
            J[li] = acc
        # forward: propagate voltage drops from the root
        for bid in order:
            if bid == 0:
                continue
            li = parent_line[bid]
            line = net.lines[li]
            drop = np.einsum("ij,jk->ik", z_mats[li], J[li])
            V[idx_of[bid]] = V[idx_of[line.from_bus]] - drop
        # mismatch between specified and implied constant-power draw
        s_calc = V * np.conj(I_bus)
        residual = float(np.max(np.abs((s_calc - s_inj)[mask])) if mask.any() else 0.0)
        # also require current balance at every bus given the new voltages
        I_new = np.conj(s_inj / V)
        I_new[~mask] = 0.0
        delta = float(np.max(np.abs(I_new - I_bus)))
        if residual <= tol and delta <= tol:
            return V, J, it, residual
    raise PowerFlowNotConverged(it, residual)


def solve_pf(net: Network, inj: InjectionSpec, t: int, max_iter: int = 100, tol: float = 1e-8) -> ComplexVoltageState:
    """Exact power flow for one slot; raises :class:`PowerFlowNotConverged`."""
    s_slot = inj.s_inj[:, :, t - 1 : t]
    try:
        V, J, it, residual = _sweep(net, s_slot, max_iter=max_iter, tol=tol)
    except PowerFlowNotConverged as exc:
        raise PowerFlowNotConverged(exc.iterations, exc.residual, slot=t) from None
    return ComplexVoltageState(v_bus=V[:, :, 0], i_line=J[:, :, 0], iterations=it, residual=residual)


def state_to_distflow(state: ComplexVoltageState, net: Network):
    """Project a converged state onto DistFlow quantities (v, P, Q) at one slot."""
    v_sq = np.abs(state.v_bus) ** 2
    idx_of = {b.id: i for i, b in enumerate(net.buses)}
    L = len(net.lines)
    P = np.zeros((L, 3))
    Q = np.zeros((L, 3))
    for li, line in enumerate(net.lines):
        s_send = state.v_bus[idx_of[line.from_bus]] * np.conj(state.i_line[li])
        P[li] = np.real(s_send)
        Q[li] = np.imag(s_send)
    return v_sq, P, Q


def build_injections(net: Network, households, schedule) -> InjectionSpec:
    """Assemble complex per-unit net withdrawals from a schedule (Eqs. of net power).

    ``schedule`` maps appliance dispatch in kW/kvar and DG reactive in
    kvar; critical load and maximum DG active output enter as constants.
    """
    if not net.per_unit:
        raise ValueError("build_injections expects a per-unit network")
    B = len(net.buses)
    T = net.horizon
    sb = net.s_base_kva
    s = np.zeros((B, 3, T), dtype=complex)
    idx_of = {b.id: i for i, b in enumerate(net.buses)}
    for i, bus in enumerate(net.buses):
        s[i] += bus.critical_p + 1j * bus.critical_q
    for g in net.dg_units:
        qg = np.asarray(schedule.dg_q_kvar[g.id], dtype=float) / sb
        s[idx_of[g.bus], g.phase] -= g.p_max + 1j * qg
    hh_by_id = {}
    for hh in households:
        for app in hh.appliances:
            if not app.is_schedulable:
                continue
            p = np.asarray(schedule.appliance_p_kw[(hh.id, app.id)], dtype=float) / sb
            q = np.asarray(schedule.appliance_q_kvar[(hh.id, app.id)], dtype=float) / sb
            s[idx_of[hh.bus], hh.phase] += p + 1j * q
    return InjectionSpec(s_inj=s)


def simulate_schedule(net: Network, households, schedule, max_iter: int = 100, tol: float = 1e-8) -> SimulationResult:
    """Run the exact power flow for every slot of a schedule.

    Returns per-slot DistFlow-space states, the feeder-head apparent power
    ||(p_G0; q_G0)||_2 in MVA, and the per-phase minimum voltage profile.
    """
    inj = build_injections(net, households, schedule)
    try:
        V, J, it, residual = _sweep(net, inj.s_inj, max_iter=max_iter, tol=tol)
    except PowerFlowNotConverged as exc:
        # identify the first offending slot for the error message
        bad = _first_bad_slot(net, inj.s_inj, max_iter, tol)
        raise PowerFlowNotConverged(exc.iterations, exc.residual, slot=bad) from None
    B = len(net.buses)
    L = len(net.lines)
    T = net.horizon
    idx_of = {b.id: i for i, b in enumerate(net.buses)}
    v_sq = np.abs(V) ** 2
    P = np.zeros((L, 3, T))
    Q = np.zeros((L, 3, T))
    for li, line in enumerate(net.lines):
        s_send = V[idx_of[line.from_bus]] * np.conj(J[li])
        P[li] = np.real(s_send)
        Q[li] = np.imag(s_send)
    root_lines = [li for li, line in enumerate(net.lines) if line.from_bus == 0]
    pcc_p = np.sum(P[root_lines], axis=0)
    pcc_q = np.sum(Q[root_lines], axis=0)
    s_base_mva = net.s_base_kva / 1000.0
    pcc_s = np.sqrt(np.sum(pcc_p ** 2, axis=0) + np.sum(pcc_q ** 2, axis=0)) * s_base_mva
    mask = phase_mask(net)
    vmag = np.abs(V)
    vmag_masked = np.where(mask[:, :, None], vmag, np.inf)
    vmin_kv = vmag_masked.min(axis=0) * net.v_ref_kv
    return SimulationResult(
        v_sq=v_sq,
        p_flow=P,
        q_flow=Q,
        pcc_p=pcc_p,
        pcc_q=pcc_q,
        pcc_s_mva=pcc_s,
        vmin_kv=vmin_kv,
        iterations=it,
    )


def _first_bad_slot(net, s_inj, max_iter, tol):
    for t in range(1, s_inj.shape[2] + 1):
        try:
            _sweep(net, s_inj[:, :, t - 1 : t], max_iter=max_iter, tol=tol)
        except PowerFlowNotConverged:
            return t
    return None


def conservation_residual(net: Network, households, schedule) -> float:
    """Max |PCC injection - (loads - DG + line losses)| over slots (pu)."""
    inj = build_injections(net, households, schedule)
    V, J, _, _ = _sweep(net, inj.s_inj)
    idx_of = {b.id: i for i, b in enumerate(net.buses)}
    total_load = inj.s_inj.sum(axis=(0, 1))
    losses = np.zeros(inj.s_inj.shape[2], dtype=complex)
    for li, line in enumerate(net.lines):
        s_send = (V[idx_of[line.from_bus]] * np.conj(J[li])).sum(axis=0)
        s_recv = (V[idx_of[line.to_bus]] * np.conj(J[li])).sum(axis=0)
        losses += s_send - s_recv
    root_lines = [li for li, line in enumerate(net.lines) if line.from_bus == 0]
    pcc = np.zeros(inj.s_inj.shape[2], dtype=complex)
    for li in root_lines:
        pcc += (V[idx_of[0]] * np.conj(J[li])).sum(axis=0)
    return float(np.max(np.abs(pcc - total_load - losses)))
