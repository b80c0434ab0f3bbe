"""Linearized three-phase DistFlow constraint system.

Builds sparse equality/inequality rows for branch flow balance with
first-order loss corrections, voltage-drop rows, the slack-bus anchor, and
security boxes, all around a supplied operating point.  The nonlinear loss
and voltage-correction terms are evaluated element-wise per phase with the
line impedance scaled by the local squared-voltage operating value, then
Taylor-expanded to first order in the branch flows (voltages frozen at the
operating point inside those terms).

Mutual (off-diagonal) impedance enters the voltage-drop rows through
effective phase-rotated matrices: with nearly balanced phase angles the
drop seen by phase A from a current on phase B is governed by
``z_ab * exp(-j 2 pi / 3)``, not by ``z_ab`` itself.  Using the rotated
real/imaginary parts keeps the linear model within a percent of the exact
sweep solution; raw mutual resistances would overstate the drop several
times over.  Loss terms use only the impedance diagonal.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .network import Network

ROT = cmath.exp(-2j * cmath.pi / 3.0)
# effective-impedance phase rotation for nearly balanced systems
GAMMA = np.array(
    [
        [1.0, ROT, ROT.conjugate()],
        [ROT.conjugate(), 1.0, ROT],
        [ROT, ROT.conjugate(), 1.0],
    ]
)


@dataclass
class OperatingPoint:
    """Expansion point for the loss/voltage-correction terms (per-unit)."""

    p_flow: np.ndarray  # (L, 3, T)
    q_flow: np.ndarray  # (L, 3, T)
    v_sq: np.ndarray  # (B, 3, T), squared voltage magnitudes

    @classmethod
    def flat(cls, n_lines: int, n_buses: int, horizon: int, v_ref_sq: float = 1.0):
        return cls(
            p_flow=np.zeros((n_lines, 3, horizon)),
            q_flow=np.zeros((n_lines, 3, horizon)),
            v_sq=np.full((n_buses, 3, horizon), v_ref_sq),
        )

    def validate(self):
        if np.any(self.v_sq <= 0.0):
            raise ValueError("operating-point squared voltages must be positive")
        if not (np.all(np.isfinite(self.p_flow)) and np.all(np.isfinite(self.q_flow))):
            raise ValueError("operating-point flows must be finite")


@dataclass
class NetworkState:
    """Per-slot network quantities (per-unit): squared voltages and flows."""

    v_sq: np.ndarray  # (B, 3, T)
    p_flow: np.ndarray  # (L, 3, T)
    q_flow: np.ndarray  # (L, 3, T)
    p_inj: Optional[np.ndarray] = None  # (B, 3, T) net withdrawal
    q_inj: Optional[np.ndarray] = None


class VariableMap:
    """Registry of contiguous variable blocks with named lookup."""

    def __init__(self):
        self._blocks = {}
        self.size = 0

    def register(self, key, length: int) -> int:
        if key in self._blocks:
            raise KeyError(f"variable block {key!r} registered twice")
        offset = self.size
        self._blocks[key] = (offset, length)
        self.size += length
        return offset

    def block(self, key):
        return self._blocks[key]

    def offset(self, key) -> int:
        return self._blocks[key][0]

    def has(self, key) -> bool:
        return key in self._blocks

    def items(self):
        return self._blocks.items()


class LinearSystem:
    """Sparse equality/inequality rows plus variable bounds over a VariableMap."""

    def __init__(self, varmap: VariableMap):
        self.varmap = varmap
        n = varmap.size
        self.lb = np.full(n, -np.inf)
        self.ub = np.full(n, np.inf)
        self._eq = ([], [], [], [])  # row idx, col idx, coef, rhs
        self._in = ([], [], [], [])
        self.eq_labels = []
        self.in_labels = []

    @property
    def n_eq(self) -> int:
        return len(self.eq_labels)

    @property
    def n_in(self) -> int:
        return len(self.in_labels)

    def add_eq(self, label, cols, coefs, rhs: float):
        rows, cidx, data, b = self._eq
        r = len(self.eq_labels)
        rows.extend([r] * len(cols))
        cidx.extend(cols)
        data.extend(coefs)
        b.append(rhs)
        self.eq_labels.append(label)

    def add_ineq(self, label, cols, coefs, rhs: float):
        rows, cidx, data, b = self._in
        r = len(self.in_labels)
        rows.extend([r] * len(cols))
        cidx.extend(cols)
        data.extend(coefs)
        b.append(rhs)
        self.in_labels.append(label)

    def tighten_bounds(self, col: int, lo: float, hi: float):
        self.lb[col] = max(self.lb[col], lo)
        self.ub[col] = min(self.ub[col], hi)

    def pin(self, label, col: int):
        self.add_eq(label, [col], [1.0], 0.0)

    def matrices(self):
        n = self.varmap.size
        rows, cols, data, b = self._eq
        A_eq = sp.coo_matrix((data, (rows, cols)), shape=(len(b), n)).tocsr()
        b_eq = np.asarray(b, dtype=float)
        rows, cols, data, b = self._in
        A_in = sp.coo_matrix((data, (rows, cols)), shape=(len(b), n)).tocsr()
        b_in = np.asarray(b, dtype=float)
        return A_eq, b_eq, A_in, b_in


def format_label(label) -> str:
    """Human-readable row id, e.g. voltage_lower[bus=7,phase=c,t=22]."""
    if isinstance(label, str):
        return label
    kind, *rest = label
    keys = {
        "flow_p": ("bus", "phase", "t"),
        "flow_q": ("bus", "phase", "t"),
        "voltage": ("bus", "phase", "t"),
        "slack": ("phase", "t"),
        "pin": ("name",),
        "tie": ("household", "appliance", "t"),
        "energy_lo": ("household", "appliance"),
        "energy_hi": ("household", "appliance"),
        "band_lo": ("household", "appliance", "t"),
        "band_hi": ("household", "appliance", "t"),
        "cap_cut": ("t", "k"),
        "agg_cut": ("t", "k"),
    }.get(kind)
    phases = "abc"
    parts = []
    if keys is None:
        parts = [repr(v) for v in rest]
    else:
        for key, val in zip(keys, rest):
            if key == "phase" and isinstance(val, (int, np.integer)):
                val = phases[val]
            parts.append(f"{key}={val}")
    return f"{kind}[{','.join(parts)}]"


# ---------------------------------------------------------------------------
# structural helpers


def line_phases(net: Network, line_idx: int) -> list:
    """Conductor phases of a line: the phases present at its child bus."""
    child = net.bus_by_id(net.lines[line_idx].to_bus)
    return list(child.phases_present)


def register_network_variables(net: Network, varmap: VariableMap):
    """Add squared-voltage and branch-flow blocks, phase-major then time."""
    T = net.horizon
    for bus in net.buses:
        varmap.register(("v", bus.id), 3 * T)
    for li in range(len(net.lines)):
        varmap.register(("fp", li), 3 * T)
        varmap.register(("fq", li), 3 * T)


def v_col(varmap: VariableMap, bus_id: int, phase: int, t: int) -> int:
    return varmap.offset(("v", bus_id)) + phase * _horizon(varmap, ("v", bus_id)) + (t - 1)


def _horizon(varmap: VariableMap, key) -> int:
    return varmap.block(key)[1] // 3


def flow_col(varmap: VariableMap, kind: str, line_idx: int, phase: int, t: int) -> int:
    key = (kind, line_idx)
    return varmap.offset(key) + phase * _horizon(varmap, key) + (t - 1)


# ---------------------------------------------------------------------------
# nonlinear terms and their first-order expansion


def loss_terms(op: OperatingPoint, net: Network, line_idx: int, t: int):
    """Numeric (P_loss, Q_loss, dv) three-vectors at the operating point."""
    line = net.lines[line_idx]
    v0 = op.v_sq[_bus_index(net, line.from_bus), :, t - 1]
    if np.any(v0 <= 0.0):
        raise ValueError(f"zero operating voltage at bus {line.from_bus}")
    P = op.p_flow[line_idx, :, t - 1]
    Q = op.q_flow[line_idx, :, t - 1]
    r_hat = np.diag(line.r) / v0
    x_hat = np.diag(line.x) / v0
    p_loss = P * (r_hat * P + x_hat * Q) + Q * (r_hat * Q - x_hat * P)
    q_loss = P * (x_hat * P - r_hat * Q) + Q * (r_hat * P + x_hat * Q)
    z = line.z
    w = z @ ((P - 1j * Q) / v0)
    dv = np.abs(w) ** 2
    return p_loss, q_loss, dv


def loss_gradients(op: OperatingPoint, net: Network, line_idx: int, t: int):
    """Jacobians of the loss/voltage-correction terms in (P, Q).

    Returns (gpp, gpq, gqp, gqq, Gvp, Gvq): the first four are per-phase
    diagonals of the branch-loss Jacobian, the last two are dense 3x3
    Jacobians of the voltage correction.
    """
    line = net.lines[line_idx]
    v0 = op.v_sq[_bus_index(net, line.from_bus), :, t - 1]
    P = op.p_flow[line_idx, :, t - 1]
    Q = op.q_flow[line_idx, :, t - 1]
    r_hat = np.diag(line.r) / v0
    x_hat = np.diag(line.x) / v0
    gpp = 2.0 * r_hat * P
    gpq = 2.0 * r_hat * Q
    gqp = 2.0 * x_hat * P
    gqq = 2.0 * x_hat * Q
    z = line.z
    w = z @ ((P - 1j * Q) / v0)
    Gvp = 2.0 * np.real(z * np.conj(w)[:, None]) / v0[None, :]
    Gvq = 2.0 * np.imag(z * np.conj(w)[:, None]) / v0[None, :]
    return gpp, gpq, gqp, gqq, Gvp, Gvq


def _bus_index(net: Network, bus_id: int) -> int:
    for i, b in enumerate(net.buses):
        if b.id == bus_id:
            return i
    raise KeyError(bus_id)


def effective_rx(line) -> tuple:
    """Real/imaginary parts of the phase-rotated impedance matrix."""
    z_eff = GAMMA * line.z
    return np.real(z_eff), np.imag(z_eff)


@dataclass
class InjectionExpr:
    """Affine expression for a bus-phase net withdrawal: const + sum(coef * x)."""

    p_const: float = 0.0
    q_const: float = 0.0
    p_terms: list = field(default_factory=list)  # (col, coef)
    q_terms: list = field(default_factory=list)


def nodal_injections(net: Network, households, varmap: VariableMap, t: int, s_base_kva: float):
    """Injection expressions (Eqs. of net withdrawal) per (bus id, phase) at slot t.

    Critical load enters as a constant, appliance powers as variables
    scaled from kW to per-unit, DG active output as a fixed negative
    constant (maximum-power tracking) and DG reactive as a variable.
    """
    exprs = {}
    dg_by_bus = {g.bus: g for g in net.dg_units}
    hh_by_bus = {}
    for hh in households:
        hh_by_bus.setdefault(hh.bus, []).append(hh)
    scale = 1.0 / s_base_kva
    for bus in net.buses:
        for phase in bus.phases_present:
            e = InjectionExpr(
                p_const=float(bus.critical_p[phase, t - 1]),
                q_const=float(bus.critical_q[phase, t - 1]),
            )
            exprs[(bus.id, phase)] = e
        g = dg_by_bus.get(bus.id)
        if g is not None:
            e = exprs[(bus.id, g.phase)]
            e.p_const -= float(g.p_max[t - 1])
            # DG reactive set-points are decision variables in kvar
            e.q_terms.append((varmap.offset(("qg", g.id)) + (t - 1), -scale))
        for hh in hh_by_bus.get(bus.id, []):
            e = exprs[(bus.id, hh.phase)]
            for app in hh.appliances:
                if not app.is_schedulable or (t not in app.work_window):
                    continue
                slot_pos = sorted(app.work_window).index(t)
                e.p_terms.append((varmap.offset(("ap", hh.id, app.id)) + slot_pos, scale))
                e.q_terms.append((varmap.offset(("aq", hh.id, app.id)) + slot_pos, scale))
    return exprs


def linearize(op: OperatingPoint, net: Network, t: int, injections, system: LinearSystem):
    """Emit flow-balance, voltage-drop and slack rows for one slot.

    Flow balance per child bus j with parent line (i -> j):
    ``P_ij - Ploss_hat = p_j + sum_out P_jk`` (Q analogous); voltage rows
    ``v_j = v_i - 2 (R_eff P + X_eff Q) + dv_hat``; ``v_0 = V_ref^2``.
    The hatted terms are constant-plus-gradient expansions at ``op``.
    """
    varmap = system.varmap
    children = {}
    parent_line = {}
    for li, line in enumerate(net.lines):
        children.setdefault(line.from_bus, []).append(li)
        parent_line[line.to_bus] = li

    pcc = net.buses[_bus_index(net, 0)]
    for phase in range(3):
        if phase in pcc.phases_present:
            system.add_eq(("slack", phase, t), [v_col(varmap, 0, phase, t)], [1.0], 1.0)
        else:
            system.pin(("pin", f"v[0,{phase},{t}]"), v_col(varmap, 0, phase, t))

    for li, line in enumerate(net.lines):
        j = line.to_bus
        phases = line_phases(net, li)
        p_loss0, q_loss0, dv0 = loss_terms(op, net, li, t)
        gpp, gpq, gqp, gqq, Gvp, Gvq = loss_gradients(op, net, li, t)
        P0 = op.p_flow[li, :, t - 1]
        Q0 = op.q_flow[li, :, t - 1]
        r_eff, x_eff = effective_rx(line)

        for phase in range(3):
            vj = v_col(varmap, j, phase, t)
            if phase not in phases:
                system.pin(("pin", f"v[{j},{phase},{t}]"), vj)
                system.pin(("pin", f"fp[{li},{phase},{t}]"), flow_col(varmap, "fp", li, phase, t))
                system.pin(("pin", f"fq[{li},{phase},{t}]"), flow_col(varmap, "fq", li, phase, t))
                continue

            inj = injections[(j, phase)]
            # active-power balance
            cols = [flow_col(varmap, "fp", li, phase, t), flow_col(varmap, "fq", li, phase, t)]
            coefs = [1.0 - gpp[phase], -gpq[phase]]
            for ck in children.get(j, []):
                cols.append(flow_col(varmap, "fp", ck, phase, t))
                coefs.append(-1.0)
            for col, coef in inj.p_terms:
                cols.append(col)
                coefs.append(-coef)
            rhs = inj.p_const + p_loss0[phase] - gpp[phase] * P0[phase] - gpq[phase] * Q0[phase]
            system.add_eq(("flow_p", j, phase, t), cols, coefs, rhs)

            # reactive-power balance
            cols = [flow_col(varmap, "fp", li, phase, t), flow_col(varmap, "fq", li, phase, t)]
            coefs = [-gqp[phase], 1.0 - gqq[phase]]
            for ck in children.get(j, []):
                cols.append(flow_col(varmap, "fq", ck, phase, t))
                coefs.append(-1.0)
            for col, coef in inj.q_terms:
                cols.append(col)
                coefs.append(-coef)
            rhs = inj.q_const + q_loss0[phase] - gqp[phase] * P0[phase] - gqq[phase] * Q0[phase]
            system.add_eq(("flow_q", j, phase, t), cols, coefs, rhs)

            # voltage drop with linearized correction
            cols = [vj, v_col(varmap, line.from_bus, phase, t)]
            coefs = [1.0, -1.0]
            rhs = dv0[phase]
            for other in phases:
                cp = 2.0 * r_eff[phase, other] - Gvp[phase, other]
                cq = 2.0 * x_eff[phase, other] - Gvq[phase, other]
                cols.append(flow_col(varmap, "fp", li, other, t))
                coefs.append(cp)
                cols.append(flow_col(varmap, "fq", li, other, t))
                coefs.append(cq)
                rhs -= Gvp[phase, other] * P0[other] + Gvq[phase, other] * Q0[other]
            system.add_eq(("voltage", j, phase, t), cols, coefs, rhs)


def linear_state(net: Network, op: OperatingPoint, s_inj: np.ndarray) -> NetworkState:
    """Solve the linearized model alone for fixed injections (no decision vars).

    ``s_inj`` is the (B, 3, T) complex net-withdrawal array; the resulting
    square system (flow balance + voltage rows + slack anchor) is solved
    directly.  Used for cross-validation against the exact sweep.
    """
    op.validate()
    T = s_inj.shape[2]
    varmap = VariableMap()
    register_network_variables(net, varmap)
    system = LinearSystem(varmap)
    for t in range(1, T + 1):
        injections = {}
        for bus in net.buses:
            bi = _bus_index(net, bus.id)
            for phase in bus.phases_present:
                injections[(bus.id, phase)] = InjectionExpr(
                    p_const=float(np.real(s_inj[bi, phase, t - 1])),
                    q_const=float(np.imag(s_inj[bi, phase, t - 1])),
                )
        linearize(op, net, t, injections, system)
    A_eq, b_eq, _, _ = system.matrices()
    if A_eq.shape[0] != A_eq.shape[1]:
        raise ValueError(f"linear model not square: {A_eq.shape}")
    x = sp.linalg.spsolve(A_eq.tocsc(), b_eq)
    B = len(net.buses)
    L = len(net.lines)
    v = np.zeros((B, 3, T))
    P = np.zeros((L, 3, T))
    Q = np.zeros((L, 3, T))
    for i, bus in enumerate(net.buses):
        off = varmap.offset(("v", bus.id))
        v[i] = x[off : off + 3 * T].reshape(3, T)
    for li in range(L):
        off = varmap.offset(("fp", li))
        P[li] = x[off : off + 3 * T].reshape(3, T)
        off = varmap.offset(("fq", li))
        Q[li] = x[off : off + 3 * T].reshape(3, T)
    return NetworkState(v_sq=v, p_flow=P, q_flow=Q)


def security_rows(net: Network, t: int, system: LinearSystem):
    """Voltage and branch-flow boxes for one slot, applied as variable bounds."""
    varmap = system.varmap
    boxes = []
    for bi, bus in enumerate(net.buses):
        if bus.id == 0:
            continue  # anchored at the reference voltage
        lo = float(net.v_min_kv[bi]) ** 2
        hi = float(net.v_max_kv[bi]) ** 2
        for phase in bus.phases_present:
            col = v_col(varmap, bus.id, phase, t)
            system.tighten_bounds(col, lo, hi)
            boxes.append(("voltage_box", bus.id, phase, t, lo, hi))
    for li, line in enumerate(net.lines):
        for phase in line_phases(net, li):
            if line.p_limits is not None:
                col = flow_col(varmap, "fp", li, phase, t)
                lo, hi = line.p_limits[phase]
                system.tighten_bounds(col, float(lo), float(hi))
                boxes.append(("flow_box_p", li, phase, t, float(lo), float(hi)))
            if line.q_limits is not None:
                col = flow_col(varmap, "fq", li, phase, t)
                lo, hi = line.q_limits[phase]
                system.tighten_bounds(col, float(lo), float(hi))
                boxes.append(("flow_box_q", li, phase, t, float(lo), float(hi)))
    return boxes
