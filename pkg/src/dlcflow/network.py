"""Feeder model: buses, lines, DG units, scenario file ingestion, per-unit.

The scenario file is a JSON document whose quantity fields carry explicit
unit suffixes (``r_ohm``, ``p_max_kw``, ``v_ref_kv``); see
docs/scenario-schema.md.  In memory all electrical quantities are either SI
(as loaded) or per-unit, flagged by ``Network.per_unit``.  Phase-indexed
data always has length 3 in fixed A, B, C order; absent phases hold zeros.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .appliances import (
    Appliance,
    Deferrable,
    Household,
    Interruptible,
    Thermostatic,
    _freeze,
    reactive_ratio,
)

PHASE_NAMES = ("a", "b", "c")
N_PHASES = 3


class ScenarioError(ValueError):
    """Scenario file cannot be parsed or violates a model invariant."""

    def __init__(self, message: str, location: str = ""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class CycleDetected(ScenarioError):
    pass


class Disconnected(ScenarioError):
    pass


def phase_index(name) -> int:
    if isinstance(name, (int, np.integer)) and 0 <= int(name) < 3:
        return int(name)
    try:
        return PHASE_NAMES.index(str(name).lower())
    except ValueError:
        raise ScenarioError(f"unknown phase {name!r}") from None


@dataclass(frozen=True)
class Bus:
    id: int
    phases_present: tuple
    attached_households: tuple  # (household id, phase index) pairs
    attached_dg: Optional[int]
    critical_p: np.ndarray  # (3, T)
    critical_q: np.ndarray  # (3, T)

    def __post_init__(self):
        object.__setattr__(self, "critical_p", _freeze(self.critical_p))
        object.__setattr__(self, "critical_q", _freeze(self.critical_q))


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    r: np.ndarray  # (3, 3) ohm or pu
    x: np.ndarray  # (3, 3)
    p_limits: Optional[np.ndarray] = None  # (3, 2) per-phase (min, max)
    q_limits: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "r", _freeze(self.r))
        object.__setattr__(self, "x", _freeze(self.x))
        if self.p_limits is not None:
            object.__setattr__(self, "p_limits", _freeze(self.p_limits))
        if self.q_limits is not None:
            object.__setattr__(self, "q_limits", _freeze(self.q_limits))

    @property
    def z(self) -> np.ndarray:
        return self.r + 1j * self.x


@dataclass(frozen=True)
class CostProfile:
    """Quadratic cost a*p^2 + b*p + c per slot, with p in MW and cost in $."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        if np.any(self.a < 0.0):
            raise ScenarioError("quadratic cost coefficient a(t) must be nonnegative")

    def evaluate(self, p_mw: np.ndarray) -> float:
        p = np.asarray(p_mw, dtype=float)
        return float(np.sum(self.a * p * p + self.b * p + self.c))


@dataclass(frozen=True)
class DgUnit:
    id: int
    bus: int
    phase: int
    p_max: np.ndarray  # (T,) kW or pu
    q_min: float
    q_max: float
    cost: Optional[CostProfile] = None

    def __post_init__(self):
        object.__setattr__(self, "p_max", _freeze(self.p_max))
        if self.q_min > self.q_max:
            raise ScenarioError(f"dg {self.id}: q_min > q_max")
        if np.any(self.p_max < 0.0):
            raise ScenarioError(f"dg {self.id}: negative available active power")


@dataclass(frozen=True)
class DlcEvent:
    """Event window (slot labels) and feeder-head apparent-power cap."""

    window: frozenset
    s_cap_mva: float

    def __post_init__(self):
        object.__setattr__(self, "window", frozenset(int(t) for t in self.window))
        if self.s_cap_mva <= 0.0:
            raise ScenarioError("dlc_event: s_cap_mva must be positive")


@dataclass(frozen=True)
class Profiles:
    """Shared day shapes: outdoor temperature and normalized curves."""

    t_out_f: np.ndarray
    critical_shape: np.ndarray
    pv_shape: np.ndarray
    price_shape: np.ndarray

    def __post_init__(self):
        for name in ("t_out_f", "critical_shape", "pv_shape", "price_shape"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))


@dataclass(frozen=True)
class Network:
    buses: tuple
    lines: tuple
    dg_units: tuple
    v_ref_kv: float
    v_min_kv: np.ndarray  # per bus
    v_max_kv: np.ndarray
    s_base_kva: float
    horizon: int
    dt_h: float
    pcc_cost: CostProfile
    per_unit: bool = False

    def __post_init__(self):
        object.__setattr__(self, "v_min_kv", _freeze(self.v_min_kv))
        object.__setattr__(self, "v_max_kv", _freeze(self.v_max_kv))

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def z_base_ohm(self) -> float:
        return self.v_ref_kv ** 2 * 1000.0 / self.s_base_kva

    def bus_by_id(self, bus_id: int) -> Bus:
        for bus in self.buses:
            if bus.id == bus_id:
                return bus
        raise KeyError(bus_id)

    def lines_from(self, bus_id: int) -> list:
        return [ln for ln in self.lines if ln.from_bus == bus_id]


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs: feeder, customers, event, shared profiles."""

    network: Network
    households: tuple
    event: DlcEvent
    profiles: Profiles
    rng_seed: int


def validate_topology(net: Network) -> list:
    """Parent-before-child bus order rooted at bus 0.

    Raises :class:`Disconnected` or :class:`CycleDetected` when the line
    graph is not a tree spanning every bus from the PCC.
    """
    ids = [b.id for b in net.buses]
    if len(set(ids)) != len(ids):
        raise ScenarioError(f"duplicate bus ids in {sorted(ids)}")
    if 0 not in ids:
        raise ScenarioError("bus 0 (the PCC) is missing")
    adjacency = {i: [] for i in ids}
    for ln in net.lines:
        if ln.from_bus not in adjacency or ln.to_bus not in adjacency:
            raise ScenarioError(f"line {ln.from_bus}-{ln.to_bus} references unknown bus")
        adjacency[ln.from_bus].append(ln.to_bus)
        adjacency[ln.to_bus].append(ln.from_bus)
    order, seen, parent = [], set(), {}
    for root in [0] + sorted(set(ids) - {0}):
        if root in seen:
            continue
        seen.add(root)
        parent[root] = None
        stack = [root]
        component = []
        while stack:
            node = stack.pop()
            component.append(node)
            for nxt in sorted(adjacency[node], reverse=True):
                if nxt == parent[node]:
                    continue
                if nxt in seen:
                    raise CycleDetected(f"cycle through bus {nxt}")
                seen.add(nxt)
                parent[nxt] = node
                stack.append(nxt)
        if root == 0:
            order = component
    if len(order) != len(ids):
        missing = sorted(set(ids) - set(order))
        raise Disconnected(f"buses {missing} unreachable from the PCC")
    if len(net.lines) != len(ids) - 1:
        raise CycleDetected(f"{len(net.lines)} lines for {len(ids)} buses: not radial")
    return order


def to_per_unit(net: Network) -> Network:
    """Normalize impedances and powers onto (v_ref, s_base); idempotent inputs rejected."""
    if net.per_unit:
        return net
    if net.s_base_kva <= 0.0 or net.v_ref_kv <= 0.0:
        raise ScenarioError("per-unit conversion needs positive voltage and power bases")
    zb = net.z_base_ohm
    sb = net.s_base_kva
    buses = tuple(
        replace(b, critical_p=b.critical_p / sb, critical_q=b.critical_q / sb)
        for b in net.buses
    )
    lines = tuple(
        replace(
            ln,
            r=ln.r / zb,
            x=ln.x / zb,
            p_limits=None if ln.p_limits is None else ln.p_limits / sb,
            q_limits=None if ln.q_limits is None else ln.q_limits / sb,
        )
        for ln in net.lines
    )
    dgs = tuple(
        replace(g, p_max=g.p_max / sb, q_min=g.q_min / sb, q_max=g.q_max / sb)
        for g in net.dg_units
    )
    return replace(
        net,
        buses=buses,
        lines=lines,
        dg_units=dgs,
        v_min_kv=net.v_min_kv / net.v_ref_kv,
        v_max_kv=net.v_max_kv / net.v_ref_kv,
        per_unit=True,
    )


def from_per_unit(net: Network) -> Network:
    """Inverse of :func:`to_per_unit`."""
    if not net.per_unit:
        return net
    zb = net.z_base_ohm
    sb = net.s_base_kva
    buses = tuple(
        replace(b, critical_p=b.critical_p * sb, critical_q=b.critical_q * sb)
        for b in net.buses
    )
    lines = tuple(
        replace(
            ln,
            r=ln.r * zb,
            x=ln.x * zb,
            p_limits=None if ln.p_limits is None else ln.p_limits * sb,
            q_limits=None if ln.q_limits is None else ln.q_limits * sb,
        )
        for ln in net.lines
    )
    dgs = tuple(
        replace(g, p_max=g.p_max * sb, q_min=g.q_min * sb, q_max=g.q_max * sb)
        for g in net.dg_units
    )
    return replace(
        net,
        buses=buses,
        lines=lines,
        dg_units=dgs,
        v_min_kv=net.v_min_kv * net.v_ref_kv,
        v_max_kv=net.v_max_kv * net.v_ref_kv,
        per_unit=False,
    )


# ---------------------------------------------------------------------------
# scenario file I/O


def _expand_series(value, horizon: int, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(horizon, float(arr))
    if arr.shape != (horizon,):
        raise ScenarioError(f"series of length {arr.shape} != horizon {horizon}", where)
    return arr


def _window_series(scalar_or_series, window, horizon: int) -> np.ndarray:
    """Expand a bound/preference onto the horizon, zero outside the window."""
    out = np.zeros(horizon)
    arr = np.asarray(scalar_or_series, dtype=float)
    if arr.ndim == 0:
        for t in window:
            out[t - 1] = float(arr)
    else:
        if len(arr) != len(window):
            raise ScenarioError(f"per-window series length {len(arr)} != window size {len(window)}")
        for k, t in enumerate(sorted(window)):
            out[t - 1] = arr[k]
    return out


def _parse_appliance(rec: dict, horizon: int, t_out_f: np.ndarray, where: str) -> Appliance:
    try:
        kind_tag = rec["kind"]
        window = frozenset(int(t) for t in rec["work_hours"])
        if not window or any(t < 1 or t > horizon for t in window):
            raise ScenarioError("work_hours must be slot labels in 1..T", where)
        p_max = _window_series(rec["p_max_kw"], window, horizon)
        p_min = _window_series(rec.get("p_min_kw", 0.0), window, horizon)
        eta = float(rec["eta"])
        b = float(rec["b_utility"])
        if kind_tag == "interruptible":
            kind = Interruptible(p_pref_kw=_window_series(rec["p_pref_kw"], window, horizon))
        elif kind_tag == "deferrable":
            kind = Deferrable(
                e_min_kwh=float(rec["e_min_kwh"]),
                e_max_kwh=float(rec["e_max_kwh"]),
                p_pref_kw=_window_series(rec["p_pref_kw"], window, horizon),
            )
        elif kind_tag == "thermostatic":
            kind = Thermostatic(
                alpha=float(rec["alpha"]),
                beta_f_per_kw=float(rec["beta_f_per_kw"]),
                t_conf_f=_expand_series(rec["t_conf_f"], horizon, where),
                t_min_f=_expand_series(rec["t_min_f"], horizon, where),
                t_max_f=_expand_series(rec["t_max_f"], horizon, where),
                t_out_f=t_out_f,
                t_init_f=float(rec["t_init_f"]),
            )
        else:
            raise ScenarioError(f"unknown appliance kind {kind_tag!r}", where)
        return Appliance(
            id=str(rec["id"]),
            kind=kind,
            eta=eta,
            p_min_kw=p_min,
            p_max_kw=p_max,
            work_window=window,
            b_utility=b,
        )
    except KeyError as exc:
        raise ScenarioError(f"missing field {exc}", where) from None


def _matrix3(value, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3, 3):
        raise ScenarioError(f"expected a 3x3 matrix, got shape {arr.shape}", where)
    if not np.allclose(arr, arr.T, atol=1e-12):
        raise ScenarioError("impedance matrix must be symmetric", where)
    return arr


def load_scenario(path) -> Scenario:
    """Parse and fully validate a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON at line {exc.lineno}: {exc.msg}", str(path)) from None
    return scenario_from_dict(doc)


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        netdoc = doc["network"]
        horizon = int(netdoc["horizon"])
        dt_h = float(netdoc["dt_h"])
        profdoc = doc["profiles"]
        profiles = Profiles(
            t_out_f=_expand_series(profdoc["t_out_f"], horizon, "profiles.t_out_f"),
            critical_shape=_expand_series(profdoc["critical_shape"], horizon, "profiles.critical_shape"),
            pv_shape=_expand_series(profdoc["pv_shape"], horizon, "profiles.pv_shape"),
            price_shape=_expand_series(profdoc["price_shape"], horizon, "profiles.price_shape"),
        )

        households = []
        bus_households = {}
        for hdoc in doc["households"]:
            where = f"household {hdoc.get('id', '?')}"
            phase = phase_index(hdoc["phase"])
            apps = tuple(
                _parse_appliance(adoc, horizon, profiles.t_out_f, f"{where}/{adoc.get('id', '?')}")
                for adoc in hdoc["appliances"]
            )
            hh = Household(id=int(hdoc["id"]), bus=int(hdoc["bus"]), phase=phase, appliances=apps)
            households.append(hh)
            bus_households.setdefault(hh.bus, []).append((hh.id, hh.phase))
        ids = [h.id for h in households]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate household ids")

        dg_units = []
        bus_dg = {}
        for gdoc in doc.get("dg", []):
            where = f"dg {gdoc.get('id', '?')}"
            cost = None
            if "cost" in gdoc:
                cdoc = gdoc["cost"]
                cost = CostProfile(
                    a=_expand_series(cdoc["a_usd_per_mw2"], horizon, where),
                    b=_expand_series(cdoc["b_usd_per_mw"], horizon, where),
                    c=_expand_series(cdoc.get("c_usd", 0.0), horizon, where),
                )
            unit = DgUnit(
                id=int(gdoc["id"]),
                bus=int(gdoc["bus"]),
                phase=phase_index(gdoc["phase"]),
                p_max=_expand_series(gdoc["p_max_kw"], horizon, where),
                q_min=float(gdoc["q_min_kvar"]),
                q_max=float(gdoc["q_max_kvar"]),
                cost=cost,
            )
            dg_units.append(unit)
            if unit.bus in bus_dg:
                raise ScenarioError(f"bus {unit.bus} has more than one DG unit", where)
            bus_dg[unit.bus] = unit.id

        buses = []
        for bdoc in netdoc["buses"]:
            where = f"bus {bdoc.get('id', '?')}"
            bid = int(bdoc["id"])
            phases = tuple(sorted(phase_index(p) for p in bdoc["phases"]))
            crit_p = np.zeros((3, horizon))
            crit_q = np.zeros((3, horizon))
            if "critical_p_kw" in bdoc:
                for ph_name, series in bdoc["critical_p_kw"].items():
                    crit_p[phase_index(ph_name)] = _expand_series(series, horizon, where)
                for ph_name, series in bdoc.get("critical_q_kvar", {}).items():
                    crit_q[phase_index(ph_name)] = _expand_series(series, horizon, where)
            for hid, ph in bus_households.get(bid, []):
                if ph not in phases:
                    raise ScenarioError(f"household {hid} on absent phase {PHASE_NAMES[ph]}", where)
            buses.append(
                Bus(
                    id=bid,
                    phases_present=phases,
                    attached_households=tuple(bus_households.get(bid, [])),
                    attached_dg=bus_dg.get(bid),
                    critical_p=crit_p,
                    critical_q=crit_q,
                )
            )
        bus_ids = {b.id for b in buses}
        if len(bus_ids) != len(buses):
            raise ScenarioError(f"duplicate bus id among {sorted(b.id for b in buses)}")
        for hh in households:
            if hh.bus not in bus_ids:
                raise ScenarioError(f"household {hh.id} attached to unknown bus {hh.bus}")
        for g in dg_units:
            if g.bus not in bus_ids:
                raise ScenarioError(f"dg {g.id} attached to unknown bus {g.bus}")
        pcc = next(b for b in buses if b.id == 0)
        if pcc.attached_households or pcc.attached_dg is not None:
            raise ScenarioError("bus 0 is the PCC and must carry no households or DG")
        if np.any(pcc.critical_p != 0.0) or np.any(pcc.critical_q != 0.0):
            raise ScenarioError("bus 0 is the PCC and must carry no critical load")

        lines = tuple(
            Line(
                from_bus=int(ldoc["from_bus"]),
                to_bus=int(ldoc["to_bus"]),
                r=_matrix3(ldoc["r_ohm"], f"line {ldoc.get('from_bus')}-{ldoc.get('to_bus')}"),
                x=_matrix3(ldoc["x_ohm"], f"line {ldoc.get('from_bus')}-{ldoc.get('to_bus')}"),
                p_limits=None
                if "p_limit_kw" not in ldoc
                else _freeze(np.asarray(ldoc["p_limit_kw"], dtype=float)),
                q_limits=None
                if "q_limit_kvar" not in ldoc
                else _freeze(np.asarray(ldoc["q_limit_kvar"], dtype=float)),
            )
            for ldoc in netdoc["lines"]
        )

        cdoc = netdoc["pcc_cost"]
        pcc_cost = CostProfile(
            a=_expand_series(cdoc["a_usd_per_mw2"], horizon, "pcc_cost"),
            b=_expand_series(cdoc["b_usd_per_mw"], horizon, "pcc_cost"),
            c=_expand_series(cdoc.get("c_usd", 0.0), horizon, "pcc_cost"),
        )
        v_ref = float(netdoc["v_ref_kv"])
        v_min = _expand_bus_voltage(netdoc["v_min_kv"], buses)
        v_max = _expand_bus_voltage(netdoc["v_max_kv"], buses)
        if not np.all(v_min < v_ref) or not np.all(v_ref < v_max):
            raise ScenarioError("need v_min < v_ref < v_max")
        net = Network(
            buses=tuple(sorted(buses, key=lambda b: b.id)),
            lines=lines,
            dg_units=tuple(dg_units),
            v_ref_kv=v_ref,
            v_min_kv=v_min,
            v_max_kv=v_max,
            s_base_kva=float(netdoc["s_base_kva"]),
            horizon=horizon,
            dt_h=dt_h,
            pcc_cost=pcc_cost,
        )
        validate_topology(net)

        edoc = doc["dlc_event"]
        event = DlcEvent(
            window=frozenset(int(t) for t in edoc["window_hours"]),
            s_cap_mva=float(edoc["s_cap_mva"]),
        )
        if any(t < 1 or t > horizon for t in event.window):
            raise ScenarioError("dlc_event window outside the horizon")
        for ln in net.lines:
            for ph in range(3):
                present = ph in net.bus_by_id(ln.to_bus).phases_present
                if present and ln.r[ph, ph] <= 0.0:
                    raise ScenarioError(
                        f"line {ln.from_bus}-{ln.to_bus}: nonpositive diagonal resistance on phase {PHASE_NAMES[ph]}"
                    )
        return Scenario(
            network=net,
            households=tuple(sorted(households, key=lambda h: h.id)),
            event=event,
            profiles=profiles,
            rng_seed=int(doc.get("rng_seed", 0)),
        )
    except KeyError as exc:
        raise ScenarioError(f"missing required field {exc}") from None


def _expand_bus_voltage(value, buses) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(len(buses), float(arr))
    if len(arr) != len(buses):
        raise ScenarioError("per-bus voltage limit list has wrong length")
    return arr


def _jsonify(value):
    if isinstance(value, np.ndarray):
        return [_jsonify(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    return value


def scenario_to_dict(scn: Scenario) -> dict:
    """Serializable form of a scenario; inverse of :func:`scenario_from_dict`."""
    net = from_per_unit(scn.network)
    buses = []
    for b in net.buses:
        rec = {"id": b.id, "phases": "".join(PHASE_NAMES[p] for p in b.phases_present)}
        if np.any(b.critical_p != 0.0) or np.any(b.critical_q != 0.0):
            rec["critical_p_kw"] = {
                PHASE_NAMES[p]: b.critical_p[p] for p in range(3) if np.any(b.critical_p[p] != 0.0)
            }
            rec["critical_q_kvar"] = {
                PHASE_NAMES[p]: b.critical_q[p] for p in range(3) if np.any(b.critical_q[p] != 0.0)
            }
        buses.append(rec)
    lines = []
    for ln in net.lines:
        rec = {"from_bus": ln.from_bus, "to_bus": ln.to_bus, "r_ohm": ln.r, "x_ohm": ln.x}
        if ln.p_limits is not None:
            rec["p_limit_kw"] = ln.p_limits
        if ln.q_limits is not None:
            rec["q_limit_kvar"] = ln.q_limits
        lines.append(rec)
    households = []
    for hh in scn.households:
        apps = []
        for app in hh.appliances:
            rec = {
                "id": app.id,
                "eta": app.eta,
                "b_utility": app.b_utility,
                "work_hours": sorted(app.work_window),
                "p_max_kw": [app.p_max_kw[t - 1] for t in sorted(app.work_window)],
                "p_min_kw": [app.p_min_kw[t - 1] for t in sorted(app.work_window)],
            }
            kind = app.kind
            if isinstance(kind, Interruptible):
                rec["kind"] = "interruptible"
                rec["p_pref_kw"] = [kind.p_pref_kw[t - 1] for t in sorted(app.work_window)]
            elif isinstance(kind, Deferrable):
                rec["kind"] = "deferrable"
                rec["e_min_kwh"] = kind.e_min_kwh
                rec["e_max_kwh"] = kind.e_max_kwh
                rec["p_pref_kw"] = [kind.p_pref_kw[t - 1] for t in sorted(app.work_window)]
            elif isinstance(kind, Thermostatic):
                rec["kind"] = "thermostatic"
                rec["alpha"] = kind.alpha
                rec["beta_f_per_kw"] = kind.beta_f_per_kw
                rec["t_conf_f"] = kind.t_conf_f
                rec["t_min_f"] = kind.t_min_f
                rec["t_max_f"] = kind.t_max_f
                rec["t_init_f"] = kind.t_init_f
            else:
                raise ScenarioError(f"cannot serialize appliance kind {type(kind).__name__}")
            apps.append(rec)
        households.append(
            {"id": hh.id, "bus": hh.bus, "phase": PHASE_NAMES[hh.phase], "appliances": apps}
        )
    dgs = []
    for g in net.dg_units:
        rec = {
            "id": g.id,
            "bus": g.bus,
            "phase": PHASE_NAMES[g.phase],
            "p_max_kw": g.p_max,
            "q_min_kvar": g.q_min,
            "q_max_kvar": g.q_max,
        }
        if g.cost is not None:
            rec["cost"] = {
                "a_usd_per_mw2": g.cost.a,
                "b_usd_per_mw": g.cost.b,
                "c_usd": g.cost.c,
            }
        dgs.append(rec)
    doc = {
        "rng_seed": scn.rng_seed,
        "network": {
            "v_ref_kv": net.v_ref_kv,
            "s_base_kva": net.s_base_kva,
            "v_min_kv": net.v_min_kv,
            "v_max_kv": net.v_max_kv,
            "horizon": net.horizon,
            "dt_h": net.dt_h,
            "pcc_cost": {
                "a_usd_per_mw2": net.pcc_cost.a,
                "b_usd_per_mw": net.pcc_cost.b,
                "c_usd": net.pcc_cost.c,
            },
            "buses": buses,
            "lines": lines,
        },
        "households": households,
        "dg": dgs,
        "profiles": {
            "t_out_f": scn.profiles.t_out_f,
            "critical_shape": scn.profiles.critical_shape,
            "pv_shape": scn.profiles.pv_shape,
            "price_shape": scn.profiles.price_shape,
        },
        "dlc_event": {
            "window_hours": sorted(scn.event.window),
            "s_cap_mva": scn.event.s_cap_mva,
        },
    }
    return _jsonify(doc)


def write_scenario(scn: Scenario, path) -> None:
    """Write a scenario file; output bytes depend only on the scenario contents."""
    doc = scenario_to_dict(scn)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
