"""Appliance demand models: classification, utilities, feasible sets.

Time is a wrap-around ring of ``T`` hourly slots labelled 1..T, where slot
``t`` covers the clock interval [t, t+1) mod 24.  Work windows are plain
sets of slot labels, so windows that cross midnight (e.g. lighting from
19:00 to 07:00) need no special casing.  Arrays are 0-indexed: entry
``t - 1`` belongs to slot ``t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np


def _freeze(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    arr.setflags(write=False)
    return arr


class ApplianceModelError(ValueError):
    """An appliance definition violates its invariants."""


@dataclass(frozen=True)
class Critical:
    """Fixed must-serve load; never a decision variable."""

    p_profile_kw: np.ndarray
    q_profile_kvar: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_profile_kw", _freeze(self.p_profile_kw))
        object.__setattr__(self, "q_profile_kvar", _freeze(self.q_profile_kvar))


@dataclass(frozen=True)
class Interruptible:
    """Curtailable load (lighting, plug loads) with a preferred draw."""

    p_pref_kw: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_pref_kw", _freeze(self.p_pref_kw))


@dataclass(frozen=True)
class Deferrable:
    """Energy-constrained shiftable load (washer, dryer)."""

    e_min_kwh: float
    e_max_kwh: float
    p_pref_kw: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p_pref_kw", _freeze(self.p_pref_kw))
        if self.e_min_kwh > self.e_max_kwh:
            raise ApplianceModelError(
                f"deferrable energy window empty: [{self.e_min_kwh}, {self.e_max_kwh}]"
            )


@dataclass(frozen=True)
class Thermostatic:
    """First-order thermal load (AC) tracking a comfort temperature.

    The indoor temperature follows
    ``T_in(t) = T_in(t-1) + alpha * (T_out(t) - T_in(t-1)) + beta * p(t)``
    with ``beta`` in deg F per kW (negative for cooling).
    """

    alpha: float
    beta_f_per_kw: float
    t_conf_f: np.ndarray
    t_min_f: np.ndarray
    t_max_f: np.ndarray
    t_out_f: np.ndarray
    t_init_f: float

    def __post_init__(self):
        for name in ("t_conf_f", "t_min_f", "t_max_f", "t_out_f"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))
        if not 0.0 < self.alpha < 1.0:
            raise ApplianceModelError(f"alpha must lie in (0, 1), got {self.alpha}")
        if np.any(self.t_min_f > self.t_conf_f) or np.any(self.t_conf_f > self.t_max_f):
            raise ApplianceModelError("comfort temperature must lie inside the bearable band")


ApplianceKind = Union[Critical, Interruptible, Deferrable, Thermostatic]


@dataclass(frozen=True)
class Appliance:
    """A schedulable device in one household."""

    id: str
    kind: ApplianceKind
    eta: float
    p_min_kw: np.ndarray
    p_max_kw: np.ndarray
    work_window: frozenset
    b_utility: float

    def __post_init__(self):
        object.__setattr__(self, "p_min_kw", _freeze(self.p_min_kw))
        object.__setattr__(self, "p_max_kw", _freeze(self.p_max_kw))
        object.__setattr__(self, "work_window", frozenset(self.work_window))
        if not 0.0 < self.eta <= 1.0:
            raise ApplianceModelError(f"appliance {self.id}: power factor {self.eta} not in (0, 1]")
        if self.b_utility <= 0.0:
            raise ApplianceModelError(f"appliance {self.id}: utility weight must be positive")
        if np.any(self.p_min_kw < 0.0) or np.any(self.p_min_kw > self.p_max_kw):
            raise ApplianceModelError(f"appliance {self.id}: need 0 <= p_min <= p_max")
        horizon = len(self.p_max_kw)
        outside = np.array([t + 1 not in self.work_window for t in range(horizon)])
        if np.any(self.p_min_kw[outside] != 0.0) or np.any(self.p_max_kw[outside] != 0.0):
            raise ApplianceModelError(
                f"appliance {self.id}: power bounds must be zero outside the work window"
            )

    @property
    def horizon(self) -> int:
        return len(self.p_max_kw)

    @property
    def window_slots(self) -> list:
        """Window slot labels in horizon order."""
        return sorted(self.work_window)

    @property
    def is_schedulable(self) -> bool:
        return not isinstance(self.kind, Critical)


@dataclass(frozen=True)
class Household:
    """Single-phase customer: one bus, one phase, a set of appliances."""

    id: int
    bus: int
    phase: int
    appliances: tuple

    def __post_init__(self):
        ids = [a.id for a in self.appliances]
        if len(set(ids)) != len(ids):
            raise ApplianceModelError(f"household {self.id}: duplicate appliance ids {ids}")


@dataclass
class ApplianceSchedule:
    """Realized per-slot dispatch for one appliance."""

    p_kw: np.ndarray
    q_kvar: np.ndarray
    t_in_f: Optional[np.ndarray] = None


@dataclass
class Schedule:
    """Full dispatch: appliance powers plus DG reactive set-points."""

    appliance_p_kw: dict  # (household id, appliance id) -> (T,)
    appliance_q_kvar: dict
    dg_q_kvar: dict  # dg id -> (T,)
    t_in_f: dict = None  # (household id, appliance id) -> (T,), thermostatic only

    def __post_init__(self):
        if self.t_in_f is None:
            self.t_in_f = {}

    def appliance(self, hh_id: int, app_id: str) -> ApplianceSchedule:
        key = (hh_id, app_id)
        return ApplianceSchedule(
            p_kw=self.appliance_p_kw[key],
            q_kvar=self.appliance_q_kvar[key],
            t_in_f=self.t_in_f.get(key),
        )


def reactive_ratio(eta: float) -> float:
    """tan(arccos eta): the fixed kvar-per-kW of a constant-power-factor load."""
    if not 0.0 < eta <= 1.0:
        raise ApplianceModelError(f"power factor {eta} not in (0, 1]")
    return math.sqrt(1.0 / (eta * eta) - 1.0)


def reactive_from_active(p_kw, eta: float):
    """Reactive power tied to active power so that p / |p + jq| = eta."""
    return np.asarray(p_kw, dtype=float) * reactive_ratio(eta)


def temperature_step(t_in_prev: float, t_out: float, p_kw: float, alpha: float, beta: float):
    """One step of the first-order indoor-temperature recurrence."""
    return t_in_prev + alpha * (t_out - t_in_prev) + beta * p_kw


def temperature_series(kind: Thermostatic, p_kw: np.ndarray) -> np.ndarray:
    """Indoor temperature trajectory induced by a power profile."""
    temps = np.empty(len(p_kw))
    prev = kind.t_init_f
    for t in range(len(p_kw)):
        prev = temperature_step(prev, kind.t_out_f[t], p_kw[t], kind.alpha, kind.beta_f_per_kw)
        temps[t] = prev
    return temps


def thermal_response(kind: Thermostatic, horizon: int):
    """Affine map from power profile to indoor temperature.

    Returns ``(free, gain)`` with ``T_in = free + gain @ p_kw``; ``gain`` is
    lower triangular with entries ``beta * (1 - alpha)**(t - tau)``.
    """
    decay = 1.0 - kind.alpha
    powers = decay ** np.arange(horizon)
    gain = np.zeros((horizon, horizon))
    for t in range(horizon):
        gain[t, : t + 1] = kind.beta_f_per_kw * powers[t::-1]
    free = np.empty(horizon)
    acc = kind.t_init_f
    for t in range(horizon):
        acc = acc + kind.alpha * (kind.t_out_f[t] - acc)
        free[t] = acc
    return free, gain


def deferrable_weights(appliance: Appliance) -> np.ndarray:
    """Time-sensitivity weights: 1-based slot position within the window."""
    return np.arange(1, len(appliance.window_slots) + 1, dtype=float)


def utility(appliance: Appliance, sched: ApplianceSchedule) -> float:
    """Customer utility of a schedule; higher is better, 0 is the ideal."""
    kind = appliance.kind
    p = np.asarray(sched.p_kw, dtype=float)
    b = appliance.b_utility
    if isinstance(kind, Critical):
        return 0.0
    if isinstance(kind, Interruptible):
        return -b * float(np.sum((p - kind.p_pref_kw) ** 2))
    if isinstance(kind, Deferrable):
        idx = [t - 1 for t in appliance.window_slots]
        w = deferrable_weights(appliance)
        dev = p[idx] - kind.p_pref_kw[idx]
        return b * (float(np.sum(p[idx])) - float(np.sum(w * dev * dev)))
    if isinstance(kind, Thermostatic):
        t_in = sched.t_in_f
        if t_in is None:
            t_in = temperature_series(kind, p)
        return -b * float(np.sum((t_in - kind.t_conf_f) ** 2))
    raise ApplianceModelError(f"schedule/appliance kind mismatch for {appliance.id}")


@dataclass(frozen=True)
class FeasibleSet:
    """Linear description of one appliance's feasible schedules.

    ``power_boxes`` has one (slot, lo_kw, hi_kw) entry per working slot,
    ``tie_ratio`` fixes q = tie_ratio * p in every slot, ``energy_row`` is
    the cumulative-energy window over the work window (kWh), and the
    thermal pieces chain the temperature evolution from t_init and box it
    into the comfort band.
    """

    appliance_id: str
    power_boxes: tuple
    tie_ratio: float
    energy_row: Optional[tuple]
    thermal_free: Optional[np.ndarray]
    thermal_gain: Optional[np.ndarray]
    thermal_band: Optional[tuple]
    dt_h: float

    @property
    def n_evolution_rows(self) -> int:
        return 0 if self.thermal_free is None else len(self.thermal_free)

    @property
    def n_band_rows(self) -> int:
        return 0 if self.thermal_band is None else len(self.thermal_band[0])

    @property
    def n_power_boxes(self) -> int:
        return len(self.power_boxes)

    @property
    def n_tie_rows(self) -> int:
        return len(self.power_boxes)

    @property
    def n_rows(self) -> int:
        extra = 0 if self.energy_row is None else 1
        return self.n_power_boxes + self.n_tie_rows + extra + self.n_evolution_rows + self.n_band_rows

    def check(self, sched: ApplianceSchedule, tol: float = 1e-6) -> list:
        """Independent feasibility audit; returns human-readable violations."""
        bad = []
        p = np.asarray(sched.p_kw, dtype=float)
        q = np.asarray(sched.q_kvar, dtype=float)
        for slot, lo, hi in self.power_boxes:
            val = p[slot - 1]
            if val < lo - tol or val > hi + tol:
                bad.append(f"{self.appliance_id}: p[{slot}]={val:.6g} outside [{lo}, {hi}]")
        if np.max(np.abs(q - self.tie_ratio * p), initial=0.0) > tol:
            bad.append(f"{self.appliance_id}: reactive tie q = {self.tie_ratio:.6g} * p broken")
        if self.energy_row is not None:
            lo, hi, slots = self.energy_row
            energy = float(np.sum(p[[s - 1 for s in slots]])) * self.dt_h
            if energy < lo - tol or energy > hi + tol:
                bad.append(f"{self.appliance_id}: energy {energy:.6g} kWh outside [{lo}, {hi}]")
        if self.thermal_free is not None:
            t_in = self.thermal_free + self.thermal_gain @ p
            if sched.t_in_f is not None and np.max(np.abs(t_in - sched.t_in_f)) > 1e-9:
                bad.append(f"{self.appliance_id}: temperature evolution equalities broken")
            lo, hi = self.thermal_band
            if np.any(t_in < lo - tol) or np.any(t_in > hi + tol):
                bad.append(f"{self.appliance_id}: indoor temperature leaves the comfort band")
        return bad


def feasible_set_constraints(appliance: Appliance, dt_h: float = 1.0) -> FeasibleSet:
    """Constraint rows (boxes, tie, energy window, thermal chain) for one appliance."""
    kind = appliance.kind
    if isinstance(kind, Critical):
        return FeasibleSet(appliance.id, (), 0.0, None, None, None, None, dt_h)
    boxes = tuple(
        (t, float(appliance.p_min_kw[t - 1]), float(appliance.p_max_kw[t - 1]))
        for t in appliance.window_slots
    )
    tie = reactive_ratio(appliance.eta)
    energy = None
    free = gain = band = None
    if isinstance(kind, Deferrable):
        energy = (kind.e_min_kwh, kind.e_max_kwh, tuple(appliance.window_slots))
    if isinstance(kind, Thermostatic):
        free, gain = thermal_response(kind, appliance.horizon)
        band = (kind.t_min_f.copy(), kind.t_max_f.copy())
    return FeasibleSet(appliance.id, boxes, tie, energy, free, gain, band, dt_h)


def check_household_schedule(household: Household, schedules: dict, dt_h: float, tol: float = 1e-6) -> list:
    """Re-check every appliance schedule of a household against its feasible set."""
    bad = []
    for app in household.appliances:
        if not app.is_schedulable:
            continue
        fs = feasible_set_constraints(app, dt_h)
        bad.extend(fs.check(schedules[(household.id, app.id)], tol))
    return bad
