import numpy as np
import pytest

from dlcflow.network import Network
from dlcflow.powerflow import (
    SLACK_PHASORS,
    ComplexVoltageState,
    InjectionSpec,
    PowerFlowNotConverged,
    _sweep,
    solve_pf,
    state_to_distflow,
)

from oracles import ybus_gauss_power_flow
from util import make_network, random_radial_network, single_phase_z


def two_bus_case(load=0.1 + 0.0j, z=0.01 + 0.01j):
    net = make_network([(0, 1, single_phase_z(z))], phases=(0,))
    s = np.zeros((2, 3, 1), dtype=complex)
    s[1, 0, 0] = load
    return net, s


def quadratic_v1(z, s, v0=1.0):
    """Closed-form squared child voltage of a single line feeding load s."""
    r, x = z.real, z.imag
    p, q = s.real, s.imag
    b = v0 - 2.0 * (r * p + x * q)
    disc = b * b - 4.0 * abs(z) ** 2 * abs(s) ** 2
    return 0.5 * (b + np.sqrt(disc))


def test_flat_profile_zero_injection():
    net = make_network([(0, 1, single_phase_z(0.01 + 0.01j))])
    state = solve_pf(net, InjectionSpec(np.zeros((2, 3, 1), dtype=complex)), t=1)
    assert np.allclose(state.v_bus, np.vstack([SLACK_PHASORS, SLACK_PHASORS]))
    assert np.allclose(state.i_line, 0.0)


def test_two_bus_matches_quadratic_root():
    z = 0.01 + 0.01j
    load = 0.1 + 0.0j
    net, s = two_bus_case(load, z)
    state = solve_pf(net, InjectionSpec(s), t=1, tol=1e-13)
    v1 = abs(state.v_bus[1, 0]) ** 2
    assert abs(v1 - quadratic_v1(z, load)) < 1e-9


def test_two_bus_sending_end_includes_loss():
    z = 0.01 + 0.01j
    load = 0.1 + 0.05j
    net, s = two_bus_case(load, z)
    state = solve_pf(net, InjectionSpec(s), t=1, tol=1e-13)
    v_sq, P, Q = state_to_distflow(state, net)
    i2 = abs(state.i_line[0, 0]) ** 2
    assert abs(P[0, 0] - (load.real + i2 * z.real)) < 1e-10
    assert abs(Q[0, 0] - (load.imag + i2 * z.imag)) < 1e-10


def test_sign_reversal_first_order():
    rng = np.random.default_rng(0)
    net = random_radial_network(rng, 5)
    s = (rng.uniform(0, 1e-6, (5, 3, 1)) + 1j * rng.uniform(0, 5e-7, (5, 3, 1))).astype(complex)
    s[0] = 0.0
    V1, J1, _, _ = _sweep(net, s, tol=1e-14)
    V2, J2, _, _ = _sweep(net, -s, tol=1e-14)
    state1 = ComplexVoltageState(V1[:, :, 0], J1[:, :, 0], 0, 0.0)
    state2 = ComplexVoltageState(V2[:, :, 0], J2[:, :, 0], 0, 0.0)
    _, P1, Q1 = state_to_distflow(state1, net)
    _, P2, Q2 = state_to_distflow(state2, net)
    assert np.max(np.abs(P1 + P2)) < 1e-12
    assert np.max(np.abs(Q1 + Q2)) < 1e-12


def test_energy_conservation_random():
    rng = np.random.default_rng(1)
    for trial in range(5):
        n = int(rng.integers(3, 9))
        net = random_radial_network(rng, n, horizon=3)
        s = rng.uniform(0, 0.05, (n, 3, 3)) + 1j * rng.uniform(0, 0.02, (n, 3, 3))
        s[0] = 0.0
        V, J, _, _ = _sweep(net, s, tol=1e-12)
        idx_of = {b.id: i for i, b in enumerate(net.buses)}
        total = s.sum(axis=(0, 1))
        losses = np.zeros(3, dtype=complex)
        for li, line in enumerate(net.lines):
            send = (V[idx_of[line.from_bus]] * np.conj(J[li])).sum(axis=0)
            recv = (V[idx_of[line.to_bus]] * np.conj(J[li])).sum(axis=0)
            losses += send - recv
        pcc = np.zeros(3, dtype=complex)
        for li, line in enumerate(net.lines):
            if line.from_bus == 0:
                pcc += (V[idx_of[0]] * np.conj(J[li])).sum(axis=0)
        assert np.max(np.abs(pcc - total - losses)) < 1e-8


def test_monotonic_voltage_in_load_scale():
    rng = np.random.default_rng(2)
    net = random_radial_network(rng, 8)
    base = rng.uniform(0, 0.03, (8, 3, 1)) + 1j * rng.uniform(0, 0.01, (8, 3, 1))
    base[0] = 0.0
    for _ in range(10):
        lo, hi = sorted(rng.uniform(0.2, 3.0, size=2))
        if hi - lo < 1e-3:
            continue
        Vl, _, _, _ = _sweep(net, base * lo)
        Vh, _, _, _ = _sweep(net, base * hi)
        assert np.min(np.abs(Vh)) < np.min(np.abs(Vl))


def test_order_independence():
    rng = np.random.default_rng(3)
    net = random_radial_network(rng, 7)
    s = rng.uniform(0, 0.04, (7, 3, 1)) + 1j * rng.uniform(0, 0.02, (7, 3, 1))
    s[0] = 0.0
    V1, _, _, _ = _sweep(net, s)
    # same tree with the line list reversed
    net2 = Network(
        buses=net.buses,
        lines=tuple(reversed(net.lines)),
        dg_units=(),
        v_ref_kv=net.v_ref_kv,
        v_min_kv=net.v_min_kv,
        v_max_kv=net.v_max_kv,
        s_base_kva=net.s_base_kva,
        horizon=net.horizon,
        dt_h=net.dt_h,
        pcc_cost=net.pcc_cost,
        per_unit=True,
    )
    V2, _, _, _ = _sweep(net2, s)
    assert np.max(np.abs(V1 - V2)) < 1e-10


def test_against_ybus_gauss_oracle():
    rng = np.random.default_rng(4)
    for trial in range(10):
        n = int(rng.integers(3, 11))
        net = random_radial_network(rng, n)
        s = rng.uniform(0, 0.04, (n, 3, 1)) + 1j * rng.uniform(0, 0.015, (n, 3, 1))
        s[0] = 0.0
        V, _, _, _ = _sweep(net, s, tol=1e-12)
        lines = [
            (ln.from_bus, ln.to_bus, ln.z, np.array([True, True, True])) for ln in net.lines
        ]
        ids = [b.id for b in net.buses]
        v_oracle = ybus_gauss_power_flow(lines, n, SLACK_PHASORS, s[:, :, 0])
        order = np.argsort(ids)
        assert np.max(np.abs(V[:, :, 0] - v_oracle[ids])) < 1e-6


def test_not_converged_raises():
    net, s = two_bus_case(load=60.0 + 0.0j)  # far beyond loadability
    with pytest.raises(PowerFlowNotConverged):
        solve_pf(net, InjectionSpec(s), t=1, max_iter=50)
