import numpy as np

from dlcflow.distflow import (
    InjectionExpr,
    LinearSystem,
    OperatingPoint,
    VariableMap,
    format_label,
    linear_state,
    linearize,
    loss_gradients,
    loss_terms,
    nodal_injections,
    register_network_variables,
    security_rows,
    v_col,
)
from dlcflow.network import to_per_unit
from dlcflow.powerflow import _sweep

from util import make_network, random_radial_network, single_phase_z


def op_at(net, P=None, Q=None, v=None, horizon=1):
    L, B = len(net.lines), len(net.buses)
    op = OperatingPoint.flat(L, B, horizon)
    if P is not None:
        op.p_flow = np.asarray(P, dtype=float).reshape(L, 3, horizon)
    if Q is not None:
        op.q_flow = np.asarray(Q, dtype=float).reshape(L, 3, horizon)
    if v is not None:
        op.v_sq = np.asarray(v, dtype=float).reshape(B, 3, horizon)
    return op


def test_loss_zero_without_flow():
    net = make_network([(0, 1, single_phase_z(0.1))], phases=(0,))
    op = op_at(net)
    p_loss, q_loss, dv = loss_terms(op, net, 0, 1)
    assert np.all(p_loss == 0.0) and np.all(q_loss == 0.0) and np.all(dv == 0.0)


def test_loss_single_phase_scalar_case():
    net = make_network([(0, 1, single_phase_z(0.1))], phases=(0,))
    op = op_at(net, P=[[ [1.0], [0.0], [0.0] ]])
    p_loss, q_loss, dv = loss_terms(op, net, 0, 1)
    assert abs(p_loss[0] - 0.1) < 1e-12  # r * P^2 / v
    assert abs(q_loss[0]) < 1e-12
    assert abs(dv[0] - 0.01) < 1e-12  # |z S / v|^2


def test_loss_balanced_diagonal_matches_scalar():
    z = np.diag([0.05 + 0.02j] * 3)
    net = make_network([(0, 1, z)])
    op = op_at(net, P=np.full((1, 3, 1), 0.4), Q=np.full((1, 3, 1), 0.1))
    p_loss, q_loss, dv = loss_terms(op, net, 0, 1)
    s2 = 0.4 ** 2 + 0.1 ** 2
    assert np.allclose(p_loss, 0.05 * s2)
    assert np.allclose(q_loss, 0.02 * s2)
    w = (0.05 + 0.02j) * (0.4 - 0.1j)
    assert np.allclose(dv, abs(w) ** 2)


def test_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(11)
    net = random_radial_network(rng, 4)
    step = 1e-6
    worst = 0.0
    for _ in range(20):
        op = op_at(net, P=rng.uniform(-0.5, 0.5, (3, 3, 1)), Q=rng.uniform(-0.5, 0.5, (3, 3, 1)),
                   v=rng.uniform(0.9, 1.1, (4, 3, 1)))
        li = int(rng.integers(0, 3))
        gpp, gpq, gqp, gqq, Gvp, Gvq = loss_gradients(op, net, li, 1)
        for ph in range(3):
            for arr, diag, dense_col in ((op.p_flow, (gpp, gqp), Gvp), (op.q_flow, (gpq, gqq), Gvq)):
                arr[li, ph, 0] += step
                p_hi, q_hi, dv_hi = loss_terms(op, net, li, 1)
                arr[li, ph, 0] -= 2 * step
                p_lo, q_lo, dv_lo = loss_terms(op, net, li, 1)
                arr[li, ph, 0] += step
                fd_p = (p_hi - p_lo)[ph] / (2 * step)
                fd_q = (q_hi - q_lo)[ph] / (2 * step)
                fd_v = (dv_hi - dv_lo) / (2 * step)
                scale = 1.0 + abs(diag[0][ph])
                worst = max(worst, abs(fd_p - diag[0][ph]) / scale)
                worst = max(worst, abs(fd_q - diag[1][ph]) / (1.0 + abs(diag[1][ph])))
                denom = 1.0 + np.abs(dense_col[:, ph])
                worst = max(worst, float(np.max(np.abs(fd_v - dense_col[:, ph]) / denom)))
    assert worst < 1e-5


def test_taylor_residual_is_second_order():
    rng = np.random.default_rng(5)
    net = random_radial_network(rng, 3)
    op = op_at(net, P=rng.uniform(0.1, 0.4, (2, 3, 1)), Q=rng.uniform(0.0, 0.2, (2, 3, 1)))
    li = 0
    p0, q0, dv0 = loss_terms(op, net, li, 1)
    gpp, gpq, _, _, Gvp, Gvq = loss_gradients(op, net, li, 1)
    errs = []
    for delta in (1e-2, 5e-3, 2.5e-3):
        dP = np.full(3, delta)
        dQ = np.full(3, 0.5 * delta)
        op2 = op_at(net, P=op.p_flow + dP[None, :, None], Q=op.q_flow + dQ[None, :, None])
        p1, _, dv1 = loss_terms(op2, net, li, 1)
        lin = p0 + gpp * dP + gpq * dQ
        lin_v = dv0 + Gvp @ dP + Gvq @ dQ
        errs.append(max(np.max(np.abs(p1 - lin)), np.max(np.abs(dv1 - lin_v))) / delta ** 2)
    assert max(errs) < 10.0  # bounded ratio => O(delta^2) residual


def test_zero_op_point_reduces_to_lossless_lindistflow():
    z = np.diag([0.03 + 0.04j] * 3)
    net = make_network([(0, 1, z)])
    varmap = VariableMap()
    register_network_variables(net, varmap)
    system = LinearSystem(varmap)
    injections = {(1, ph): InjectionExpr(p_const=0.2, q_const=0.1) for ph in range(3)}
    injections.update({(0, ph): InjectionExpr() for ph in range(3)})
    linearize(OperatingPoint.flat(1, 2, 1), net, 1, injections, system)
    A_eq, b_eq, _, _ = system.matrices()
    labels = [format_label(l) for l in system.eq_labels]
    # voltage rows: v_child - v_parent + 2 r P + 2 x Q = 0 for the diagonal z
    for ph in range(3):
        i = labels.index(f"voltage[bus=1,phase={'abc'[ph]},t=1]")
        row = A_eq.getrow(i).toarray().ravel()
        assert abs(b_eq[i]) < 1e-15
        assert abs(row[v_col(varmap, 1, ph, 1)] - 1.0) < 1e-15
        assert abs(row[v_col(varmap, 0, ph, 1)] + 1.0) < 1e-15
        off_p = varmap.offset(("fp", 0)) + ph
        off_q = varmap.offset(("fq", 0)) + ph
        assert abs(row[off_p] - 2 * 0.03) < 1e-15
        assert abs(row[off_q] - 2 * 0.04) < 1e-15


def test_lossless_rows_conserve_power():
    rng = np.random.default_rng(6)
    net = random_radial_network(rng, 6)
    varmap = VariableMap()
    register_network_variables(net, varmap)
    system = LinearSystem(varmap)
    crit = rng.uniform(0.0, 0.1, (6, 3))
    injections = {}
    for bus in net.buses:
        for ph in range(3):
            injections[(bus.id, ph)] = InjectionExpr(p_const=0.0 if bus.id == 0 else crit[bus.id, ph])
    linearize(OperatingPoint.flat(5, 6, 1), net, 1, injections, system)
    A_eq, b_eq, _, _ = system.matrices()
    root_lines = [li for li, ln in enumerate(net.lines) if ln.from_bus == 0]
    for ph in range(3):
        rows = [i for i, lab in enumerate(system.eq_labels) if lab[0] == "flow_p" and lab[2] == ph]
        combined = np.asarray(A_eq[rows].sum(axis=0)).ravel()
        rhs = sum(b_eq[i] for i in rows)
        # everything cancels except the root sending-end flows
        expect = np.zeros(varmap.size)
        for li in root_lines:
            expect[varmap.offset(("fp", li)) + ph] = 1.0
        assert np.allclose(combined, expect, atol=1e-12)
        assert abs(rhs - crit[1:, ph].sum()) < 1e-12


def test_security_bounds_and_slack_row():
    net_si = make_network([(0, 1, single_phase_z(17.3))], per_unit=False)
    object.__setattr__(net_si, "v_ref_kv", 4.16)
    object.__setattr__(net_si, "v_min_kv", np.full(2, 4.05))
    object.__setattr__(net_si, "v_max_kv", np.full(2, 4.37))
    net = to_per_unit(net_si)
    varmap = VariableMap()
    register_network_variables(net, varmap)
    system = LinearSystem(varmap)
    boxes = security_rows(net, 1, system)
    lo = system.lb[v_col(varmap, 1, 0, 1)]
    assert abs(lo - (4.05 / 4.16) ** 2) < 1e-9
    assert abs(lo - 0.9478) < 5e-5
    # no flow limits configured -> no flow boxes emitted
    assert all(box[0] == "voltage_box" for box in boxes)
    injections = {(b.id, ph): InjectionExpr() for b in net.buses for ph in range(3)}
    linearize(OperatingPoint.flat(1, 2, 1), net, 1, injections, system)
    slack_rows = [i for i, lab in enumerate(system.eq_labels) if lab[0] == "slack"]
    _, b_eq, _, _ = system.matrices()
    assert all(abs(b_eq[i] - 1.0) < 1e-15 for i in slack_rows)


def test_linear_model_tracks_exact_pf_small_loads():
    rng = np.random.default_rng(7)
    for trial in range(4):
        n = int(rng.integers(3, 8))
        net = random_radial_network(rng, n)
        s = rng.uniform(0, 0.05, (n, 3, 1)) * np.exp(1j * rng.uniform(0, 0.5, (n, 3, 1)))
        s[0] = 0.0
        op = OperatingPoint.flat(n - 1, n, 1)
        state = linear_state(net, op, s)
        V, _, _, _ = _sweep(net, s, tol=1e-12)
        v_exact = np.abs(V[:, :, 0]) ** 2
        assert np.max(np.abs(state.v_sq[:, :, 0] - v_exact)) < 0.005


def test_nodal_injection_expressions():
    from dlcflow.network import Bus, DgUnit
    import dataclasses

    rng = np.random.default_rng(8)
    net = random_radial_network(rng, 3, horizon=2)
    dg = DgUnit(id=0, bus=2, phase=1, p_max=np.array([5.0, 6.0]) / 1000.0, q_min=-3.0, q_max=3.0)
    buses = list(net.buses)
    buses[2] = dataclasses.replace(buses[2], attached_dg=0)
    net = dataclasses.replace(net, buses=tuple(buses), dg_units=(dg,))
    varmap = VariableMap()
    varmap.register(("qg", 0), 2)
    exprs = nodal_injections(net, households=(), varmap=varmap, t=1, s_base_kva=1000.0)
    e = exprs[(2, 1)]
    assert abs(e.p_const + 5.0 / 1000.0) < 1e-15  # generation enters negatively
    assert e.q_terms == [(varmap.offset(("qg", 0)), -1.0)]
    assert exprs[(1, 0)].p_terms == []
