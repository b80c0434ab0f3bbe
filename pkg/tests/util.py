"""Small construction helpers shared by the tests."""

import numpy as np

from dlcflow.network import Bus, CostProfile, Line, Network


def zero_cost(T):
    z = np.zeros(T)
    return CostProfile(a=z, b=z, c=z)


def make_network(line_specs, horizon=1, phases=(0, 1, 2), v_min=0.90, v_max=1.10, per_unit=True):
    """Radial per-unit network from (from, to, z_complex_3x3) triples."""
    bus_ids = sorted({b for f, t, _ in line_specs for b in (f, t)} | {0})
    buses = tuple(
        Bus(
            id=b,
            phases_present=tuple(phases),
            attached_households=(),
            attached_dg=None,
            critical_p=np.zeros((3, horizon)),
            critical_q=np.zeros((3, horizon)),
        )
        for b in bus_ids
    )
    lines = tuple(
        Line(from_bus=f, to_bus=t, r=np.real(z), x=np.imag(z)) for f, t, z in line_specs
    )
    n = len(buses)
    return Network(
        buses=buses,
        lines=lines,
        dg_units=(),
        v_ref_kv=1.0,
        v_min_kv=np.full(n, v_min),
        v_max_kv=np.full(n, v_max),
        s_base_kva=1000.0,
        horizon=horizon,
        dt_h=1.0,
        pcc_cost=zero_cost(horizon),
        per_unit=per_unit,
    )


def single_phase_z(z_scalar):
    """3x3 impedance with only phase A present."""
    z = np.zeros((3, 3), dtype=complex)
    z[0, 0] = z_scalar
    return z


def random_radial_network(rng, n_buses, horizon=1):
    """Random tree with balanced-ish 3-phase impedances."""
    specs = []
    for b in range(1, n_buses):
        parent = int(rng.integers(0, b))
        r_d = rng.uniform(0.005, 0.03)
        x_d = rng.uniform(0.005, 0.03)
        zm = (r_d + 1j * x_d) * 0.3
        z = np.full((3, 3), zm, dtype=complex)
        np.fill_diagonal(z, r_d + 1j * x_d)
        specs.append((parent, b, z))
    return make_network(specs, horizon=horizon)
