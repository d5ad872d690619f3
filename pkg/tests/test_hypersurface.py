"""Tests for hypersurface data: build gate, cubic split, structure
equations, dual-route Weingarten, and the recovery round trip.

Oracles: catalog closed forms must satisfy everything identically; the
cubic-split identities are pure algebra and must hold on arbitrary smooth
data; tampered Weingarten forms / non-solutions must be rejected loudly.
"""

import numpy as np
import pytest
from conftest import random_system as _random_system, raw_system as _raw_system

from relaff import catalog, hypersurface as hyp
from relaff.abundant import sup
from relaff.systems import SystemDef


def _hs(name: str) -> hyp.HypersurfaceData:
    return hyp.HypersurfaceData(catalog.get(name).system)


# ---------------------------------------------------------------------------
# build gate


def test_build_accepts_catalog_systems():
    hs = hyp.build_from_abundant(catalog.get("sw1").system, grid=5,
                                 samples=20)
    assert hs.report["pass"]
    assert hs.n == 2 and hs.name == "sw1"


def test_build_rejects_tampered_cubic_naming_conditions():
    spec = catalog.get("sw1").to_spec_dict()
    spec["cubic"] = {k: f"1.1*({v})" for k, v in spec["cubic"].items()}
    bad = SystemDef.from_dict(spec)
    with pytest.raises(ValueError) as err:
        hyp.build_from_abundant(bad, grid=4, samples=10)
    assert "derivative-of-s" in str(err.value)
    hs = hyp.build_from_abundant(bad, grid=4, samples=10, force=True)
    assert not hs.report["pass"]


# ---------------------------------------------------------------------------
# cubic decomposition


def _random_spd_cubic(seed: int, n: int = 3, B: int = 7):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(n, n, B))
    g = np.einsum('kaB,kbB->abB', M, M) + n * np.eye(n)[:, :, None]
    C = rng.normal(size=(n, n, n, B))
    C = (C + C.transpose(1, 0, 2, 3) + C.transpose(2, 1, 0, 3)
         + C.transpose(0, 2, 1, 3) + C.transpose(1, 2, 0, 3)
         + C.transpose(2, 0, 1, 3)) / 6.0
    return g, C


def test_decompose_recompose_round_trip():
    g, C = _random_spd_cubic(0)
    U, u = hyp.decompose_cubic(C, g)
    ginv = np.stack([np.linalg.inv(g[:, :, b]) for b in range(g.shape[-1])],
                    axis=-1)
    assert sup(np.einsum('abB,abkB->kB', ginv, U)) < 1e-12
    assert sup(hyp.recompose_cubic(U, u, g) - C) < 1e-12
    U2, u2 = hyp.decompose_cubic(hyp.recompose_cubic(U, u, g), g)
    assert sup(U2 - U) < 1e-12 and sup(u2 - u) < 1e-12


def test_decompose_rejects_asymmetric_input():
    g, C = _random_spd_cubic(1)
    C[0, 1, 2] += 0.5
    with pytest.raises(ValueError):
        hyp.decompose_cubic(C, g)


def test_cubic_split_identities_are_pure_algebra():
    # they hold on closed-form solutions *and* on arbitrary smooth data
    for system in (catalog.get("sw1").system, catalog.get("sw1-3d").system,
                   _random_system(5), _random_system(6, n=3)):
        F = hyp.SurfaceFields(system, system.sample(25, seed=2))
        for key, value in hyp.cubic_split_identities(F).items():
            assert value < 1e-10, (system.name, key, value)


# ---------------------------------------------------------------------------
# structure equations


@pytest.mark.parametrize("name", catalog.names())
def test_integrability_on_catalog(name):
    rep = hyp.verify_integrability(_hs(name), grid=4, samples=25)
    assert rep["pass"], {k: v for k, v in rep["conditions"].items()
                         if not v["pass"]}


@pytest.mark.parametrize("name", catalog.names())
def test_abundance_conditions_on_catalog(name):
    rep = hyp.verify_abundant_conditions(_hs(name), grid=4, samples=25)
    assert rep["pass"], {k: v for k, v in rep["conditions"].items()
                         if not v["pass"]}


def test_shifted_weingarten_breaks_integrability():
    rep = hyp.verify_integrability(_hs("sw1"), grid=4, samples=20,
                                   weingarten_shift=0.01)
    assert not rep["pass"]
    assert rep["weingarten_shift"] == 0.01
    worst = max(v["residual"] for v in rep["conditions"].values())
    assert worst > 1e-3


def test_random_data_fails_abundance_conditions():
    rep = hyp.verify_abundant_conditions(
        hyp.HypersurfaceData(_random_system(9, flat=True)),
        grid=4, samples=20)
    assert not rep["pass"]
    assert max(v["residual"] for v in rep["conditions"].values()) > 1e-3


def test_dual_connection_weingarten_route():
    for name in ("sw1", "s7", "sw1-3d"):
        system = catalog.get(name).system
        pts = system.sample(30, seed=4)
        F = hyp.SurfaceFields(system, pts)
        assert sup(F.A - hyp.weingarten_via_dual_curvature(
            hyp.HypersurfaceData(system), pts)) < 1e-10


def test_jet_order_override_changes_nothing():
    base = hyp.verify_integrability(_hs("sw2"), grid=4, samples=15)
    deep = hyp.verify_integrability(_hs("sw2"), grid=4, samples=15,
                                    orders=(4, 3, 4))
    for k, v in base["conditions"].items():
        assert abs(v["residual"] - deep["conditions"][k]["residual"]) < 1e-12


def test_jet_order_override_validates_minimums():
    with pytest.raises(ValueError):
        hyp.verify_integrability(_hs("sw2"), grid=3, samples=5,
                                 orders=(2, 2, 3))


# ---------------------------------------------------------------------------
# recovery round trip


@pytest.mark.parametrize("name", ("sw1", "harmonic-oscillator-3"))
def test_recover_reproduces_cubic_and_differential(name):
    system = catalog.get(name).system
    hs = hyp.build_from_abundant(system, grid=4, samples=15)
    rec = hyp.recover_abundant(hs, grid=6)
    pts = system.sample(40, seed=8)
    F = hyp.SurfaceFields(system, pts, g_order=1, s_order=0, t_order=1)
    assert sup(rec.S(pts) - F.S) < 1e-7
    assert sup(rec.dt(pts) - F.dt) < 1e-7


def test_recovered_t_matches_at_grid_nodes():
    system = catalog.get("sw1").system
    rec = hyp.recover_abundant(hyp.HypersurfaceData(system), grid=6)
    mesh = np.meshgrid(*rec.axes, indexing="ij")
    nodes = np.stack([m.reshape(-1) for m in mesh])
    t_true = system.t_jet(nodes, 0).value
    t_base = system.t_jet(rec.base_point[:, None], 0).value[0]
    assert sup(rec.t_grid.reshape(-1) - (t_true - t_base)) < 1e-9


def test_base_point_shift_is_a_constant_gauge():
    system = catalog.get("sw1").system
    hs = hyp.HypersurfaceData(system)
    rec1 = hyp.recover_abundant(hs, grid=5)
    rec2 = hyp.recover_abundant(hs, np.array([0.8, 1.6]), grid=5)
    diff = rec1.t_grid - rec2.t_grid
    assert float(np.var(diff)) < 1e-12


def test_trivial_trace_recovers_zero_t():
    rec = hyp.recover_abundant(_hs("harmonic-oscillator-2"), grid=5)
    assert sup(rec.t_grid) == 0.0


def test_recover_rejects_non_closed_trace_form():
    with pytest.raises(ValueError, match="closed"):
        hyp.recover_abundant(hyp.HypersurfaceData(_raw_system(12)),
                             grid=4)
