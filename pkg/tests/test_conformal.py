"""Tests for conformal rescaling.

Oracles: the closed-form transformation laws cross-checked against the
symbolic route (two independent computations of the same fields), the
explicit standard-scale factor of the sw1 system, and affine equivalence
of independently reconstructed immersions.
"""

import numpy as np
import pytest

from relaff import abundant, catalog, conformal, reconstruct
from relaff.abundant import sup
from relaff.conformal import ConformalFactor
from relaff.hypersurface import HypersurfaceData, SurfaceFields


def _system(name):
    return catalog.get(name).system


def _random_omega(system, seed):
    """A strictly positive low-degree polynomial factor, seeded."""
    rng = np.random.default_rng(seed)
    terms = ["1.5"]
    for c in system.coords:
        terms.append(f"{rng.uniform(-0.05, 0.05):+.6f}*{c}")
    for i, a in enumerate(system.coords):
        for b in system.coords[i:]:
            terms.append(f"{rng.uniform(-0.03, 0.03):+.6f}*{a}*{b}")
    return " ".join(terms)


# ---------------------------------------------------------------------------
# the factor object itself


def test_factor_accepts_strings_expressions_and_factors():
    om = ConformalFactor("1 + x^2")
    assert om.source == "1 + x^2"
    assert ConformalFactor(om).source == om.source
    assert ConformalFactor(om.expr).source == om.source


def test_factor_values_and_upsilon():
    system = _system("sw1")
    om = ConformalFactor("exp(x)")
    pts = system.sample(30, seed=3)
    assert sup(om(system, pts) - np.exp(pts[0])) < 1e-14
    ups = np.stack([j.value for j in om.upsilon_jets(system, pts, 0)])
    # d ln exp(x) = dx
    assert sup(ups[0] - 1.0) < 1e-14
    assert sup(ups[1]) < 1e-14


def test_validate_rejects_sign_changes_and_blowups():
    system = _system("sw1")
    with pytest.raises(ValueError, match="positive"):
        ConformalFactor("x - 1").validate(system)
    # a legitimate factor reports its sampled minimum
    assert ConformalFactor("x*y").validate(system) > 0.2


@pytest.mark.filterwarnings("ignore:overflow")
def test_validate_rejects_nonfinite_values():
    system = _system("sw1")
    with pytest.raises(ValueError, match="finite"):
        ConformalFactor("exp(1000*x)").validate(system)


def test_rescale_checks_positivity_unless_disabled():
    system = _system("sw1")
    with pytest.raises(ValueError, match="positive"):
        conformal.rescale_abundant(system, "x - 1")
    # check=False builds the definition without sampling it
    bad = conformal.rescale_abundant(system, "x - 1", check=False)
    assert bad.meta["conformal_factor"] == "x - 1"


def test_rescaled_system_metadata():
    system = _system("sw1")
    out = conformal.rescale_abundant(system, "1 + x/3")
    assert out.name == "sw1-rescaled"
    assert out.meta["conformal_factor"] == "1 + x/3"
    named = conformal.rescale_abundant(system, "1 + x/3", name="other")
    assert named.name == "other"


# ---------------------------------------------------------------------------
# dual-route agreement: symbolic rescaling vs closed-form laws


def test_compatibility_sw1_fixed_factor():
    report = conformal.verify_compatibility(
        _system("sw1"), "1 + x/2 + y^2/5", grid=5, samples=30)
    assert report["pass"]
    for key in ("G", "C", "U", "u", "A", "t"):
        assert report["fields"][key]["residual"] < 1e-12, key


def test_compatibility_3d_fixed_factor():
    report = conformal.verify_compatibility(
        _system("sw1-3d"), "2 - x/4 + y*z/10", grid=3, samples=20)
    assert report["pass"]
    assert all(v["residual"] < 1e-11 for v in report["fields"].values())


@pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("name", ["sw1", "ho-3"])
def test_compatibility_random_factors(name, seed):
    system = _system(name)
    om = ConformalFactor(_random_omega(system, seed))
    om.validate(system)
    report = conformal.verify_compatibility(system, om, grid=4, samples=20)
    assert report["pass"], report["fields"]
    assert all(v["residual"] < 1e-8 for v in report["fields"].values())


def test_identity_factor_is_a_no_op():
    system = _system("sw1")
    pts = system.sample(25, seed=7)
    F = SurfaceFields(system, pts)
    laws = conformal.transformed_fields(F, "1")
    for key, ref in (("G", F.g), ("C", F.C), ("U", F.U), ("u", F.u),
                     ("A", F.A), ("t", F.t_jet.value)):
        assert sup(laws[key] - ref) < 1e-14, key


def test_composition_matches_product_factor():
    system = _system("sw1")
    om1 = ConformalFactor("1 + x/4")
    om2 = ConformalFactor("exp(y/5)")
    once = conformal.rescale_abundant(
        system, om1.compose(om2), check=False)
    twice = conformal.rescale_abundant(
        conformal.rescale_abundant(system, om1, check=False), om2,
        check=False)
    pts = system.sample(40, seed=9)
    Fa = SurfaceFields(once, pts)
    Fb = SurfaceFields(twice, pts)
    assert sup(Fa.g - Fb.g) < 1e-10
    assert sup(Fa.C - Fb.C) < 1e-10
    assert sup(Fa.A - Fb.A) < 1e-10
    assert sup(Fa.t_jet.value - Fb.t_jet.value) < 1e-10


# ---------------------------------------------------------------------------
# the defining conditions are conformally invariant


def test_rescaled_system_still_abundant():
    for name, om in (("sw1", "1 + x/2 + y^2/5"),
                     ("sw1-3d", "2 - x/4 + y*z/10")):
        rescaled = conformal.rescale_abundant(_system(name), om)
        report = abundant.verify_conditions(rescaled, grid=4, samples=25)
        assert report["pass"], (name, report["conditions"])


def test_condition_residuals_are_stable_under_rescaling():
    system = _system("sw1")
    before = abundant.verify_conditions(system, grid=5, samples=30)
    rescaled = conformal.rescale_abundant(system, "1 + x/2 + y^2/5")
    after = abundant.verify_conditions(rescaled, grid=5, samples=30)
    for key, item in before["conditions"].items():
        shift = abs(after["conditions"][key]["residual"] - item["residual"])
        assert shift < 1e-8, key


# ---------------------------------------------------------------------------
# the standard scale


def test_standard_scale_factor_of_sw1():
    system = _system("sw1")
    rescaled, om = conformal.to_standard_scale(system)
    assert rescaled.name == "sw1-std"
    pts = system.sample(50, seed=2)
    # t = -3/4 ln(xy)  gives  Omega = exp(t/3) = (xy)^(-1/4)
    assert sup(om(system, pts) - (pts[0] * pts[1]) ** -0.25) < 1e-14


def test_standard_scale_kills_t_and_u():
    for name in ("sw1", "s7", "sw1-3d"):
        system = _system(name)
        rescaled, _ = conformal.to_standard_scale(system)
        pts = system.sample(30, seed=4)
        F = SurfaceFields(rescaled, pts)
        assert sup(F.t_jet.value) < 1e-12
        assert sup(F.u) < 1e-12  # apolarity: trace-free cubic form


def test_standard_scale_is_idempotent():
    system = _system("sw1")
    first, _ = conformal.to_standard_scale(system)
    second, om2 = conformal.to_standard_scale(first)
    pts = system.sample(30, seed=5)
    assert sup(om2(system, pts) - 1.0) < 1e-12
    Fa = SurfaceFields(first, pts)
    Fb = SurfaceFields(second, pts)
    assert sup(Fa.g - Fb.g) < 1e-12
    assert sup(Fa.C - Fb.C) < 1e-12


def test_standard_scale_system_verifies():
    rescaled, _ = conformal.to_standard_scale(_system("sw1"))
    report = abundant.verify_conditions(rescaled, grid=5, samples=30)
    assert report["pass"]


# ---------------------------------------------------------------------------
# the transversal law along reconstructed immersions


def test_transversal_transform_matches_independent_reconstruction():
    system = _system("sw1")
    om = ConformalFactor("1 + x/2 + y^2/5")
    hs1 = HypersurfaceData(system)
    hs2 = conformal.rescale_hypersurface(hs1, om)
    base = system.base_point()
    res1 = reconstruct.immerse_grid(hs1, per_axis=5, step=2e-3,
                                    base_point=base)
    res2 = reconstruct.immerse_grid(hs2, per_axis=5, step=2e-3,
                                    base_point=base)
    # the two immersions of the same surface differ by an affine map ...
    L, b, rms = reconstruct.affine_fit(res1.f, res2.f)
    assert rms < 1e-9
    # ... and the rescaled transversal is the pushforward of the
    # closed-form law through its linear part
    xi_law = conformal.transversal_transform(res1, om)
    assert sup(res2.xi - xi_law @ L.T) < 1e-9


def test_transversal_transform_rejects_nonpositive_factor():
    hs = HypersurfaceData(_system("sw1"))
    res = reconstruct.immerse_grid(hs, per_axis=3, step=5e-3)
    with pytest.raises(ValueError, match="positive"):
        conformal.transversal_transform(res, "x - 1")
