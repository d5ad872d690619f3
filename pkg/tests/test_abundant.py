"""Tests for the abundant-structure condition checker.

Oracles: the catalog's closed-form systems (which must satisfy every
condition identically), hand-derived trace identities, and explicit
perturbations that must be rejected.
"""

import numpy as np
import pytest

from relaff import abundant, catalog, tensor
from relaff.exprlang import parse
from relaff.systems import SystemDef


def _variant(name: str, *, scale_S: float = 1.0, t_shift: float = 0.0) -> SystemDef:
    spec = catalog.get(name).to_spec_dict()
    if scale_S != 1.0:
        spec["cubic"] = {k: f"{scale_S}*({v})" for k, v in spec["cubic"].items()}
    if t_shift != 0.0:
        spec["scalar"] = {"t": f"({spec['scalar']['t']}) + {t_shift}"}
    return SystemDef.from_dict(spec)


def _fields(name: str, count: int = 40, seed: int = 11) -> abundant.Fields:
    system = catalog.get(name).system
    return abundant.Fields(system, system.sample(count, seed))


# ---------------------------------------------------------------------------
# the conditions hold on valid closed forms and reject tampered ones


def test_flat_trivial_systems_are_exact():
    for name in ("harmonic-oscillator-2", "harmonic-oscillator-3"):
        report = abundant.verify_conditions(catalog.get(name).system,
                                            grid=5, samples=40)
        assert report["pass"]
        for group in ("conditions", "preconditions", "cross_checks"):
            for item in report[group].values():
                assert item["residual"] < 1e-12


def test_scaled_cubic_is_rejected_2d():
    report = abundant.verify_conditions(_variant("sw1", scale_S=1.1),
                                        grid=4, samples=20)
    assert not report["pass"]
    assert max(item["residual"]
               for item in report["conditions"].values()) > 1e-3


def test_scaled_cubic_is_rejected_nd():
    report = abundant.verify_conditions(_variant("sw1-3d", scale_S=1.1),
                                        grid=3, samples=20)
    assert not report["pass"]
    assert max(item["residual"]
               for item in report["conditions"].values()) > 1e-3


def test_constant_shift_of_t_is_immaterial():
    base = abundant.verify_conditions(_variant("sw1"), grid=4, samples=20)
    shifted = abundant.verify_conditions(_variant("sw1", t_shift=0.37),
                                         grid=4, samples=20)
    assert shifted["pass"]
    for key, item in base["conditions"].items():
        assert abs(item["residual"] - shifted["conditions"][key]["residual"]) < 1e-12


def test_report_shape():
    report = abundant.verify_conditions(catalog.get("sw1").system,
                                        grid=4, samples=10)
    assert report["regime"] == "2d"
    assert report["dimension"] == 2
    assert set(report["conditions"]) == {
        "derivative-of-s", "derivative-of-sha", "tau-trace-free",
        "tau-symmetric", "divergence-of-tau"}
    report = abundant.verify_conditions(catalog.get("ho-3").system,
                                        grid=3, samples=10)
    assert report["regime"] == "nd"
    assert set(report["conditions"]) == {
        "hessian-of-t", "derivative-of-s", "weyl-flatness"}
    assert set(report["cross_checks"]) == {
        "derivative-of-s-explicit", "divergence-of-s", "codazzi-of-ds",
        "weyl-via-connection"}


def test_domain_errors_exclude_points():
    system = catalog.get("sw1").system
    good = system.sample(10, 0)
    bad = np.array([[0.0], [1.0]])  # 1/x and ln(x) blow up at x = 0
    pts = np.concatenate([good, bad], axis=1)
    report = abundant.verify_conditions(system, pts)
    assert report["excluded_points"] == 1
    assert report["points"] == 10
    assert report["pass"]


# ---------------------------------------------------------------------------
# derived tensors and identities


def test_structure_tensor_traces():
    for name in ("sw1", "sw1-3d"):
        F = _fields(name)
        n = F.n
        T = abundant.structure_tensor(F)
        tr12 = tensor.trace(T, F.ginv, (0, 1))
        assert abundant.sup(tr12) < 1e-13
        tr23 = tensor.trace(T, F.ginv, (1, 2))
        assert abundant.sup(tr23 - (n + 1 - 2.0 / n) * F.dt) < 1e-13


def test_s1_tensor_requires_nd():
    with pytest.raises(ValueError):
        abundant.s1_tensor(_fields("sw1"))


def test_sha_requires_2d():
    with pytest.raises(ValueError):
        abundant.sha_beta_eta(_fields("sw1-3d"))
    out = abundant.sha_beta_eta(_fields("sw2"))
    assert set(out) == {"sha", "beta", "eta"}
    # sha is symmetric and trace-free by construction on valid data
    F = _fields("sw2")
    assert abundant.sup(F.sha - np.swapaxes(F.sha, 0, 1)) < 1e-12
    assert abundant.sup(np.einsum('ijB,ijB->B', F.ginv, F.sha)) < 1e-12


def test_tau_is_trace_free_and_symmetric_nd():
    F = _fields("sw1-3d")
    tau = abundant.tau(F)
    assert abundant.sup(np.einsum('ijB,ijB->B', F.ginv, tau)) < 1e-12
    assert abundant.sup(tau - np.swapaxes(tau, 0, 1)) < 1e-12


def test_divergence_of_s_identity():
    """3 div S = (2n/(n-2)) scrS - n S(grad t) - (2/(n-2)) |S|^2 g follows
    from the derivative condition; independent contraction cross-check."""
    for name in ("sw1-3d", "ho-3", "ho-4"):
        F = _fields(name, count=30)
        n = F.n
        lhs = 3.0 * F.divS
        rhs = ((2.0 * n / (n - 2)) * F.scrS - n * F.S_gradt
               - (2.0 / (n - 2)) * F.S2 * F.g)
        assert abundant.sup(lhs - rhs) < 1e-8


def test_symmetrized_derivative_identity():
    """Pi_Sym4_0 (nabla S) = 1/3 Pi_Sym4_0 (frakS + 4 S (x) dt)."""
    for name in ("sw1-3d", "ho-3", "ho-4"):
        F = _fields(name, count=30)
        lhs = tensor.sym0_4(F.dS, F.g, F.ginv)
        core = (F.frakS
                + 4.0 * F.S[:, :, :, None, :] * F.dt[None, None, None, :, :])
        rhs = tensor.sym0_4(core, F.g, F.ginv) / 3.0
        assert abundant.sup(lhs - rhs) < 1e-8


def test_codazzi_part_of_derivative_vanishes():
    for name in ("sw1-3d", "ho-3", "ho-4"):
        F = _fields(name, count=30)
        assert abundant.sup(tensor.codazzi0(F.dS_first, F.g, F.ginv)) < 1e-8


def test_appendix_forms_are_wired_as_cross_checks():
    report = abundant.verify_conditions(catalog.get("sw1-3d").system,
                                        grid=3, samples=20)
    for key in ("divergence-of-s", "codazzi-of-ds",
                "derivative-of-s-explicit"):
        assert report["cross_checks"][key]["residual"] < 1e-10, key


def test_appendix_forms_reject_random_data():
    from conftest import random_system
    system = random_system(7, n=3)
    F = abundant.Fields(system, system.sample(30, seed=0))
    assert abundant.sup(abundant.cubic_divergence_residual(F)) > 1e-3
    assert abundant.sup(abundant.cubic_codazzi_residual(F)) > 1e-3


def test_appendix_forms_require_nd():
    F = _fields("sw1", count=5)
    with pytest.raises(ValueError):
        abundant.cubic_divergence_residual(F)
    with pytest.raises(ValueError):
        abundant.cubic_codazzi_residual(F)


# ---------------------------------------------------------------------------
# potential compatibility equation (n >= 3)


def test_potential_equation_accepts_admissible_potentials():
    ho3 = catalog.get("ho-3").system
    pts = ho3.sample(50, 1)
    V = parse("1.5*(x1^2+x2^2+x3^2) + 0.25*x1 - 2*x2 + 0.75*x3 + 4")
    assert abundant.verify_potential_equation(ho3, V, pts) < 1e-11

    sw13 = catalog.get("sw1-3d").system
    pts = sw13.sample(50, 2)
    V = parse("0.8*(x^2+y^2+z^2) + 1.1/x^2 + 0.6/y^2 + 2.2/z^2 + 3")
    assert abundant.verify_potential_equation(sw13, V, pts) < 1e-10


def test_potential_equation_rejects_inadmissible_potential():
    ho3 = catalog.get("ho-3").system
    pts = ho3.sample(50, 1)
    assert abundant.verify_potential_equation(ho3, parse("x1^3"), pts) > 0.1


def test_potential_equation_rejects_dimension_two():
    sw1 = catalog.get("sw1").system
    with pytest.raises(ValueError):
        abundant.verify_potential_equation(sw1, parse("x^2+y^2"),
                                           sw1.sample(5, 0))
