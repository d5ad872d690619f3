"""End-to-end tests of the command-line interface.

Every command is exercised through click's test runner against the shipped
catalog and against hand-written TOML specs, including all four documented
exit codes and the byte-level determinism of the JSON reports.
"""

import json

try:
    import tomllib
except ModuleNotFoundError:                       # python < 3.11
    import tomli as tomllib

import numpy as np
import pytest
from click.testing import CliRunner

from relaff import catalog, cli
from relaff.systems import SystemDef


@pytest.fixture()
def runner():
    return CliRunner()


def _invoke(runner, *args):
    return runner.invoke(cli.main, [str(a) for a in args])


def _read_report(out_dir, name):
    path = out_dir / name
    assert path.exists(), f"missing report {name}"
    return json.loads(path.read_text()), path


# ---------------------------------------------------------------------------
# plumbing units


def test_parse_grid_forms():
    assert cli.parse_grid(None, 2) == (10, 10)
    assert cli.parse_grid("12", 2) == (12, 12)
    assert cli.parse_grid("20x10", 2) == (20, 10)
    for bad in ("7x", "x", "3x3x3", "1", "0x5"):
        with pytest.raises(cli.SpecError):
            cli.parse_grid(bad, 2)


def test_orders_flag_validation():
    assert cli._orders(None) is None
    assert cli._orders(4) == (4, 3, 4)
    with pytest.raises(cli.SpecError, match="at least 3"):
        cli._orders(2)


def test_sanitize_handles_numpy_and_nonfinite():
    out = cli.sanitize({
        "inf": np.float64("inf"),
        "nan": float("nan"),
        "arr": np.arange(3),
        "num": np.float64(2.5),
        "flag": np.bool_(True),
        "nested": [np.int64(7), {"k": -np.inf}],
    })
    assert out["inf"] == "inf"
    assert out["nan"] == "nan"
    assert out["arr"] == [0, 1, 2]
    assert out["num"] == 2.5
    assert out["flag"] is True
    assert out["nested"] == [7, {"k": "-inf"}]
    # the result must be strict JSON
    json.dumps(out, allow_nan=False)


def test_emit_toml_round_trips_catalog_specs():
    for name in catalog.names():
        spec = catalog.get(name).to_spec_dict()
        parsed = tomllib.loads(cli.emit_toml(spec))
        assert parsed == spec, name
        SystemDef.from_dict(parsed)


def test_load_runspec_resolves_catalog_names():
    system, data, label = cli.load_runspec("sw1")
    assert system.name == "sw1"
    assert label == "catalog:sw1"
    assert "immersion" in data


# ---------------------------------------------------------------------------
# exit codes


def test_unknown_spec_is_exit_2(runner):
    res = _invoke(runner, "verify", "no-such-system")
    assert res.exit_code == 2
    assert "catalog" in res.stderr


def test_missing_file_is_exit_3(runner, tmp_path):
    res = _invoke(runner, "verify", tmp_path / "absent.toml")
    assert res.exit_code == 3


def test_broken_toml_is_exit_2(runner, tmp_path):
    bad = tmp_path / "broken.toml"
    bad.write_text("[system\nname = ")
    res = _invoke(runner, "verify", bad)
    assert res.exit_code == 2
    assert "TOML" in res.stderr


def test_invalid_definition_is_exit_2(runner, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text(
        '[system]\nname = "b"\ncoordinates = ["x", "y"]\n'
        'domain = [[0.0, 1.0], [0.0, 1.0]]\n'
        '[metric]\nxx = "1 +* y"\nyy = "1"\n'
        '[cubic]\n[scalar]\nt = "0"\n')
    res = _invoke(runner, "verify", bad)
    assert res.exit_code == 2
    assert "invalid system definition" in res.stderr


def _tampered_spec(tmp_path):
    spec = catalog.get("sw1").to_spec_dict()
    spec["cubic"] = {k: f"1.1*({v})" for k, v in spec["cubic"].items()}
    spec["system"]["name"] = "sw1-tampered"
    path = tmp_path / "tampered.toml"
    path.write_text(cli.emit_toml(spec))
    return path


def test_failed_check_is_exit_1(runner, tmp_path):
    res = _invoke(runner, "verify", _tampered_spec(tmp_path),
                  "--grid", "4", "--samples", "10", "--out", tmp_path)
    assert res.exit_code == 1
    assert "FAIL" in res.output


def test_bad_grid_flag_is_exit_2(runner):
    res = _invoke(runner, "verify", "sw1", "--grid", "3x3x3")
    assert res.exit_code == 2


def test_low_order_flag_is_exit_2(runner):
    res = _invoke(runner, "verify", "sw1", "--order", "2")
    assert res.exit_code == 2


# ---------------------------------------------------------------------------
# verify / build / integrability


def test_verify_catalog_name(runner, tmp_path):
    res = _invoke(runner, "verify", "sw1", "--grid", "4", "--samples", "10",
                  "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "PASS" in res.output
    report, _ = _read_report(tmp_path, "verify-sw1.json")
    assert report["schema_version"] == 1
    assert report["command"] == "verify"
    assert report["system"] == "sw1"
    assert report["verification"]["pass"] is True


def test_verify_spec_file_round_trip(runner, tmp_path):
    res = _invoke(runner, "catalog", "get", "sw2", "--out", tmp_path)
    assert res.exit_code == 0
    spec_path = tmp_path / "sw2.toml"
    assert spec_path.exists()
    res = _invoke(runner, "verify", spec_path, "--grid", "4",
                  "--samples", "10", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    report, _ = _read_report(tmp_path, "verify-sw2.json")
    assert report["spec"] == str(spec_path)


def test_verify_reports_are_deterministic(runner, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        res = _invoke(runner, "verify", "sw1", "--grid", "4",
                      "--samples", "10", "--out", out)
        assert res.exit_code == 0
    assert ((a / "verify-sw1.json").read_bytes()
            == (b / "verify-sw1.json").read_bytes())


def test_build_dumps_fields(runner, tmp_path):
    res = _invoke(runner, "build", "ho-2", "--grid", "3", "--samples", "5",
                  "--out", tmp_path)
    assert res.exit_code == 0, res.output
    report, _ = _read_report(tmp_path, "build-harmonic-oscillator-2.json")
    fields = report["fields"]
    npts = 9
    assert np.asarray(fields["points"]).shape == (npts, 2)
    assert np.asarray(fields["G"]).shape == (npts, 2, 2)
    assert np.asarray(fields["C"]).shape == (npts, 2, 2, 2)
    assert np.asarray(fields["trA"]).shape == (npts,)
    # flat paraboloid: G = id, A = 0
    assert np.allclose(fields["G"], np.eye(2))
    assert np.max(np.abs(fields["trA"])) < 1e-12


def test_build_gate_and_force(runner, tmp_path):
    spec = _tampered_spec(tmp_path)
    res = _invoke(runner, "build", spec, "--grid", "3", "--samples", "5",
                  "--out", tmp_path)
    assert res.exit_code == 1
    assert "structure equations" in res.stderr
    # --force still dumps the fields but keeps the honest exit code
    res = _invoke(runner, "build", spec, "--grid", "3", "--samples", "5",
                  "--force", "--out", tmp_path)
    assert res.exit_code == 1
    report, _ = _read_report(tmp_path, "build-sw1-tampered.json")
    assert report["verification"]["pass"] is False
    assert "fields" in report


def test_integrability_command(runner, tmp_path):
    res = _invoke(runner, "integrability", "sw1", "--grid", "4",
                  "--samples", "10", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    report, _ = _read_report(tmp_path, "integrability-sw1.json")
    assert report["integrability"]["pass"] is True
    assert report["abundance"]["pass"] is True


# ---------------------------------------------------------------------------
# reconstruct


def test_reconstruct_command(runner, tmp_path):
    res = _invoke(runner, "reconstruct", "ho-2", "--grid", "5",
                  "--step", "5e-3", "--samples", "10", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    report, _ = _read_report(tmp_path,
                             "reconstruct-harmonic-oscillator-2.json")
    assert report["holonomy"] < 1e-7
    assert report["quadric"]["ratio"] < 1e-8
    assert report["affine_reference"]["rms"] < 1e-6
    assert np.asarray(report["immersion"]).shape == (25, 3)
    mesh = tmp_path / "harmonic-oscillator-2.obj"
    assert mesh.exists()
    text = mesh.read_text()
    assert text.count("v ") == 25
    assert text.count("f ") == 2 * 16


# ---------------------------------------------------------------------------
# classify


def test_classify_command(runner, tmp_path):
    res = _invoke(runner, "classify", "sw1", "--grid", "4",
                  "--samples", "10", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    report, _ = _read_report(tmp_path, "classify-sw1.json")
    assert report["coherence"]["graph-route-agreement"] is True
    assert report["coherence"]["sphere-route-agreement"] is True
    verdicts = {k: v["verdict"]
                for k, v in report["predicates"]["predicates"].items()}
    assert verdicts == {"blaschke": "false", "quadric": "false",
                        "sphere": "true", "improper": "true",
                        "graph": "true"}


def test_classify_includes_perfect_square_in_3d(runner, tmp_path):
    res = _invoke(runner, "classify", "ho-3", "--grid", "3",
                  "--samples", "10", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    report, _ = _read_report(tmp_path,
                             "classify-harmonic-oscillator-3.json")
    ps = report["perfect_square"]
    assert ps["preconditions"] == "satisfied"
    assert ps["residual"] < 1e-10


# ---------------------------------------------------------------------------
# conformal


def test_conformal_command_with_flag(runner, tmp_path):
    res = _invoke(runner, "conformal", "sw1", "--omega", "1 + x/4",
                  "--grid", "3", "--samples", "5", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    report, _ = _read_report(tmp_path, "conformal-sw1.json")
    assert report["compatibility"]["pass"] is True
    assert report["invariance"]["pass"] is True
    assert report["omega"] == "1 + x/4"


def test_conformal_reads_spec_table(runner, tmp_path):
    spec = catalog.get("sw1").to_spec_dict()
    spec["conformal"] = {"omega": "exp(x/5)"}
    path = tmp_path / "sw1c.toml"
    path.write_text(cli.emit_toml(spec))
    res = _invoke(runner, "conformal", path, "--grid", "3",
                  "--samples", "5", "--out", tmp_path)
    assert res.exit_code == 0, res.output
    report, _ = _read_report(tmp_path, "conformal-sw1.json")
    assert report["omega"] == "exp(x/5)"


def test_conformal_requires_a_factor(runner, tmp_path):
    res = _invoke(runner, "conformal", "sw1", "--out", tmp_path)
    assert res.exit_code == 2
    assert "omega" in res.stderr


def test_conformal_rejects_nonpositive_factor(runner, tmp_path):
    res = _invoke(runner, "conformal", "sw1", "--omega", "x - 1",
                  "--grid", "3", "--samples", "5", "--out", tmp_path)
    assert res.exit_code == 1
    assert "positive" in res.stderr


# ---------------------------------------------------------------------------
# catalog subcommands


def test_catalog_list(runner):
    res = _invoke(runner, "catalog", "list")
    assert res.exit_code == 0
    for name in catalog.names():
        assert name in res.output


def test_catalog_get_unknown_is_exit_2(runner, tmp_path):
    res = _invoke(runner, "catalog", "get", "nope", "--out", tmp_path)
    assert res.exit_code == 2


def test_catalog_export_writes_everything(runner, tmp_path):
    res = _invoke(runner, "catalog", "export", "--out", tmp_path)
    assert res.exit_code == 0
    for name in catalog.names():
        path = tmp_path / f"{name}.toml"
        assert path.exists()
        SystemDef.from_dict(tomllib.loads(path.read_text()))
