"""Command-line front end: TOML run-specs in, JSON reports and meshes out.

    relaff verify SPEC          source-data structure equations
    relaff build SPEC           hypersurface data dump (+ verification)
    relaff integrability SPEC   structure equations of the built data
    relaff reconstruct SPEC     grid immersion, holonomy, fits, OBJ
    relaff classify SPEC        geometric predicates, dual-route coherence
    relaff conformal SPEC       rescaling laws vs symbolic rescaling
    relaff catalog list|get|export

SPEC is a TOML file or the name of a shipped catalog entry.  Reports are
deterministic JSON (schema_version 1, sorted keys) written into --out; exit
status is 0 when every requested check passed its tolerance, 1 on a failed
check, 2 on a malformed spec or flag, 3 on an I/O problem.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:                       # python < 3.11
    import tomli as tomllib

import click
import numpy as np

from . import __version__
from . import abundant, catalog, classify, conformal, hypersurface, reconstruct
from .exprlang import ExprSyntaxError, parse
from .systems import SystemDef, grid_points

SCHEMA_VERSION = 1


class SpecError(Exception):
    """Malformed run-spec or flag value (exit code 2)."""


# ---------------------------------------------------------------------------
# run-spec loading


def load_runspec(arg: str):
    """Resolve a CLI SPEC argument to (SystemDef, raw mapping, label).

    A path to a TOML file wins; otherwise the argument is looked up as a
    catalog entry name.
    """
    p = Path(arg)
    if p.exists():
        try:
            with open(p, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as err:
            raise SpecError(f"{arg}: TOML parse error: {err}") from err
        label = str(p)
    elif p.suffix == ".toml" or "/" in arg:
        raise OSError(f"spec file not found: {arg}")
    else:
        try:
            data = catalog.get(arg).to_spec_dict()
        except KeyError:
            raise SpecError(
                f"{arg!r} is neither a spec file nor a catalog entry "
                f"(catalog: {', '.join(catalog.names())})") from None
        label = f"catalog:{arg}"
    try:
        system = SystemDef.from_dict(data)
    except (ExprSyntaxError, ValueError, TypeError, KeyError) as err:
        raise SpecError(f"{arg}: invalid system definition: {err}") from err
    return system, data, label


def parse_grid(text: str | None, n: int, default: int = 10):
    """'12' or '20x20' (one count per axis) -> tuple of per-axis counts."""
    if text is None:
        return (default,) * n
    parts = text.lower().split("x")
    try:
        counts = tuple(int(v) for v in parts)
    except ValueError:
        raise SpecError(f"bad --grid value {text!r} (want N or NxM)") from None
    if len(counts) == 1:
        counts = counts * n
    if len(counts) != n or any(c < 2 for c in counts):
        raise SpecError(
            f"--grid {text!r} does not give one count >= 2 per axis (n={n})")
    return counts


def _lattice(system: SystemDef, counts) -> np.ndarray:
    axes = [np.linspace(lo, hi, c)
            for (lo, hi), c in zip(system.domain, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh])


def _points_for(system: SystemDef, counts, samples: int, seed: int):
    return np.concatenate(
        [_lattice(system, counts), system.sample(samples, seed)], axis=1)


def _orders(order: int | None):
    if order is None:
        return None
    if order < 3:
        raise SpecError("--order must be at least 3 (the structure "
                        "equations take three derivatives of the metric)")
    return (order, order - 1, order)


# ---------------------------------------------------------------------------
# report plumbing


def sanitize(obj):
    """JSON-ready copy: numpy scalars/arrays to builtins, non-finite floats
    to strings (reports stay valid, strict JSON)."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else repr(f)
    return obj


def envelope(command: str, label: str, system: SystemDef, seed: int,
             tolerances: dict, payload: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "generator": "relaff",
        "version": __version__,
        "command": command,
        "spec": label,
        "system": system.name,
        "dimension": system.n,
        "seed": seed,
        "tolerances": tolerances,
        **payload,
    }


def write_report(out: str, name: str, report: dict) -> Path:
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    text = json.dumps(sanitize(report), indent=2, sort_keys=True,
                      allow_nan=False)
    path.write_text(text + "\n")
    return path


def _echo_table(title: str, table: dict):
    click.echo(f"  {title}:")
    for key in sorted(table):
        row = table[key]
        mark = "ok  " if row.get("pass") else "FAIL"
        click.echo(f"    [{mark}] {key:32s} {row['residual']:.3e}")


def finish(report: dict, out: str, filename: str, passed: bool):
    path = write_report(out, filename, report)
    click.echo(f"report: {path}")
    click.echo("PASS" if passed else "FAIL")
    sys.exit(0 if passed else 1)


def guarded(fn):
    """Map exception classes to the documented exit codes."""
    def wrapper(*a, **k):
        try:
            return fn(*a, **k)
        except SpecError as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(2)
        except OSError as err:
            click.echo(f"i/o error: {err}", err=True)
            sys.exit(3)
        except ValueError as err:
            click.echo(f"check failed: {err}", err=True)
            sys.exit(1)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# the command group

_spec_arg = click.argument("spec")
_tol = click.option("--tol", type=float, default=1e-8, show_default=True,
                    help="residual tolerance")
_grid = click.option("--grid", "grid_text", default=None, metavar="N|NxM",
                     help="lattice counts per axis [default: 10]")
_seed = click.option("--seed", type=int, default=0, show_default=True,
                     help="seed for the random sample points")
_samples = click.option("--samples", type=int, default=100, show_default=True,
                        help="number of random sample points")
_order = click.option("--order", type=int, default=None,
                      help="jet order cap (>= 3); residuals must not change")
_out = click.option("--out", default=".", show_default=True,
                    help="directory for reports and meshes")
_force = click.option("--force", is_flag=True,
                      help="skip precondition gates and keep going")


@click.group()
@click.version_option(__version__, prog_name="relaff")
def main():
    """Numerical toolkit linking abundant structures to relative affine
    hypersurface normalizations."""


@main.command()
@_spec_arg
@_tol
@_grid
@_samples
@_seed
@_order
@_out
@guarded
def verify(spec, tol, grid_text, samples, seed, order, out):
    """Check the source-data structure equations of SPEC."""
    system, _, label = load_runspec(spec)
    counts = parse_grid(grid_text, system.n)
    pts = _points_for(system, counts, samples, seed)
    rep = abundant.verify_conditions(system, pts, tol=tol,
                                     orders=_orders(order))
    report = envelope("verify", label, system, seed, {"residual": tol},
                      {"verification": rep})
    _echo_table("conditions", rep["conditions"])
    _echo_table("preconditions", rep["preconditions"])
    _echo_table("cross-checks", rep["cross_checks"])
    finish(report, out, f"verify-{system.name}.json", rep["pass"])


@main.command()
@_spec_arg
@_tol
@_grid
@_samples
@_seed
@_order
@_force
@_out
@guarded
def build(spec, tol, grid_text, samples, seed, order, force, out):
    """Verify SPEC and dump the induced hypersurface fields on a lattice."""
    system, _, label = load_runspec(spec)
    counts = parse_grid(grid_text, system.n)
    pts = _points_for(system, counts, samples, seed)
    rep = abundant.verify_conditions(system, pts, tol=tol,
                                     orders=_orders(order))
    if not rep["pass"] and not force:
        failing = [k for k, v in rep["conditions"].items() if not v["pass"]]
        raise ValueError(
            "source data fails the structure equations "
            f"({', '.join(failing) or 'preconditions'}); --force to dump "
            "anyway")
    hs = hypersurface.HypersurfaceData(system, report=rep)
    lattice = _lattice(system, counts)
    F = hs.fields(lattice)
    dump = {
        "points": lattice.T,
        "G": np.moveaxis(F.g, -1, 0),
        "C": np.moveaxis(F.C, -1, 0),
        "U": np.moveaxis(F.U, -1, 0),
        "u": np.moveaxis(F.u, -1, 0),
        "A": np.moveaxis(F.A, -1, 0),
        "trA": F.trA,
    }
    report = envelope("build", label, system, seed, {"residual": tol},
                      {"verification": rep, "lattice": list(counts),
                       "fields": dump})
    finish(report, out, f"build-{system.name}.json", rep["pass"])


@main.command()
@_spec_arg
@_tol
@_grid
@_samples
@_seed
@_order
@_out
@guarded
def integrability(spec, tol, grid_text, samples, seed, order, out):
    """Check the structure equations of the built hypersurface data."""
    system, _, label = load_runspec(spec)
    counts = parse_grid(grid_text, system.n)
    pts = _points_for(system, counts, samples, seed)
    hs = hypersurface.HypersurfaceData(system)
    kw = dict(tol=tol, orders=_orders(order))
    rep_int = hypersurface.verify_integrability(hs, pts, **kw)
    rep_ab = hypersurface.verify_abundant_conditions(hs, pts, **kw)
    ok = rep_int["pass"] and rep_ab["pass"]
    report = envelope("integrability", label, system, seed,
                      {"residual": tol},
                      {"integrability": rep_int, "abundance": rep_ab})
    _echo_table("integrability", rep_int["conditions"])
    _echo_table("abundance", rep_ab["conditions"])
    finish(report, out, f"integrability-{system.name}.json", ok)


@main.command(name="reconstruct")
@_spec_arg
@click.option("--tol", type=float, default=1e-7, show_default=True,
              help="holonomy threshold")
@_grid
@click.option("--step", type=float, default=1e-3, show_default=True,
              help="chart step bound of the path integrator")
@_samples
@_seed
@_force
@_out
@guarded
def reconstruct_cmd(spec, tol, grid_text, step, samples, seed, force, out):
    """Integrate the immersion on a lattice; emit fits and an OBJ mesh."""
    system, data, label = load_runspec(spec)
    counts = parse_grid(grid_text, system.n, default=20)
    hs = hypersurface.build_from_abundant(system, force=force, grid=6,
                                          samples=samples, seed=seed)
    res = reconstruct.immerse_grid(hs, counts, step)
    holo = reconstruct.holonomy_residual(hs, step=step)
    payload = {
        "lattice": list(counts),
        "step": step,
        "base_point": res.base_point,
        "holonomy": holo,
        "nodes": res.nodes.T,
        "immersion": res.f,
        "transversal": res.xi,
    }
    mcount = (system.n + 2) * (system.n + 3) // 2
    if res.f.shape[0] >= 2 * mcount:
        coeffs, ratio = reconstruct.quadric_fit(res.f)
        payload["quadric"] = {"ratio": ratio, "coefficients": coeffs}
    ref = data.get("immersion", {}).get("components")
    if ref:
        exprs = [parse(src) for src in ref]
        env = system.env(res.nodes, 0)
        target = np.stack([e(env).value for e in exprs], axis=1)
        L, b, rms = reconstruct.affine_fit(res.f, target)
        payload["affine_reference"] = {
            "components": list(ref), "rms": rms, "map": L, "offset": b}
    if system.n == 2:
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        mesh_path = out_dir / f"{system.name}.obj"
        reconstruct.export_mesh(res, mesh_path)
        payload["mesh"] = mesh_path.name
        click.echo(f"mesh: {mesh_path}")
    click.echo(f"holonomy: {holo:.3e}  (threshold {tol:g})")
    if "quadric" in payload:
        click.echo(f"quadric ratio: {payload['quadric']['ratio']:.3e}")
    if "affine_reference" in payload:
        click.echo(f"reference fit rms: {payload['affine_reference']['rms']:.3e}")
    report = envelope("reconstruct", label, system, seed,
                      {"holonomy": tol}, payload)
    finish(report, out, f"reconstruct-{system.name}.json", holo < tol)


@main.command(name="classify")
@_spec_arg
@_tol
@_grid
@_samples
@_seed
@_order
@_force
@_out
@guarded
def classify_cmd(spec, tol, grid_text, samples, seed, order, force, out):
    """Evaluate the geometric predicates and their dual-route coherence."""
    system, _, label = load_runspec(spec)
    counts = parse_grid(grid_text, system.n)
    pts = _points_for(system, counts, samples, seed)
    hs = hypersurface.build_from_abundant(system, force=force, grid=6,
                                          samples=samples, seed=seed)
    rep = classify.classify_all(hs, pts, tol=tol, orders=_orders(order))
    graph_rep = classify.graph_conditions_from_abundant(system, pts, tol=tol)
    coherence = {
        "graph-route-agreement":
            rep["predicates"]["graph"]["verdict"] == graph_rep["graph"]
            != "inconclusive",
        "sphere-route-agreement":
            rep["predicates"]["sphere"]["verdict"]
            == rep["cross_checks"]["cubic-derivative-symmetric"]["verdict"]
            != "inconclusive",
    }
    payload = {"predicates": rep, "graph_from_source": graph_rep,
               "coherence": coherence}
    if system.n >= 3:
        try:
            payload["perfect_square"] = {
                "residual": classify.perfect_square_residual(
                    system, pts, tol=tol),
                "preconditions": "satisfied",
            }
        except ValueError as err:
            payload["perfect_square"] = {"preconditions": str(err)}
    for name, entry in rep["predicates"].items():
        click.echo(f"  {name:10s} {entry['verdict']:14s}"
                   f" (residual {entry['residual']:.3e})")
    ok = all(coherence.values())
    report = envelope("classify", label, system, seed, {"residual": tol},
                      payload)
    finish(report, out, f"classify-{system.name}.json", ok)


@main.command(name="conformal")
@_spec_arg
@click.option("--omega", default=None,
              help="scale factor expression (overrides the spec's "
                   "[conformal] table)")
@_tol
@_grid
@_samples
@_seed
@_out
@guarded
def conformal_cmd(spec, omega, tol, grid_text, samples, seed, out):
    """Rescale SPEC and cross-check the transformation laws."""
    system, data, label = load_runspec(spec)
    om_src = omega or data.get("conformal", {}).get("omega")
    if not om_src:
        raise SpecError("no scale factor: give --omega or a [conformal] "
                        "table with omega = \"...\" in the spec")
    counts = parse_grid(grid_text, system.n, default=6)
    pts = _points_for(system, counts, samples, seed)
    compat = conformal.verify_compatibility(system, om_src, pts, tol=tol)
    rescaled = conformal.rescale_abundant(system, om_src, check=False)
    before = hypersurface.verify_abundant_conditions(
        hypersurface.HypersurfaceData(system), pts, tol=tol)
    after = hypersurface.verify_abundant_conditions(
        hypersurface.HypersurfaceData(rescaled), pts, tol=tol)
    shift = max(abs(before["conditions"][k]["residual"]
                    - after["conditions"][k]["residual"])
                for k in before["conditions"])
    invariance = {
        "before": before, "after": after,
        "max-residual-shift": shift,
        "pass": bool(np.isfinite(shift) and shift < tol),
    }
    _echo_table("transformation laws", compat["fields"])
    click.echo(f"  condition residual shift: {shift:.3e}")
    ok = compat["pass"] and invariance["pass"]
    report = envelope("conformal", label, system, seed, {"residual": tol},
                      {"omega": om_src, "compatibility": compat,
                       "invariance": invariance})
    finish(report, out, f"conformal-{system.name}.json", ok)


# ---------------------------------------------------------------------------
# catalog subcommands


def _toml_escape(s: str) -> str:
    return json.dumps(s)


def _toml_value(v) -> str:
    if isinstance(v, str):
        return _toml_escape(v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        text = repr(v)
        return text if any(c in text for c in ".einf") else text + ".0"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__} to TOML")


def emit_toml(data: dict) -> str:
    """Serialize the flat table-of-tables shape used by run-specs."""
    lines = []
    for table, content in data.items():
        if not isinstance(content, dict):
            raise TypeError(f"top-level key {table!r} must be a table")
        if lines:
            lines.append("")
        lines.append(f"[{table}]")
        for key, v in content.items():
            bare = key.replace("-", "").replace("_", "").isalnum()
            lines.append(f"{key if bare else _toml_escape(key)} = "
                         f"{_toml_value(v)}")
    return "\n".join(lines) + "\n"


@main.group(name="catalog")
def catalog_group():
    """Inspect or export the shipped example systems."""


@catalog_group.command(name="list")
def catalog_list():
    """Print the catalog entry names."""
    for name in catalog.names():
        entry = catalog.get(name)
        click.echo(f"{name:24s} n={entry.dimension}  {entry.title}")


@catalog_group.command(name="get")
@click.argument("name")
@_out
@guarded
def catalog_get(name, out):
    """Write one catalog entry as a run-spec TOML file."""
    try:
        entry = catalog.get(name)
    except KeyError:
        raise SpecError(f"unknown catalog entry {name!r} "
                        f"(catalog: {', '.join(catalog.names())}) ") from None
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{entry.name}.toml"
    path.write_text(emit_toml(entry.to_spec_dict()))
    click.echo(f"wrote {path}")


@catalog_group.command(name="export")
@_out
@guarded
def catalog_export(out):
    """Write every catalog entry as a run-spec TOML file."""
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in catalog.names():
        entry = catalog.get(name)
        path = out_dir / f"{entry.name}.toml"
        path.write_text(emit_toml(entry.to_spec_dict()))
        click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
