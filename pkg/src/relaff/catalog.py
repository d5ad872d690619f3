"""Built-in roster of worked systems.

Each entry bundles a complete chart definition (metric, cubic form, scalar)
with everything known about the system in closed form: a reference immersion
where one exists, the family of compatible potentials for documentation, and
the classification flags the toolkit is expected to reproduce.  Entries are
stored as plain string tables in the same shape the command-line spec files
use, so exporting an entry and reading it back is lossless.

Closed forms for the two Smorodinsky–Winternitz systems are obtained by
splitting their printed cubic form ``C`` into a trace-free part and a trace
vector (``S = 3 U``, ``dt = 3 u`` with ``u = tr C/(n+2)``) and integrating the
exact 1-form ``dt``.  The generic sphere system and the degenerate sphere
system labelled "s7" live on the round 2-sphere in stereographic-type
coordinates; "s7" ships without a reference immersion and is only used for
classification checks.  The harmonic-oscillator family has ``S = 0``,
``t = 0`` in every dimension; its paraboloid reference immersion is derived
(it solves the flat reconstruction system), not quoted, and is flagged
accordingly, as is the three-dimensional relative of sw1.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exprlang import parse
from .systems import SystemDef

__all__ = ["CatalogEntry", "names", "get", "reference_immersion"]


@dataclass(frozen=True)
class CatalogEntry:
    """One ready-made system plus its reference data."""

    name: str
    title: str
    definition: dict
    immersion: tuple[str, ...] | None = None
    immersion_derived: bool = False
    potential: str | None = None
    potential_params: tuple[str, ...] = ()
    expected: dict = field(default_factory=dict)
    note: str = ""

    @property
    def system(self) -> SystemDef:
        return _system_for(self.name)

    @property
    def dimension(self) -> int:
        return len(self.definition["system"]["coordinates"])

    def to_spec_dict(self) -> dict:
        """Entry as a spec-file shaped mapping (round-trips through TOML)."""
        out = copy.deepcopy(self.definition)
        if self.immersion is not None:
            out["immersion"] = {
                "components": list(self.immersion),
                "derived": self.immersion_derived,
            }
        if self.potential is not None:
            out["potential"] = {
                "expression": self.potential,
                "parameters": list(self.potential_params),
            }
        out["expected"] = dict(self.expected)
        meta = dict(out.get("meta", {}))
        meta.update({"title": self.title})
        if self.note:
            meta["note"] = self.note
        out["meta"] = meta
        return out


def _flat_system(name: str, coords: list[str], box, cubic: dict, t: str) -> dict:
    return {
        "system": {"name": name, "coordinates": coords,
                   "domain": [list(b) for b in box]},
        "metric": {c + c: "1" for c in coords},
        "cubic": cubic,
        "scalar": {"t": t},
    }


def _sphere_system(name: str, cubic: dict, t: str) -> dict:
    conf = "4/(1+x^2+y^2)^2"
    return {
        "system": {"name": name, "coordinates": ["x", "y"],
                   "domain": [[0.2, 0.7], [0.2, 0.7]]},
        "metric": {"xx": conf, "yy": conf},
        "cubic": cubic,
        "scalar": {"t": t},
    }


def _ho_entry(n: int) -> CatalogEntry:
    coords = [f"x{i + 1}" for i in range(n)]
    sq = "+".join(f"{c}^2" for c in coords)
    pot = " + ".join([f"a0*({sq})"] + [f"a{i + 1}*{c}" for i, c in enumerate(coords)]
                     + [f"a{n + 1}"])
    return CatalogEntry(
        name=f"harmonic-oscillator-{n}",
        title=f"isotropic harmonic oscillator, {n} degrees of freedom",
        definition=_flat_system(f"harmonic-oscillator-{n}", coords,
                                [(-1.0, 1.0)] * n, {}, "0"),
        immersion=tuple(coords) + (f"({sq})/2",),
        immersion_derived=True,
        potential=pot,
        potential_params=tuple(f"a{i}" for i in range(n + 2)),
        expected={"blaschke": True, "quadric": True, "sphere": True,
                  "improper": True, "graph": True},
        note="paraboloid reference immersion is derived, not quoted",
    )


_A_EQ_0 = {"blaschke": False, "quadric": False, "sphere": True,
           "improper": True, "graph": True}

_ENTRIES: dict[str, CatalogEntry] = {}


def _register(entry: CatalogEntry) -> None:
    _ENTRIES[entry.name] = entry


for _n in (2, 3, 4):
    _register(_ho_entry(_n))

_register(CatalogEntry(
    name="sw1",
    title="Smorodinsky–Winternitz I",
    definition=_flat_system(
        "sw1", ["x", "y"], [(0.5, 2.0), (0.5, 2.0)],
        {"xxx": "-3/(4*x)", "xxy": "3/(4*y)",
         "xyy": "3/(4*x)", "yyy": "-3/(4*y)"},
        "-3/4*ln(x*y)"),
    immersion=("ln(x)", "ln(y)", "(x^2+y^2)/4"),
    potential="a0*(x^2+y^2) + a1/x^2 + a2/y^2 + a3",
    potential_params=("a0", "a1", "a2", "a3"),
    expected=dict(_A_EQ_0),
))

_register(CatalogEntry(
    name="sw2",
    title="Smorodinsky–Winternitz II",
    definition=_flat_system(
        "sw2", ["x", "y"], [(-1.0, 1.0), (0.5, 2.0)],
        {"xxy": "3/(4*y)", "yyy": "-3/(4*y)"},
        "-3/4*ln(y)"),
    immersion=("x", "ln(y)", "x^2/2 + y^2/4"),
    potential="a0*(4*x^2+y^2) + a1*x + a2/y^2 + a3",
    potential_params=("a0", "a1", "a2", "a3"),
    expected=dict(_A_EQ_0),
))

_register(CatalogEntry(
    name="s9-generic",
    title="generic system on the round 2-sphere",
    definition=_sphere_system(
        "s9-generic",
        {"xxx": "3*(1-5*x^4+10*x^2*y^2-y^4)/(x*(x^2+y^2-1)*(1+x^2+y^2)^3)",
         "xxy": "3*(x^4-10*x^2*y^2+5*y^4-1)/(y*(x^2+y^2-1)*(1+x^2+y^2)^3)",
         "xyy": "-3*(1-5*x^4+10*x^2*y^2-y^4)/(x*(x^2+y^2-1)*(1+x^2+y^2)^3)",
         "yyy": "-3*(x^4-10*x^2*y^2+5*y^4-1)/(y*(x^2+y^2-1)*(1+x^2+y^2)^3)"},
        "9/4*ln(1+x^2+y^2) - 3/4*(ln(x)+ln(y)+ln(1-x^2-y^2))"),
    immersion=("ln(x/(1-x^2-y^2))", "ln(y/(1-x^2-y^2))",
               "1/2*ln((1+x^2+y^2)/(1-x^2-y^2))"),
    potential=("a0*(1+x^2+y^2)^2/(x^2+y^2-1)^2 + a1*(1+x^2+y^2)^2/x^2"
               " + a2*(1+x^2+y^2)^2/y^2 + a3"),
    potential_params=("a0", "a1", "a2", "a3"),
    expected=dict(_A_EQ_0),
))

_register(CatalogEntry(
    name="s7",
    title="degenerate system on the round 2-sphere",
    definition=_sphere_system(
        "s7",
        {"xxx": "12*x*(x^4-10*x^2*y^2-2*x^2+5*y^4+6*y^2+1)"
                "/((x^2+y^2-1)*(1+x^2+y^2)^3*((x+1)^2+y^2)*((x-1)^2+y^2))",
         "xxy": "12*y*(5*x^4-10*x^2*y^2-6*x^2+y^4+2*y^2+1)"
                "/((x^2+y^2-1)*(1+x^2+y^2)^3*((x+1)^2+y^2)*((x-1)^2+y^2))",
         "xyy": "-12*x*(x^4-10*x^2*y^2-2*x^2+5*y^4+6*y^2+1)"
                "/((x^2+y^2-1)*(1+x^2+y^2)^3*((x+1)^2+y^2)*((x-1)^2+y^2))",
         "yyy": "-12*y*(5*x^4-10*x^2*y^2-6*x^2+y^4+2*y^2+1)"
                "/((x^2+y^2-1)*(1+x^2+y^2)^3*((x+1)^2+y^2)*((x-1)^2+y^2))"},
        "9/4*ln(1+x^2+y^2) - 3/4*(ln(1-x^2-y^2)+ln((x+1)^2+y^2)+ln((x-1)^2+y^2))"),
    immersion=None,
    potential=("2*a0*x/sqrt(4*y^2+(1-x^2-y^2)^2)"
               " + 2*a1*y*(1+x^2+y^2)^2/((1-x^2-y^2)^2*sqrt(4*y^2+(1-x^2-y^2)^2))"
               " + a2*(1+x^2+y^2)^2/(1-x^2-y^2)^2 + a3"),
    potential_params=("a0", "a1", "a2", "a3"),
    expected={"blaschke": False, "quadric": False, "sphere": False,
              "improper": False, "graph": False},
    note="classification-check only: the shape tensor trace and the graph "
         "predicate are covered by tests, no reference immersion is stored",
))

_register(CatalogEntry(
    name="sw1-3d",
    title="Smorodinsky–Winternitz I, three degrees of freedom",
    definition=_flat_system(
        "sw1-3d", ["x", "y", "z"], [(0.5, 1.5)] * 3,
        {"xxx": "-6/(5*x)", "yyy": "-6/(5*y)", "zzz": "-6/(5*z)",
         "xyy": "3/(5*x)", "xzz": "3/(5*x)",
         "yxx": "3/(5*y)", "yzz": "3/(5*y)",
         "zxx": "3/(5*z)", "zyy": "3/(5*z)"},
        "-3/5*ln(x*y*z)"),
    immersion=("ln(x)", "ln(y)", "ln(z)", "(x^2+y^2+z^2)/4"),
    immersion_derived=True,
    potential="a0*(x^2+y^2+z^2) + a1/x^2 + a2/y^2 + a3/z^2 + a4",
    potential_params=("a0", "a1", "a2", "a3", "a4"),
    expected=dict(_A_EQ_0),
    note="three-variable relative of sw1; fields derived from the flat "
         "ansatz S_iii = -6/(5 x_i), S_ijj = 3/(5 x_i), t = -3/5 ln(xyz), "
         "validated numerically against every defining condition; the "
         "reference immersion is derived (reconstruction matches it to "
         "rms < 1e-12), not quoted",
))

_ALIASES = {
    "ho-2": "harmonic-oscillator-2",
    "ho-3": "harmonic-oscillator-3",
    "ho-4": "harmonic-oscillator-4",
    "s9": "s9-generic",
}

_ORDER = (
    "harmonic-oscillator-2", "harmonic-oscillator-3", "harmonic-oscillator-4",
    "sw1", "sw2", "s9-generic", "s7", "sw1-3d",
)


def names() -> tuple[str, ...]:
    """Stable roster of catalog entry names."""
    return _ORDER


def get(name: str) -> CatalogEntry:
    """Look up an entry by name (a few short aliases are accepted)."""
    key = _ALIASES.get(name, name)
    try:
        return _ENTRIES[key]
    except KeyError:
        known = ", ".join(_ORDER)
        raise KeyError(f"unknown catalog system {name!r}; available: {known}") from None


@lru_cache(maxsize=None)
def _system_for(name: str) -> SystemDef:
    return SystemDef.from_dict(_ENTRIES[name].definition)


def reference_immersion(name: str, pts: np.ndarray) -> np.ndarray:
    """Evaluate an entry's closed-form immersion at chart points (n, B).

    Returns an array of shape (n+1, B).  Raises ``ValueError`` for entries
    that ship without a reference immersion.
    """
    entry = get(name)
    if entry.immersion is None:
        raise ValueError(f"catalog entry {entry.name!r} has no reference immersion")
    system = entry.system
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    env = system.env(pts, 0)
    rows = [parse(src)(env).value for src in entry.immersion]
    return np.stack(rows)
