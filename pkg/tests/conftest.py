"""Shared test helpers: seeded random system definitions.

These produce smooth but generically *non-abundant* data, used across the
suite to check that verifiers reject arbitrary input and that pure-algebra
identities hold regardless of the differential conditions.
"""

import numpy as np

from relaff.systems import SystemDef


def _poly(rng, coords) -> str:
    c = rng.uniform(-0.2, 0.2, 1 + len(coords))
    lin = " + ".join(f"({c[1 + i]})*{v}" for i, v in enumerate(coords))
    return f"({c[0]}) + {lin}"


def random_system(seed: int, n: int = 2, flat: bool = False) -> SystemDef:
    """Smooth, generically non-abundant data with a TRACE-FREE cubic.

    The metric is diagonal; the dependent cubic components are solved from
    g^{ab} S_abk = 0 at the expression level, so the only structural
    precondition of the verifiers holds by construction and the residuals
    probe the actual differential conditions.
    """
    rng = np.random.default_rng(seed)
    coords = ["x", "y", "z"][:n]
    diag = ["1"] * n
    if not flat:
        diag = [f"1 + ({_poly(rng, coords)})^2" for _ in range(n)]
    metric = {c + c: d for c, d in zip(coords, diag)}

    def dep(k: int, parts) -> str:
        # S_kkk = -g_kk * sum_j S_kjj / g_jj  restores tracelessness
        terms = " + ".join(f"({src})/({diag[j]})" for j, src in parts)
        return f"-({diag[k]})*({terms})"

    cubic = {}
    if n == 2:
        a, b = _poly(rng, coords), _poly(rng, coords)
        cubic["xyy"], cubic["xxy"] = a, b
        cubic["xxx"] = dep(0, [(1, a)])
        cubic["yyy"] = dep(1, [(0, b)])
    else:
        free = {idx: _poly(rng, coords)
                for idx in ("xyy", "xzz", "xxy", "yzz", "xxz", "yyz", "xyz")}
        cubic.update(free)
        cubic["xxx"] = dep(0, [(1, free["xyy"]), (2, free["xzz"])])
        cubic["yyy"] = dep(1, [(0, free["xxy"]), (2, free["yzz"])])
        cubic["zzz"] = dep(2, [(0, free["xxz"]), (1, free["yyz"])])
    return SystemDef.from_dict({
        "system": {"name": f"random-{seed}", "coordinates": coords,
                   "domain": [[-1.0, 1.0]] * n},
        "metric": metric,
        "cubic": cubic,
        "scalar": {"t": _poly(rng, coords)},
    })


def raw_system(seed: int) -> SystemDef:
    """Flat metric with a raw (not trace-free) random cubic: its trace
    one-form is generically not closed."""
    rng = np.random.default_rng(seed)
    coords = ["x", "y"]
    cubic = {idx: _poly(rng, coords) for idx in ("xxx", "xxy", "xyy", "yyy")}
    return SystemDef.from_dict({
        "system": {"name": f"raw-{seed}", "coordinates": coords,
                   "domain": [[-1.0, 1.0]] * 2},
        "metric": {"xx": "1", "yy": "1"},
        "cubic": cubic,
        "scalar": {"t": _poly(rng, coords)},
    })
