"""System definitions: a chart, a metric, a cubic form and a scalar field.

A :class:`SystemDef` is the parsed, validated form of the user-facing input
(TOML file or catalog entry): coordinate names, a rectangular domain, metric
components g_ij, totally symmetric cubic components S_ijk and the scalar t,
all given as expression strings in the chart coordinates.

Component keys are coordinate-name words: ``xy`` for g, ``xxy`` for S.  Keys
are canonicalized by sorting in coordinate order, so ``yx`` and ``xy`` name
the same metric slot and may not both be present.  Missing components default
to zero; the metric must cover every diagonal entry or be explicitly given.

Evaluation produces nested jet fields (see :mod:`relaff.geometry`) at any
requested derivative order over a batch of sample points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product

import numpy as np

from .exprlang import Expression, parse
from .jets import Jet

__all__ = ["SystemDef", "grid_points", "random_points"]


def _canon_key(key: str, coords: list[str]) -> tuple[int, ...]:
    """'xxy' -> sorted index tuple (0, 0, 1); raises on unknown coordinate."""
    # greedy longest-first matching so multi-letter names like 'x1' work
    names = sorted(coords, key=len, reverse=True)
    idx = []
    rest = key
    while rest:
        for nm in names:
            if rest.startswith(nm):
                idx.append(coords.index(nm))
                rest = rest[len(nm):]
                break
        else:
            raise ValueError(f"component key {key!r} is not a word in coordinates {coords}")
    return tuple(sorted(idx))


@dataclass
class SystemDef:
    name: str
    coords: list[str]
    domain: list[tuple[float, float]]
    metric: dict[tuple[int, ...], Expression]
    cubic: dict[tuple[int, ...], Expression]
    t: Expression
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.coords)

    # ---- construction -------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "SystemDef":
        """Build from the TOML-shaped mapping (see module docstring)."""
        sysblock = data.get("system", {})
        name = sysblock.get("name", "unnamed")
        coords = list(sysblock.get("coordinates", []))
        if not coords:
            raise ValueError("system.coordinates must list the chart coordinates")
        n = len(coords)
        dom_raw = sysblock.get("domain")
        if dom_raw is None or len(dom_raw) != n:
            raise ValueError("system.domain must give one [lo, hi] pair per coordinate")
        domain = []
        for pair in dom_raw:
            lo, hi = float(pair[0]), float(pair[1])
            if not lo < hi:
                raise ValueError(f"empty domain interval [{lo}, {hi}]")
            domain.append((lo, hi))

        def parse_block(block: dict, rank: int, what: str):
            out = {}
            for key, src in block.items():
                idx = _canon_key(key, coords)
                if len(idx) != rank:
                    raise ValueError(f"{what} key {key!r} must have {rank} indices")
                if idx in out:
                    raise ValueError(f"duplicate {what} component {key!r} after symmetrization")
                out[idx] = parse(src) if isinstance(src, str) else src
            return out

        metric = parse_block(data.get("metric", {}), 2, "metric")
        for i in range(n):
            if (i, i) not in metric:
                raise ValueError(f"metric is missing the diagonal component {coords[i]}{coords[i]}")
        cubic = parse_block(data.get("cubic", {}), 3, "cubic")
        t_src = data.get("scalar", {}).get("t", "0")
        t = parse(t_src) if isinstance(t_src, str) else t_src
        meta = dict(data.get("meta", {}))
        return cls(name, coords, domain, metric, cubic, t, meta)

    # ---- sampling -------------------------------------------------------

    def grid(self, per_axis: int, margin: float = 0.0) -> np.ndarray:
        return grid_points(self.domain, per_axis, margin)

    def sample(self, count: int, seed: int) -> np.ndarray:
        return random_points(self.domain, count, seed)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        ok = np.ones(pts.shape[1], dtype=bool)
        for i, (lo, hi) in enumerate(self.domain):
            ok &= (pts[i] >= lo) & (pts[i] <= hi)
        return ok

    def base_point(self) -> np.ndarray:
        return np.array([(lo + hi) / 2.0 for lo, hi in self.domain])

    # ---- evaluation -----------------------------------------------------

    def env(self, pts: np.ndarray, k: int) -> dict[str, Jet]:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[0] != self.n:
            raise ValueError(f"points must have shape ({self.n}, B)")
        return {nm: Jet.variable(i, pts[i], self.n, k) for i, nm in enumerate(self.coords)}

    def _zero(self, pts, k):
        return Jet.constant(0.0, self.n, k, pts.shape[1])

    def metric_jets(self, pts: np.ndarray, k: int):
        env = self.env(pts, k)
        n = self.n
        g = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                expr = self.metric.get((i, j))
                g[i][j] = expr(env) if expr is not None else self._zero(pts, k)
                g[j][i] = g[i][j]
        return g

    def cubic_jets(self, pts: np.ndarray, k: int):
        env = self.env(pts, k)
        n = self.n
        S = [[[None] * n for _ in range(n)] for _ in range(n)]
        cache = {}
        for idx in combinations_with_replacement(range(n), 3):
            expr = self.cubic.get(idx)
            cache[idx] = expr(env) if expr is not None else self._zero(pts, k)
        for i, j, l in product(range(n), repeat=3):
            S[i][j][l] = cache[tuple(sorted((i, j, l)))]
        return S

    def t_jet(self, pts: np.ndarray, k: int) -> Jet:
        return self.t(self.env(pts, k))


def grid_points(domain, per_axis: int, margin: float = 0.0) -> np.ndarray:
    """Regular grid over the box, optionally shrunk by a relative margin."""
    axes = []
    for lo, hi in domain:
        pad = margin * (hi - lo)
        axes.append(np.linspace(lo + pad, hi - pad, per_axis))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh])


def random_points(domain, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cols = [rng.uniform(lo, hi, count) for lo, hi in domain]
    return np.stack(cols)
