"""Conformal rescaling of abundant structures and their hypersurfaces.

The defining conditions of an abundant structure are conformally covariant:
replacing the metric by Omega^2 g while sending

    S -> Omega^2 S,        t -> t - 3 ln Omega

produces another abundant structure.  On the hypersurface side the induced
data transform with Upsilon = d ln Omega as

    G -> Omega^2 G                      u -> u - Upsilon
    C -> Omega^2 (C - Upsilon . G)      U -> Omega^2 U
    A -> A + 4 Upsilon x Upsilon - 2 Hess_G(ln Omega) - 2 C(., ., Upsilon^)
    xi -> Omega^-2 (xi + 2 Upsilon^)

(Upsilon^ the metric raise; the last line in the flat ambient frame of a
reconstructed immersion).  Rescaling is implemented symbolically, by
composing the component expression sources, so the rescaled system is a
first-class :class:`~relaff.systems.SystemDef` that every other verifier
accepts unchanged.  `verify_compatibility` cross-checks the symbolic route
against the closed-form transformation laws above at sample points.

The scale Omega = exp(t/3) (the "standard scale") normalizes t to zero; in
it the cubic form is apolar (trace-free against the metric) and the
structure is honestly a relative normalization without residual gauge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .abundant import _sample_fields, sup
from .exprlang import Expression, parse
from .geometry import covd, materialize
from .hypersurface import HypersurfaceData, SurfaceFields, _trace_pattern
from .systems import SystemDef

__all__ = [
    "ConformalFactor",
    "rescale_abundant",
    "rescale_hypersurface",
    "transformed_fields",
    "verify_compatibility",
    "transversal_transform",
    "to_standard_scale",
]


@dataclass(frozen=True)
class ConformalFactor:
    """A strictly positive scale factor, given as a chart expression."""

    expr: Expression

    def __init__(self, omega: "str | Expression | ConformalFactor"):
        if isinstance(omega, ConformalFactor):
            omega = omega.expr
        elif isinstance(omega, str):
            omega = parse(omega)
        object.__setattr__(self, "expr", omega)

    @property
    def source(self) -> str:
        return self.expr.source

    def __call__(self, system: SystemDef, points: np.ndarray) -> np.ndarray:
        """Values Omega(p) over a batch of chart points, shape (B,)."""
        return self.jet(system, points, 0).value

    def jet(self, system: SystemDef, points: np.ndarray, k: int):
        return self.expr(system.env(points, k))

    def upsilon_jets(self, system: SystemDef, points: np.ndarray, k: int):
        """Jets of Upsilon_i = d_i ln Omega at order k (needs Omega > 0)."""
        om = self.jet(system, points, k + 1)
        return [om.partial(i) / om.truncate(k) for i in range(system.n)]

    def validate(self, system: SystemDef, *, grid: int = 8,
                 samples: int = 50, seed: int = 0) -> float:
        """Check positivity on a lattice plus random samples; returns the
        smallest value seen, raises ValueError on a non-positive one."""
        pts = np.concatenate(
            [system.grid(grid), system.sample(samples, seed)], axis=1)
        vals = self(system, pts)
        if not np.all(np.isfinite(vals)):
            raise ValueError(
                f"conformal factor {self.source!r} is not finite everywhere "
                "on the domain box")
        lo = float(vals.min())
        if lo <= 0.0:
            raise ValueError(
                f"conformal factor {self.source!r} must be strictly "
                f"positive on the domain (min sampled value {lo:g})")
        return lo

    def compose(self, other: "ConformalFactor") -> "ConformalFactor":
        """The factor of the composite rescaling, Omega_1 * Omega_2."""
        other = ConformalFactor(other)
        return ConformalFactor(f"({self.source})*({other.source})")


def _scaled(om_source: str, expr: Expression) -> Expression:
    return parse(f"({om_source})^2*({expr.source})")


def rescale_abundant(system: SystemDef,
                     omega: "str | Expression | ConformalFactor",
                     *, name: str | None = None,
                     check: bool = True) -> SystemDef:
    """The conformally rescaled system, built at the expression level.

    Component sources are composed with the factor (g -> Omega^2 g,
    S -> Omega^2 S, t -> t - 3 ln Omega), so the result is an ordinary
    system definition whose jets carry exact derivatives of the rescaled
    data.  ``check`` samples the factor for positivity first.
    """
    om = ConformalFactor(omega)
    if check:
        om.validate(system)
    metric = {k: _scaled(om.source, e) for k, e in system.metric.items()}
    cubic = {k: _scaled(om.source, e) for k, e in system.cubic.items()}
    t = parse(f"({system.t.source}) - 3*ln({om.source})")
    meta = dict(system.meta)
    meta["conformal_factor"] = om.source
    return SystemDef(
        name=name if name is not None else system.name + "-rescaled",
        coords=list(system.coords), domain=list(system.domain),
        metric=metric, cubic=cubic, t=t, meta=meta)


def rescale_hypersurface(hs: HypersurfaceData,
                         omega: "str | Expression | ConformalFactor",
                         *, name: str | None = None,
                         check: bool = True) -> HypersurfaceData:
    """Hypersurface data of the rescaled structure (report not re-run)."""
    return HypersurfaceData(rescale_abundant(hs.system, omega, name=name,
                                             check=check))


def transformed_fields(F: SurfaceFields,
                       omega: "str | Expression | ConformalFactor") -> dict:
    """Closed-form transformation laws applied to evaluated fields.

    Returns the rescaled G, C, U, u, A and t as batch-last arrays at
    ``F.points``, computed from F and the factor alone -- no re-derivation
    from the rescaled metric.  Used as the second route in
    :func:`verify_compatibility`.
    """
    om = ConformalFactor(omega)
    system = F.system
    pts = F.points
    omv = om(system, pts)
    ups_jets = om.upsilon_jets(system, pts, 1)
    ups = np.stack([j.value for j in ups_jets])
    upshat = np.einsum('kmB,mB->kB', F.ginv, ups)
    # Hess_G(ln Omega)_{ai} = D_a Upsilon_i, D the Levi-Civita connection
    hess = materialize(covd(ups_jets, F.geo.Gamma, 1))
    om2 = omv ** 2
    return {
        "G": om2 * F.g,
        "C": om2 * (F.C - _trace_pattern(ups, F.g)),
        "U": om2 * F.U,
        "u": F.u - ups,
        "A": (F.A + 4.0 * np.einsum('aB,bB->abB', ups, ups) - 2.0 * hess
              - 2.0 * np.einsum('xymB,mB->xyB', F.C, upshat)),
        "t": F.t_jet.value - 3.0 * np.log(omv),
    }


def verify_compatibility(system: SystemDef,
                         omega: "str | Expression | ConformalFactor",
                         points: np.ndarray | None = None, *,
                         tol: float = 1e-8, grid: int = 6,
                         samples: int = 40, seed: int = 0) -> dict:
    """Cross-check symbolic rescaling against the transformation laws.

    Route one rebuilds every hypersurface field from the rescaled system's
    expressions; route two pushes the original fields through the
    closed-form laws.  The two must agree to roundoff, which exercises the
    rescaling, the jet arithmetic and the laws at once.
    """
    om = ConformalFactor(omega)
    om.validate(system)
    if points is None:
        points = np.concatenate(
            [system.grid(grid), system.sample(samples, seed)], axis=1)
    F1, excluded = _sample_fields(system, points, cls=SurfaceFields)
    rescaled = rescale_abundant(system, om, check=False)
    F2 = SurfaceFields(rescaled, F1.points)
    laws = transformed_fields(F1, om)
    rebuilt = {"G": F2.g, "C": F2.C, "U": F2.U, "u": F2.u, "A": F2.A,
               "t": F2.t_jet.value}
    table = {}
    for key in laws:
        r = sup(rebuilt[key] - laws[key])
        table[key] = {"residual": r, "pass": bool(np.isfinite(r) and r < tol)}
    return {
        "system": system.name,
        "omega": om.source,
        "points": int(F1.npts),
        "excluded_points": int(excluded),
        "tolerance": tol,
        "fields": table,
        "pass": bool(all(v["pass"] for v in table.values())),
    }


def transversal_transform(result, omega) -> np.ndarray:
    """Rescaled transversal field along a reconstructed immersion.

    ``result`` is an :class:`~relaff.reconstruct.ImmersionResult`; the
    returned (N, n+1) array holds the ambient coordinates of

        xi' = Omega^-2 (xi + 2 f_* grad_G ln Omega)

    at the grid nodes, with the pushforward realized through the frame
    columns of ``result.W``.
    """
    om = ConformalFactor(omega)
    hs = result.hs
    system = hs.system
    nodes = result.nodes
    n = hs.n
    F = hs.fields(nodes, g_order=1, s_order=0, t_order=0)
    omv = om(system, nodes)
    if np.any(omv <= 0.0):
        raise ValueError("conformal factor must be positive along the grid")
    ups = np.stack([j.value for j in om.upsilon_jets(system, nodes, 0)])
    upshat = np.einsum('kmB,mB->kB', F.ginv, ups)
    pushed = np.einsum('Nam,mN->Na', result.W[:, :, :n], upshat)
    return (result.xi + 2.0 * pushed) / omv[:, None] ** 2


def to_standard_scale(system: SystemDef, *, name: str | None = None):
    """Rescale to the gauge with t = 0 (factor Omega = exp(t/3)).

    Returns ``(rescaled_system, factor)``.  In this scale u vanishes and
    the cubic form is trace-free, so repeating the call is the identity
    rescaling (the new factor is exp(0) = 1).
    """
    om = ConformalFactor(f"exp(({system.t.source})/3)")
    rescaled = rescale_abundant(
        system, om, check=False,
        name=name if name is not None else system.name + "-std")
    return rescaled, om
