"""Geometric predicates of a built hypersurface and its source data.

Five classical properties of a relative normalization are decided from
sup-norm residuals over sample points:

    blaschke   u == 0            (apolarity: the equiaffine gauge)
    quadric    U == 0            (trace-free cubic part vanishes)
    sphere     Ahat == -mu Id    (relative sphere; mu forced constant)
    improper   Ahat == 0         (improper relative sphere, mu = 0)
    graph      A == 0            (affinely a graph with Hessian metric)

Verdicts are three-valued: residual below the threshold is "true", above
ten times the threshold is "false", anything in the factor-10 gray zone is
"inconclusive" -- near-tolerance data never gets overclaimed.

The graph predicate can also be decided without building the hypersurface:
`graph_conditions_from_abundant` evaluates the curvature displays that are
equivalent to A == 0 directly from (g, S, t), and the two routes must agree.
`perfect_square_residual` evaluates the constant-curvature identity that
certifies improper sphericity on flat-family data.
"""

from __future__ import annotations

import numpy as np

from . import abundant
from .abundant import _sample_fields, sup
from .geometry import covd, materialize
from .hypersurface import HypersurfaceData, SurfaceFields
from .systems import SystemDef

__all__ = [
    "verdict",
    "classify_all",
    "graph_conditions_from_abundant",
    "perfect_square_residual",
]


def verdict(residual: float, tol: float) -> str:
    """Three-valued call on a sup residual: a factor-10 gray zone around
    the threshold reads "inconclusive"."""
    if not np.isfinite(residual):
        return "inconclusive"
    if residual < tol:
        return "true"
    if residual > 10.0 * tol:
        return "false"
    return "inconclusive"


def _entry(residual: float, tol: float, **extra) -> dict:
    out = {"residual": float(residual), "threshold": tol,
           "verdict": verdict(residual, tol)}
    out.update(extra)
    return out


def classify_all(hs: HypersurfaceData, points: np.ndarray | None = None, *,
                 tol: float = 1e-8, grid: int = 10, samples: int = 100,
                 seed: int = 0, orders: tuple | None = None) -> dict:
    """Evaluate every predicate on one sample set.

    The relative-sphere test estimates mu as the mean of -tr(Ahat)/n over
    the points, requires its sample variance below 1e-12 (1 + mu^2) (the
    sphere equation forces d mu = 0), and measures sup |Ahat + mu Id|.  An
    independent route -- total symmetry of the covariant derivative of the
    cubic form, equivalent to the sphere equation -- is reported as a
    cross-check.
    """
    system = hs.system
    if points is None:
        points = np.concatenate(
            [system.grid(grid), system.sample(samples, seed)], axis=1)
    cls = abundant._fields_cls(SurfaceFields, orders, (3, 2, 3))
    F, excluded = _sample_fields(system, points,
                                 cls=SurfaceFields if cls is None else cls)
    n = F.n

    mu_pts = -F.trA / n
    mu = float(np.mean(mu_pts))
    mu_var = float(np.var(mu_pts))
    mu_ok = mu_var < 1e-12 * (1.0 + mu * mu)
    sphere_res = sup(F.Ahat + mu * np.eye(n)[:, :, None])
    sphere = _entry(sphere_res, tol, mu=mu, mu_variance=mu_var,
                    mu_constant=bool(mu_ok))
    if sphere["verdict"] == "true" and not mu_ok:
        sphere["verdict"] = "inconclusive"

    dC = F.dC_first
    sym_defect = sup(dC - np.transpose(dC, (1, 0, 2, 3, 4)))

    predicates = {
        "blaschke": _entry(sup(F.u), tol),
        "quadric": _entry(sup(F.U), tol),
        "sphere": sphere,
        "improper": _entry(sup(F.Ahat), tol),
        "graph": _entry(sup(F.A), tol),
    }
    return {
        "system": system.name,
        "dimension": n,
        "points": int(F.npts),
        "excluded_points": int(excluded),
        "tolerance": tol,
        "predicates": predicates,
        "cross_checks": {
            "cubic-derivative-symmetric": _entry(sym_defect, tol),
        },
    }


def graph_conditions_from_abundant(system: SystemDef,
                                   points: np.ndarray | None = None, *,
                                   tol: float = 1e-8, grid: int = 10,
                                   samples: int = 100, seed: int = 0) -> dict:
    """Decide the graph predicate from (g, S, t) alone.

    Vanishing of the shape tensor is equivalent to curvature displays in
    the source data: for n >= 3 the trace-free Schouten tensor must equal
    tau/8 together with a scalar-curvature identity; for n = 2 the
    scalar-curvature identity pairs with a closed form for tau.  Residuals
    of the displays are reported; the verdict must match the A == 0 verdict
    of :func:`classify_all` on the built hypersurface.
    """
    if points is None:
        points = np.concatenate(
            [system.grid(grid), system.sample(samples, seed)], axis=1)
    F, excluded = _sample_fields(system, points)
    n = F.n
    conditions = {}
    if n >= 3:
        trP = np.einsum('ijB,ijB->B', F.ginv, F.schouten)
        P0 = F.schouten - trP * F.g / n
        conditions["schouten-vs-tau"] = sup(P0 - abundant.tau(F) / 8.0)
        conditions["scalar-curvature"] = sup(
            F.scal - (F.S2 - (n - 1) * (n + 2) * F.gradt2) / 9.0)
    else:
        conditions["scalar-curvature"] = sup(
            F.scal - (F.S2 - 4.0 * F.gradt2) / 9.0)
        rhs = ((2.0 / 3.0) * F.sha
               - (8.0 / 9.0) * (F.S_gradt
                                + F.dt[:, None] * F.dt[None, :]
                                - 0.5 * F.gradt2 * F.g))
        conditions["tau-display"] = sup(F.tau_mat - rhs)
    worst = max(conditions.values())
    return {
        "system": system.name,
        "dimension": n,
        "points": int(F.npts),
        "excluded_points": int(excluded),
        "tolerance": tol,
        "conditions": {k: {"residual": v,
                           "pass": bool(np.isfinite(v) and v < tol)}
                       for k, v in conditions.items()},
        "graph": verdict(worst, tol),
        "pass": bool(np.isfinite(worst) and worst < tol),
    }


def perfect_square_residual(system: SystemDef,
                            points: np.ndarray | None = None, *,
                            tol: float = 1e-8, grid: int = 10,
                            samples: int = 100, seed: int = 0,
                            check: bool = True) -> float:
    """The constant-curvature "perfect square" obstruction (n >= 3).

    On data with tau == 0 over a constant-sectional-curvature metric, the
    scalar

        9 Scal - |S|^2 + (n-1)(n+2) |grad t|^2

    vanishes identically, certifying that the normalization is an improper
    relative sphere.  Preconditions (sup |tau| < tol, sup |D Riem| < tol)
    are verified first and raise ValueError when violated; pass
    ``check=False`` to evaluate the raw residual anyway.
    """
    if system.n < 3:
        raise ValueError("the perfect-square identity needs dimension >= 3")
    if points is None:
        points = np.concatenate(
            [system.grid(grid), system.sample(samples, seed)], axis=1)
    F, _ = _sample_fields(system, points)
    if check:
        failures = []
        r_tau = sup(abundant.tau(F))
        if not r_tau < tol:
            failures.append(f"sup |tau| = {r_tau:.3e}")
        r_dR = sup(materialize(covd(F.geo.riemann(), F.geo.Gamma, 4)))
        if not r_dR < tol:
            failures.append(f"sup |D Riem| = {r_dR:.3e} "
                            "(curvature not parallel)")
        if failures:
            raise ValueError("perfect-square preconditions violated: "
                             + "; ".join(failures))
    n = F.n
    return sup(9.0 * F.scal - F.S2 + (n - 1) * (n + 2) * F.gradt2)
