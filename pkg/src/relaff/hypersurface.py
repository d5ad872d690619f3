"""Relative hypersurface data attached to an abundant structure.

A non-degenerate relative hypersurface immersion induces, on its parameter
domain, a metric ``G``, a totally symmetric cubic form ``C`` (the lowered
difference tensor between the induced and the Levi-Civita connection) and a
symmetric Weingarten form ``A``.  The trace part of ``C`` splits off as a
one-form ``u`` with trace-free remainder ``U``:

    C(X,Y,Z) = U(X,Y,Z) + u(X) G(Y,Z) + u(Y) G(X,Z) + u(Z) G(X,Y),
    u = tr_G(C) / (n + 2),          tr_G(U) = 0.

The correspondence implemented here pairs such data with a triple (g, S, t)
satisfying the conditions checked by :mod:`relaff.abundant`:

    G = g,        U = S / 3,        u = dt / 3,

while the Weingarten form is forced by the Gauss equations and is taken as

    A = (2/n) [ (n+2) Du - div_G(C) ]
        + ( Scal_G - |C|^2 + (n+2)^2 |u|^2 ) / (n (n-1)) * G.

This closed form is the source of truth for ``A``; the independent dual
route -- curvature of the conjugate connection ``D* = D - Chat``, whose
Ricci tensor equals ``(n-1) A`` -- is kept as a cross-check and exposed as
:func:`weingarten_via_dual_curvature`.

``verify_integrability`` re-checks, pointwise, the equation set that makes
(G, C, A) realizable as an actual immersion (trace and trace-free parts of
the Gauss equations, Ricci/Weyl/Codazzi-type identities, the Codazzi
equation for ``A``), and ``verify_abundant_conditions`` checks the
first-order equations on (U, u) that characterize the image of the abundant
construction.  ``recover_abundant`` inverts the construction: it rebuilds
(S, dt) pointwise from (G, C) alone and re-integrates t along straight
segments from a base point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import abundant, tensor
from .abundant import Fields, sup
from .geometry import (_common_order, _trunc, connection_curvature, covd,
                       materialize, nest)
from .systems import SystemDef

__all__ = [
    "SurfaceFields",
    "HypersurfaceData",
    "build_from_abundant",
    "decompose_cubic",
    "recompose_cubic",
    "weingarten_via_dual_curvature",
    "verify_integrability",
    "verify_abundant_conditions",
    "cubic_split_identities",
    "recover_abundant",
    "RecoveredAbundant",
]


# ---------------------------------------------------------------------------
# evaluated hypersurface tensors


class SurfaceFields(Fields):
    """Hypersurface tensors (G, C, U, u, A, ...) evaluated at sample points.

    Extends the abundant-side cache with the quantities of the induced
    geometry.  Everything is derived from the chart data via the ansatz
    G = g, U = S/3, u = dt/3; the Weingarten form comes from its closed
    formula (see module docstring) and is differentiable once.
    """

    # -- trace part u = dt/3 ----------------------------------------------

    @cached_property
    def u(self) -> np.ndarray:
        return self.dt / 3.0

    @cached_property
    def uhat(self) -> np.ndarray:
        """Raised trace part, uhat^i = G^{ij} u_j."""
        return self.gradt / 3.0

    @cached_property
    def u2(self) -> np.ndarray:
        """|u|^2_G, shape (B,)."""
        return self.gradt2 / 9.0

    @cached_property
    def du_first(self) -> np.ndarray:
        """nabla_a u_i (derivative slot first); symmetric since u is exact."""
        return self.hess / 3.0

    @cached_property
    def divu(self) -> np.ndarray:
        return np.einsum('aiB,aiB->B', self.ginv, self.du_first)

    # -- trace-free part U = S/3 -------------------------------------------

    @cached_property
    def U(self) -> np.ndarray:
        return self.S / 3.0

    @cached_property
    def dU(self) -> np.ndarray:
        """(nabla U)(X,Y,Z;W) with derivative slot last, from dS/3."""
        return self.dS / 3.0

    @cached_property
    def divU(self) -> np.ndarray:
        return self.divS / 3.0

    @cached_property
    def U2(self) -> np.ndarray:
        return self.S2 / 9.0

    @cached_property
    def scrU(self) -> np.ndarray:
        """scrU(X,Y) = U(X,a,b) U(Y,c,d) G^{ac} G^{bd}."""
        return self.scrS / 9.0

    @cached_property
    def scrU0(self) -> np.ndarray:
        """Trace-free part of scrU."""
        return self.scrS0 / 9.0

    @cached_property
    def frakU(self) -> np.ndarray:
        """frakU(X,Y,Z,W) = G(U_X U_Y W, Z), pairing (X,Z), (Y,W)."""
        return np.einsum('xzaB,ywbB,abB->xyzwB', self.U, self.U, self.ginv)

    @cached_property
    def U_uhat(self) -> np.ndarray:
        """U(X,Y,uhat)."""
        return np.einsum('xymB,mB->xyB', self.U, self.uhat)

    # -- full cubic form ----------------------------------------------------

    @cached_property
    def C_jets(self):
        n = self.n
        uj = [self.t_jet.partial(i) * (1.0 / 3.0) for i in range(n)]
        km = min(_common_order(self.S_jets), _common_order(uj),
                 _common_order(self.geo.g))
        Sj = _trunc(self.S_jets, km)
        uj = _trunc(uj, km)
        gj = _trunc(self.geo.g, km)

        def entry(idx):
            i, j, k = idx
            return (Sj[i][j][k] * (1.0 / 3.0)
                    + uj[i] * gj[j][k] + uj[j] * gj[i][k] + uj[k] * gj[i][j])

        return nest((n, n, n), entry)

    @cached_property
    def C(self) -> np.ndarray:
        return materialize(self.C_jets)

    @cached_property
    def Chat(self) -> np.ndarray:
        """Chat^k_{ij} = G^{kl} C_{lij} (difference tensor, raised)."""
        return np.einsum('klB,lijB->kijB', self.ginv, self.C)

    @cached_property
    def dC_first(self) -> np.ndarray:
        """(nabla_a C)_{ijk}, derivative slot first, shape (n,n,n,n,B)."""
        return materialize(covd(self.C_jets, self.geo.Gamma, 3))

    @cached_property
    def divC(self) -> np.ndarray:
        return np.einsum('abB,abyzB->yzB', self.ginv, self.dC_first)

    @cached_property
    def C2(self) -> np.ndarray:
        return tensor.norm2(self.C, self.ginv)

    @cached_property
    def scrC(self) -> np.ndarray:
        """scrC(X,Y) = tr(Chat_X Chat_Y) = C(X,a,b) C(Y,c,d) G^{ac} G^{bd}."""
        return np.einsum('xabB,ycdB,acB,bdB->xyB',
                         self.C, self.C, self.ginv, self.ginv)

    @cached_property
    def frakC(self) -> np.ndarray:
        """frakC(X,Y,Z,W) = G(Chat_X Chat_Y W, Z), same pairing as frakU."""
        return np.einsum('xzaB,ywbB,abB->xyzwB', self.C, self.C, self.ginv)

    @cached_property
    def C_uhat(self) -> np.ndarray:
        return np.einsum('xymB,mB->xyB', self.C, self.uhat)

    # -- Weingarten form -----------------------------------------------------

    @cached_property
    def A_jets(self):
        n = self.n
        du = [[self.hess_jets[a][i] * (1.0 / 3.0) for i in range(n)]
              for a in range(n)]
        dC = covd(self.C_jets, self.geo.Gamma, 3)
        km = min(_common_order(du), _common_order(dC), self.geo.scal().k)
        gi = _trunc(self.geo.ginv, km)
        gj = _trunc(self.geo.g, km)
        du = _trunc(du, km)
        dC = _trunc(dC, km)
        Cj = _trunc(self.C_jets, km)
        uj = _trunc([self.t_jet.partial(i) * (1.0 / 3.0) for i in range(n)], km)
        scal = self.geo.scal().truncate(km)

        divC = [[None] * n for _ in range(n)]
        for y in range(n):
            for z in range(y, n):
                acc = None
                for a in range(n):
                    for b in range(n):
                        term = gi[a][b] * dC[a][b][y][z]
                        acc = term if acc is None else acc + term
                divC[y][z] = acc
                divC[z][y] = acc

        # |C|^2 via three successive raises, then a full contraction
        up1 = nest((n, n, n), lambda idx: None)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = None
                    for a in range(n):
                        term = gi[i][a] * Cj[a][j][k]
                        acc = term if acc is None else acc + term
                    up1[i][j][k] = acc
        up2 = nest((n, n, n), lambda idx: None)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = None
                    for b in range(n):
                        term = gi[j][b] * up1[i][b][k]
                        acc = term if acc is None else acc + term
                    up2[i][j][k] = acc
        C2 = None
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = None
                    for c in range(n):
                        term = gi[k][c] * up2[i][j][c]
                        acc = term if acc is None else acc + term
                    term = acc * Cj[i][j][k]
                    C2 = term if C2 is None else C2 + term

        u2 = None
        for i in range(n):
            for j in range(n):
                term = gi[i][j] * uj[i] * uj[j]
                u2 = term if u2 is None else u2 + term

        scalar = (scal - C2 + float((n + 2) ** 2) * u2) * (1.0 / (n * (n - 1)))
        A = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                A[i][j] = ((2.0 / n) * (float(n + 2) * du[i][j] - divC[i][j])
                           + scalar * gj[i][j])
                A[j][i] = A[i][j]
        return A

    @cached_property
    def A(self) -> np.ndarray:
        return materialize(self.A_jets)

    @cached_property
    def Ahat(self) -> np.ndarray:
        """Ahat^k_j = G^{ki} A_{ij} (Weingarten operator)."""
        return np.einsum('kiB,ijB->kjB', self.ginv, self.A)

    @cached_property
    def trA(self) -> np.ndarray:
        return np.einsum('ijB,ijB->B', self.ginv, self.A)

    @cached_property
    def dA_first(self) -> np.ndarray:
        """(nabla_a A)_{ij}, derivative slot first."""
        return materialize(covd(self.A_jets, self.geo.Gamma, 2))


# ---------------------------------------------------------------------------
# the data package


@dataclass(frozen=True)
class HypersurfaceData:
    """Chart-level hypersurface data: a system definition plus, when built
    through :func:`build_from_abundant`, the verification report that
    justified the construction."""

    system: SystemDef
    report: dict | None = field(default=None, compare=False)

    @property
    def n(self) -> int:
        return self.system.n

    @property
    def name(self) -> str:
        return self.system.name

    def fields(self, points: np.ndarray, **kw) -> SurfaceFields:
        return SurfaceFields(self.system, points, **kw)


def build_from_abundant(system: SystemDef, *, tol: float = 1e-8,
                        force: bool = False, grid: int = 10,
                        samples: int = 100, seed: int = 0) -> HypersurfaceData:
    """Construct hypersurface data from a system's (g, S, t).

    The defining conditions are verified first (same sampling defaults as
    :func:`relaff.abundant.verify_conditions`); a failed verification raises
    ``ValueError`` naming the failing conditions unless ``force`` is set.
    """
    report = abundant.verify_conditions(system, tol=tol, grid=grid,
                                        samples=samples, seed=seed)
    if not report["pass"] and not force:
        failed = [k
                  for group in ("preconditions", "conditions", "cross_checks")
                  for k, v in report[group].items() if not v["pass"]]
        raise ValueError(
            f"system {system.name!r} does not satisfy the abundant conditions "
            f"(failing: {', '.join(failed)}); pass force=True to build anyway")
    return HypersurfaceData(system=system, report=report)


# ---------------------------------------------------------------------------
# pointwise cubic-form split


def decompose_cubic(C: np.ndarray, G: np.ndarray, *,
                    sym_tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Split a totally symmetric cubic form into (U, u) with tr_G(U) = 0.

    ``C`` has shape (n, n, n, B) and ``G`` shape (n, n, B), batch last.
    Raises ``ValueError`` if ``C`` is not symmetric to within ``sym_tol``.
    """
    C = np.asarray(C, dtype=float)
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    defect = sup(C - tensor.sym(C))
    if defect > sym_tol:
        raise ValueError(
            f"cubic form is not totally symmetric (defect {defect:.3e})")
    Ginv = tensor.inv_batch(G)
    u = np.einsum('abB,abzB->zB', Ginv, C) / (n + 2)
    return C - _trace_pattern(u, G), u


def recompose_cubic(U: np.ndarray, u: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Inverse of :func:`decompose_cubic`: C = U + (u o G + cyclic)."""
    return np.asarray(U, dtype=float) + _trace_pattern(np.asarray(u, float),
                                                       np.asarray(G, float))


def _trace_pattern(u: np.ndarray, G: np.ndarray) -> np.ndarray:
    return (u[:, None, None, :] * G[None, :, :, :]
            + u[None, :, None, :] * G[:, None, :, :]
            + u[None, None, :, :] * G[:, :, None, :])


# ---------------------------------------------------------------------------
# dual-route Weingarten form


def _dual_weingarten(F: SurfaceFields) -> np.ndarray:
    """A = Ric*/(n-1) where Ric* is the Ricci tensor of the conjugate
    connection D* = D - Chat (D the Levi-Civita connection of G)."""
    n = F.n
    Cj = F.C_jets
    km = min(_common_order(F.geo.Gamma), _common_order(Cj))
    Gam = _trunc(F.geo.Gamma, km)
    gi = _trunc(F.geo.ginv, km)
    Cj = _trunc(Cj, km)

    def entry(idx):
        k, i, j = idx
        acc = None
        for l in range(n):
            term = gi[k][l] * Cj[l][i][j]
            acc = term if acc is None else acc + term
        return Gam[k][i][j] - acc

    Gstar = nest((n, n, n), entry)
    Rstar = materialize(connection_curvature(Gstar))
    ric_star = np.einsum('aajkB->jkB', Rstar)
    return ric_star / (n - 1)


def weingarten_via_dual_curvature(hs: HypersurfaceData,
                                  points: np.ndarray) -> np.ndarray:
    """Weingarten form at ``points`` computed through the conjugate
    connection's curvature (independent of the closed formula)."""
    return _dual_weingarten(hs.fields(points))


# ---------------------------------------------------------------------------
# integrability residuals


def _shifted_A(F: SurfaceFields, shift: float):
    """(A, Ahat, dA) with an optional diagnostic shift A -> A + shift * G."""
    if shift == 0.0:
        return F.A, F.Ahat, F.dA_first
    A = F.A + shift * F.g
    Ahat = np.einsum('kiB,ijB->kjB', F.ginv, A)
    n = F.n
    km = _common_order(F.A_jets)
    gj = _trunc(F.geo.g, km)
    Aj = [[F.A_jets[i][j] + shift * gj[i][j] for j in range(n)]
          for i in range(n)]
    dA = materialize(covd(Aj, F.geo.Gamma, 2))
    return A, Ahat, dA


def weingarten_tracefree_residual(F: SurfaceFields, A=None) -> np.ndarray:
    """Trace-free part of the Gauss constraint on A:
    ring(A) - (2/n) [ (n+2) Du - div_G(C) ]  (the bracket is trace-free)."""
    A = F.A if A is None else A
    Aring = tensor.sym0_2(tensor.sym(A), F.g, F.ginv)
    rhs = (2.0 / F.n) * (float(F.n + 2) * F.du_first - F.divC)
    return Aring - rhs


def weingarten_trace_residual(F: SurfaceFields, A=None) -> np.ndarray:
    """(n-1) tr(Ahat) - ( Scal_G - |C|^2 + (n+2)^2 |u|^2 )."""
    n = F.n
    trA = F.trA if A is None else np.einsum('ijB,ijB->B', F.ginv, A)
    return (n - 1) * trA - (F.scal - F.C2 + float((n + 2) ** 2) * F.u2)


def ricci_identity_residual(F: SurfaceFields, A=None) -> np.ndarray:
    """((n-2)/2) ring(A) + ((n-1)/n) tr(Ahat) G
       - [ Ric_G - scrC + (n+2) C(.,.,uhat) ]."""
    n = F.n
    A = F.A if A is None else A
    trA = np.einsum('ijB,ijB->B', F.ginv, A)
    Aring = tensor.sym0_2(tensor.sym(A), F.g, F.ginv)
    lhs = 0.5 * (n - 2) * Aring + ((n - 1.0) / n) * trA * F.g
    rhs = F.ric - F.scrC + (n + 2) * F.C_uhat
    return lhs - rhs


def weyl_identity_residual(F: SurfaceFields) -> np.ndarray:
    """Weyl_G - 2 * Pi_Weyl0(frakC); identically zero when n = 2."""
    if F.n < 3:
        return np.zeros_like(F.frakC)
    return F.geo.weyl() - 2.0 * tensor.weyl0(F.frakC, F.g, F.ginv)


def weyl_identity_residual_via_U(F: SurfaceFields) -> np.ndarray:
    """Same identity through the trace-free part: Weyl_G - 2 Pi_Weyl0(frakU)."""
    if F.n < 3:
        return np.zeros_like(F.frakU)
    return F.geo.weyl() - 2.0 * tensor.weyl0(F.frakU, F.g, F.ginv)


def codazzi_identity_residual(F: SurfaceFields) -> np.ndarray:
    """Pi_Codazzi0(nabla U) with the derivative slot first."""
    return tensor.codazzi0(F.dS_first / 3.0, F.g, F.ginv)


def weingarten_codazzi_residual(F: SurfaceFields, A=None, Ahat=None,
                                dA=None) -> np.ndarray:
    """Codazzi equation for the Weingarten form, lowered with G:
    (nabla_X A)(Y,Z) - (nabla_Y A)(X,Z) - C(Y,Z,Ahat(X)) + C(X,Z,Ahat(Y))."""
    Ahat = F.Ahat if Ahat is None else Ahat
    dA = F.dA_first if dA is None else dA
    lhs = dA - np.einsum('yxzB->xyzB', dA)
    comm = (np.einsum('yzmB,mxB->xyzB', F.C, Ahat)
            - np.einsum('xzmB,myB->xyzB', F.C, Ahat))
    return lhs - comm


def gauss_tangential_residual(F: SurfaceFields, A=None, Ahat=None) -> np.ndarray:
    """Full tangential Gauss equation for the curvature of G:

    R(X,Y)Z - [Chat_Y Chat_X - Chat_X Chat_Y] Z
      - 1/2 ( A(Y,Z) X - A(X,Z) Y + Ahat(X) G(Y,Z) - Ahat(Y) G(X,Z) ).
    """
    n = F.n
    A = F.A if A is None else A
    Ahat = F.Ahat if Ahat is None else Ahat
    Rup = F.geo.mat("riemann_up")
    Ch = F.Chat
    CC = (np.einsum('lymB,mxzB->lxyzB', Ch, Ch)
          - np.einsum('lxmB,myzB->lxyzB', Ch, Ch))
    eye = np.eye(n)
    half = 0.5 * (np.einsum('lx,yzB->lxyzB', eye, A)
                  - np.einsum('ly,xzB->lxyzB', eye, A)
                  + np.einsum('lxB,yzB->lxyzB', Ahat, F.g)
                  - np.einsum('lyB,xzB->lxyzB', Ahat, F.g))
    return Rup - CC - half


def gauss_cubic_residual(F: SurfaceFields, A=None) -> np.ndarray:
    """Full Gauss equation for the skew part of nabla C:

    (nabla_X C)(Y,Z,W) - (nabla_Y C)(X,Z,W)
      - 1/2 ( A(X,W) G(Y,Z) + A(X,Z) G(Y,W)
            - A(Y,W) G(X,Z) - A(Y,Z) G(X,W) ).
    """
    A = F.A if A is None else A
    dC = F.dC_first
    lhs = dC - np.einsum('yxzwB->xyzwB', dC)
    rhs = 0.5 * (np.einsum('xwB,yzB->xyzwB', A, F.g)
                 + np.einsum('xzB,ywB->xyzwB', A, F.g)
                 - np.einsum('ywB,xzB->xyzwB', A, F.g)
                 - np.einsum('yzB,xwB->xyzwB', A, F.g))
    return lhs - rhs


def cubic_split_identities(F: SurfaceFields) -> dict[str, float]:
    """Sup-norm residuals of the algebraic/differential identities relating
    the C-level and (U, u)-level quantities; all hold for any symmetric
    cubic form split by trace, independent of the structure equations."""
    n = F.n
    uu = F.u[:, None, :] * F.u[None, :, :]
    scrC0 = tensor.sym0_2(F.scrC, F.g, F.ginv)
    r_scr = scrC0 - (F.scrU0 + 4.0 * tensor.sym0_2(F.U_uhat, F.g, F.ginv)
                     + (n + 6) * tensor.sym0_2(uu, F.g, F.ginv))
    r_div = F.divC - (F.divU + 2.0 * F.du_first + F.divu * F.g)
    r_norm = F.C2 - (F.U2 + 3.0 * (n + 2) * F.u2)
    r_uhat = F.C_uhat - (F.U_uhat + 2.0 * uu + F.u2 * F.g)
    return {
        "squares": sup(r_scr),
        "divergence": sup(r_div),
        "norm": sup(r_norm),
        "u-contraction": sup(r_uhat),
    }


# ---------------------------------------------------------------------------
# abundance conditions in (U, u) variables


def u_derivative_residual(F: SurfaceFields) -> np.ndarray:
    """n >= 3 trace equation:
    nabla u - [ P_G + u (x) u - (|u|^2/2) G
                + (scrU + (n-6)/(2(n+2)(n-1)) |U|^2 G) / (n-2) ]."""
    n = F.n
    if n < 3:
        raise ValueError("the u-derivative equation applies to n >= 3 only")
    uu = F.u[:, None, :] * F.u[None, :, :]
    rhs = (F.schouten + uu - 0.5 * F.u2 * F.g
           + (F.scrU + ((n - 6.0) / (2.0 * (n + 2) * (n - 1))) * F.U2 * F.g)
           / (n - 2))
    return F.du_first - rhs


def U_derivative_residual(F: SurfaceFields) -> np.ndarray:
    """Trace-free equation, any n:
    Pi_Sym4_0(nabla U) - Pi_Sym4_0( frakU + 4 U (x) u )   (n >= 3)
    Pi_Sym4_0(nabla U) - 4 Pi_Sym4_0( U (x) u )           (n = 2)."""
    Uu = F.U[:, :, :, None, :] * F.u[None, None, None, :, :]
    src = 4.0 * Uu if F.n == 2 else F.frakU + 4.0 * Uu
    return (tensor.sym0_4(F.dU, F.g, F.ginv)
            - tensor.sym0_4(src, F.g, F.ginv))


def x_form_residual(F: SurfaceFields) -> np.ndarray:
    """n = 2 second-order equation on X := 3 (div_G U + 2 U(.,.,uhat)):
    Pi_Sym3_0( nabla X - 4 X (x) u ) - 9 |U|^2 U."""
    if F.n != 2:
        raise ValueError("the X-form equation applies to n = 2 only")
    X = 3.0 * (F.divU + 2.0 * F.U_uhat)
    dX = materialize(covd(F.sha_jets, F.geo.Gamma, 2))
    # sha_jets is exactly X (same combination in (S, t) variables);
    # guard against drift between the two assemblies
    if sup(F.sha - X) > 1e-10:
        raise AssertionError("X-form assembly mismatch")
    core = dX - 4.0 * np.einsum('ijB,aB->aijB', X, F.u)
    lhs = tensor.sym0_3(core, F.g, F.ginv)
    return lhs - 9.0 * F.U2 * F.U


def u_divergence_residual(F: SurfaceFields) -> np.ndarray:
    """n = 2 scalar equation: div_G(u) - Scal_G / 2 - |U|^2."""
    if F.n != 2:
        raise ValueError("the u-divergence equation applies to n = 2 only")
    return F.divu - 0.5 * F.scal - F.U2


def divU_formula_residual(F: SurfaceFields) -> np.ndarray:
    """n >= 3 consequence used by the classification:
    U(X,Y,uhat) - [ 2/(n-2) ring(scrU) - div_G(U)/n ]."""
    n = F.n
    if n < 3:
        raise ValueError("the div(U) formula applies to n >= 3 only")
    return F.U_uhat - ((2.0 / (n - 2)) * F.scrU0 - F.divU / n)


# ---------------------------------------------------------------------------
# verification drivers


def _surface_fields(system: SystemDef, points: np.ndarray,
                    orders: tuple | None = None):
    cls = abundant._fields_cls(SurfaceFields, orders, (3, 2, 3))
    return abundant._sample_fields(system, points,
                                   cls=SurfaceFields if cls is None else cls)


def _report(system: SystemDef, F, excluded: int, tol: float,
            conditions: dict, preconditions: dict, cross: dict,
            extra: dict | None = None) -> dict:
    every = {**conditions, **preconditions, **cross}
    ok = all(np.isfinite(v) and v < tol for v in every.values())

    def table(d):
        return {k: {"residual": v, "pass": bool(np.isfinite(v) and v < tol)}
                for k, v in d.items()}

    out = {
        "system": system.name,
        "dimension": F.n,
        "regime": "2d" if F.n == 2 else "nd",
        "points": int(F.npts),
        "excluded_points": int(excluded),
        "tolerance": tol,
        "conditions": table(conditions),
        "preconditions": table(preconditions),
        "cross_checks": table(cross),
        "pass": bool(ok),
    }
    if extra:
        out.update(extra)
    return out


def verify_integrability(hs: HypersurfaceData, points: np.ndarray | None = None,
                         *, tol: float = 1e-8, grid: int = 10,
                         samples: int = 100, seed: int = 0,
                         weingarten_shift: float = 0.0,
                         orders: tuple | None = None) -> dict:
    """Check the structure equations that make (G, C, A) an actual
    hypersurface package.  ``weingarten_shift`` adds ``shift * G`` to A
    before checking -- a diagnostic knob for sensitivity tests."""
    system = hs.system
    if points is None:
        points = np.concatenate(
            [system.grid(grid), system.sample(samples, seed)], axis=1)
    F, excluded = _surface_fields(system, points, orders)
    n = F.n
    A, Ahat, dA = _shifted_A(F, weingarten_shift)

    conditions = {
        "weingarten-trace-free-part": sup(weingarten_tracefree_residual(F, A)),
        "weingarten-trace": sup(weingarten_trace_residual(F, A)),
        "ricci-identity": sup(ricci_identity_residual(F, A)),
        "weyl-identity": sup(weyl_identity_residual(F)),
        "codazzi-identity": sup(codazzi_identity_residual(F)),
        "weingarten-codazzi": sup(
            weingarten_codazzi_residual(F, A, Ahat, dA)),
    }
    preconditions = {
        "cubic-symmetric": sup(F.C - tensor.sym(F.C)),
        "cubic-recomposition": sup(
            recompose_cubic(F.U, F.u, F.g) - F.C),
        "u-from-trace": sup(
            np.einsum('abB,abzB->zB', F.ginv, F.C) / (n + 2) - F.u),
        "U-trace-free": sup(tensor.trace(F.U, F.ginv, (0, 1))),
        "weingarten-symmetric": sup(A - np.swapaxes(A, 0, 1)),
    }
    cross = {
        "gauss-tangential": sup(gauss_tangential_residual(F, A, Ahat)),
        "gauss-cubic": sup(gauss_cubic_residual(F, A)),
        "weingarten-dual-curvature": sup(A - _dual_weingarten(F)),
    }
    if n >= 3:
        cross["weyl-identity-via-U"] = sup(weyl_identity_residual_via_U(F))
    extra = {}
    if weingarten_shift:
        extra["weingarten_shift"] = weingarten_shift
    return _report(system, F, excluded, tol, conditions, preconditions,
                   cross, extra)


def verify_abundant_conditions(hs: HypersurfaceData,
                               points: np.ndarray | None = None, *,
                               tol: float = 1e-8, grid: int = 10,
                               samples: int = 100, seed: int = 0,
                               orders: tuple | None = None) -> dict:
    """Check the first-order equations on (U, u) that characterize
    hypersurface data arising from an abundant structure."""
    system = hs.system
    if points is None:
        points = np.concatenate(
            [system.grid(grid), system.sample(samples, seed)], axis=1)
    F, excluded = _surface_fields(system, points, orders)
    n = F.n

    preconditions = {
        "U-symmetric": sup(F.U - tensor.sym(F.U)),
        "U-trace-free": sup(tensor.trace(F.U, F.ginv, (0, 1))),
    }
    cross = {}
    if n >= 3:
        preconditions["metric-weyl"] = sup(F.geo.weyl())
        conditions = {
            "derivative-of-u": sup(u_derivative_residual(F)),
            "derivative-of-U": sup(U_derivative_residual(F)),
        }
        cross["divU-formula"] = sup(divU_formula_residual(F))
    else:
        conditions = {
            "derivative-of-U": sup(U_derivative_residual(F)),
            "derivative-of-x-form": sup(x_form_residual(F)),
            "divergence-of-u": sup(u_divergence_residual(F)),
        }
    return _report(system, F, excluded, tol, conditions, preconditions, cross)


# ---------------------------------------------------------------------------
# recovery of the abundant side from (G, C)


def _trace_u(F: SurfaceFields) -> np.ndarray:
    """u recovered from the cubic form alone: tr_G(C) / (n+2)."""
    return np.einsum('abB,abzB->zB', F.ginv, F.C) / (F.n + 2)


def u_closedness(F: SurfaceFields) -> float:
    """Sup norm of the skew part of d(u) with u := tr_G(C)/(n+2),
    assembled from the jets of C (zero exactly when u is exact)."""
    n = F.n
    km = _common_order(F.C_jets) - 1
    gi = _trunc(F.geo.ginv, km + 1)
    du = np.zeros((n, n, F.npts))
    for i in range(n):
        acc = None
        for a in range(n):
            for b in range(n):
                term = gi[a][b] * F.C_jets[a][b][i]
                acc = term if acc is None else acc + term
        ui = acc * (1.0 / (n + 2))
        for j in range(n):
            du[j, i] = ui.partial(j).value
    return sup(du - np.swapaxes(du, 0, 1))


def _segment_integrals(hs: HypersurfaceData, base: np.ndarray,
                       targets: np.ndarray, *, abs_tol: float = 1e-10,
                       max_refine: int = 12) -> np.ndarray:
    """integral_0^1 u(gamma(s)) . (target - base) ds for each target, with
    gamma the straight segment from base.  Composite Simpson, refined by
    interval doubling until every integral moves by less than ``abs_tol``."""
    dirs = targets - base[:, None]            # (n, N)
    N = targets.shape[1]
    prev = None
    m = 4
    while m <= 2 ** max_refine:
        s = np.linspace(0.0, 1.0, m + 1)
        pts = base[:, None, None] + s[None, None, :] * dirs[:, :, None]
        flat = pts.reshape(hs.n, N * (m + 1))
        F = hs.fields(flat, g_order=1, s_order=0, t_order=1)
        u = _trace_u(F).reshape(hs.n, N, m + 1)
        w = np.einsum('inB,in->nB', u, dirs)  # (N, m+1)
        weights = np.ones(m + 1)
        weights[1:-1:2] = 4.0
        weights[2:-1:2] = 2.0
        vals = (w @ weights) / (3.0 * m)
        if prev is not None and np.max(np.abs(vals - prev)) < abs_tol:
            return vals
        prev = vals
        m *= 2
    raise RuntimeError(
        f"segment integrals did not reach {abs_tol:g} after {max_refine} "
        "refinements; the trace one-form is not smooth enough on the box")


@dataclass
class RecoveredAbundant:
    """(S, dt, t) reconstructed from hypersurface data (G, C) alone.

    ``S`` and ``dt`` are pointwise algebra on the cubic form; ``t`` is
    integrated on a tensor grid over the box and interpolated multilinearly
    in between, normalized to t(base_point) = 0.
    """

    hs: HypersurfaceData
    base_point: np.ndarray
    axes: tuple
    t_grid: np.ndarray

    def S(self, points: np.ndarray) -> np.ndarray:
        F = self.hs.fields(np.atleast_2d(points),
                           g_order=1, s_order=0, t_order=1)
        U, _ = decompose_cubic(F.C, F.g)
        return 3.0 * U

    def dt(self, points: np.ndarray) -> np.ndarray:
        F = self.hs.fields(np.atleast_2d(points),
                           g_order=1, s_order=0, t_order=1)
        _, u = decompose_cubic(F.C, F.g)
        return 3.0 * u

    def t(self, points: np.ndarray) -> np.ndarray:
        from scipy.interpolate import RegularGridInterpolator
        interp = RegularGridInterpolator(self.axes, self.t_grid,
                                         method="linear",
                                         bounds_error=False, fill_value=None)
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return interp(pts.T)


def recover_abundant(hs: HypersurfaceData, base_point: np.ndarray | None = None,
                     *, grid: int = 12, du_tol: float = 1e-8,
                     abs_tol: float = 1e-10) -> RecoveredAbundant:
    """Rebuild the abundant side from (G, C): S = 3U and dt = 3u pointwise,
    t = 3 * integral of u along the straight segment from ``base_point``
    (defaults to the box center), sampled on a ``grid``-per-axis lattice.

    Requires u = tr_G(C)/(n+2) to be closed; checked on the lattice to
    ``du_tol`` before any integration."""
    system = hs.system
    base = (system.base_point() if base_point is None
            else np.asarray(base_point, dtype=float))
    if not system.contains(base[:, None])[0]:
        raise ValueError("base point lies outside the domain box")

    axes = tuple(np.linspace(lo, hi, grid) for lo, hi in system.domain)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.reshape(-1) for m in mesh])

    F = hs.fields(nodes, g_order=2, s_order=1, t_order=2)
    closed = u_closedness(F)
    if closed > du_tol:
        raise ValueError(
            f"trace one-form is not closed (|du| = {closed:.3e} > {du_tol:g}); "
            "no scalar t can be recovered")

    vals = 3.0 * _segment_integrals(hs, base, nodes, abs_tol=abs_tol)
    t_grid = vals.reshape(tuple(len(ax) for ax in axes))
    return RecoveredAbundant(hs=hs, base_point=base, axes=axes, t_grid=t_grid)
