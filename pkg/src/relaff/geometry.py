"""Differential geometry of a chart metric, computed on jet-valued fields.

Every tensor field here is a nested Python list of :class:`~relaff.jets.Jet`
objects (index slots outside, batch inside the jets), so taking one more
coordinate derivative is a table shift and covariant derivatives of arbitrary
nesting depth are uniform.  ``materialize`` converts a nested jet field into
the dense batch-last ndarray layout used by :mod:`relaff.tensor` once no more
derivatives are needed.

Conventions (frozen; every curvature consumer relies on them):

* Christoffel symbols   Gamma[k][i][j] = Gamma^k_{ij}
* curvature operator    R(X,Y)Z = nab_X nab_Y Z - nab_Y nab_X Z - nab_[X,Y] Z,
  components            R^l_{ijk} = d_i Gamma^l_{jk} - d_j Gamma^l_{ik}
                                   + Gamma^l_{im} Gamma^m_{jk}
                                   - Gamma^l_{jm} Gamma^m_{ik}
* (0,4) Riemann         Riem(X,Y,Z,W) = g(Z, R(X,Y)W), i.e.
                        Riem_{ijkl} = g_{km} R^m_{ijl}
* Ricci                 Ric(X,Y) = tr(Z -> R(Z,X)Y)  (= trace of Riem in
                        slots (0,2)); with these choices the round sphere has
                        Ric = (n-1) g > 0 and Riem = (g/2) kn g
* Schouten (n >= 3)     P = (Ric - Scal/(2(n-1)) g) / (n-2)
* Weyl                  Weyl = Riem - P kn g  (vanishes for n <= 3)
* covariant derivative  the NEW derivative slot comes FIRST:
                        (covd T)[a][i1..ir] = nab_a T_{i1..ir}

The jet order of a computed field always drops by the number of coordinate
derivatives taken; inputs are truncated to matching orders automatically.
"""

from __future__ import annotations

import numpy as np

from .jets import Jet
from . import tensor as tn

__all__ = [
    "jet_det",
    "jet_matrix_inverse",
    "christoffel",
    "connection_curvature",
    "grad",
    "covd",
    "materialize",
    "nest",
    "Geometry",
]


def _common_order(*fields):
    ks = []

    def walk(f):
        if isinstance(f, Jet):
            ks.append(f.k)
        else:
            for x in f:
                walk(x)

    for f in fields:
        walk(f)
    return min(ks)


def _trunc(field, k):
    if isinstance(field, Jet):
        return field.truncate(k)
    return [_trunc(x, k) for x in field]


def jet_det(M):
    """Determinant of a square nested-list jet matrix (n <= 4), cofactor expansion."""
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    total = None
    for j in range(n):
        minor = [[M[r][c] for c in range(n) if c != j] for r in range(1, n)]
        term = M[0][j] * jet_det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


def jet_matrix_inverse(M):
    """Inverse via adjugate / det.  Entries must be Jets; det must be a unit
    (nonzero base value at every batch point)."""
    n = len(M)
    d = jet_det(M)
    bad = np.abs(d.value) < 1e-10
    if bad.any():
        raise ValueError(
            f"metric determinant below 1e-10 at {int(bad.sum())} point(s); "
            "chart is degenerate there"
        )
    if n == 1:
        one = Jet.constant(1.0, d.n, d.k, d.batch)
        return [[one / d]]
    inv = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[M[r][c] for c in range(n) if c != i] for r in range(n) if r != j]
            cof = jet_det(minor) if n > 2 else minor[0][0]
            if (i + j) % 2:
                cof = -cof
            inv[i][j] = cof / d
    return inv


def christoffel(g, ginv):
    """Gamma[k][i][j] (jets of order k_g - 1) of the Levi-Civita connection."""
    n = len(g)
    dg = [[[g[i][j].partial(a) for j in range(n)] for i in range(n)] for a in range(n)]
    km = dg[0][0][0].k
    gi = _trunc(ginv, km)
    Gam = [[[None] * n for _ in range(n)] for _ in range(n)]
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                acc = None
                for l in range(n):
                    term = gi[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j])
                    acc = term if acc is None else acc + term
                Gam[k][i][j] = 0.5 * acc
                Gam[k][j][i] = Gam[k][i][j]
    return Gam


def grad(f: Jet):
    """Coordinate gradient [d_i f] of a scalar jet (order drops by one)."""
    return [f.partial(i) for i in range(f.n)]


def connection_curvature(Gamma):
    """Curvature R[l][i][j][k] = R^l_{ijk} of an arbitrary torsion-free
    connection given by its coefficient field Gamma[k][i][j] (jets).

    Same index pattern as the Levi-Civita case documented in the module
    docstring; the formula never uses a metric, so it applies verbatim to
    difference connections such as ``Gamma - Shat``.
    """
    n = len(Gamma)
    dG = [[[[Gamma[l][j][k].partial(i) for k in range(n)] for j in range(n)] for i in range(n)] for l in range(n)]
    km = dG[0][0][0][0].k
    Gm = _trunc(Gamma, km)
    R = nest((n, n, n, n), lambda idx: None)
    for l in range(n):
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = dG[l][i][j][k] - dG[l][j][i][k]
                    for m in range(n):
                        acc = acc + Gm[l][i][m] * Gm[m][j][k] - Gm[l][j][m] * Gm[m][i][k]
                    R[l][i][j][k] = acc
    return R


def covd(T, Gamma, rank: int):
    """Covariant derivative of a rank-``rank`` covariant jet field.

    Returns a field of rank ``rank + 1`` with the derivative slot FIRST:
    out[a][i1]...[ir] = nab_a T_{i1...ir}.  Scalars: rank 0."""
    n = len(Gamma)
    if rank == 0:
        return grad(T)

    def get(field, idx):
        for i in idx:
            field = field[i]
        return field

    km = _common_order(T) - 1
    Gm = _trunc(Gamma, km)

    def build(idx):
        if len(idx) < rank:
            return [build(idx + (i,)) for i in range(n)]
        # idx = (a, i1..ir) is assembled derivative-slot-first below
        return None

    from itertools import product as iproduct

    out = [build(()) for _ in range(n)]

    def setval(field, idx, val):
        for i in idx[:-1]:
            field = field[i]
        field[idx[-1]] = val

    for a in range(n):
        for idx in iproduct(range(n), repeat=rank):
            val = get(T, idx).partial(a).truncate(km)
            for s in range(rank):
                for m in range(n):
                    rep = idx[:s] + (m,) + idx[s + 1:]
                    val = val - Gm[m][a][idx[s]] * get(T, rep).truncate(km)
            setval(out[a], idx, val)
    return out


def materialize(field) -> np.ndarray:
    """Nested jet field -> dense ndarray of base values, batch axis last."""
    if isinstance(field, Jet):
        return field.value

    def shape(f):
        if isinstance(f, Jet):
            return (f.batch,)
        return (len(f),) + shape(f[0])

    out = np.empty(shape(field))

    def fill(dst, f):
        if isinstance(f, Jet):
            dst[...] = f.value
            return
        for i, sub in enumerate(f):
            fill(dst[i], sub)

    fill(out, field)
    return out


def nest(shape, fn):
    """Build a nested list field of the given index shape from fn(idx tuple)."""
    if not shape:
        return fn(())

    def rec(prefix, dims):
        if not dims:
            return fn(prefix)
        return [rec(prefix + (i,), dims[1:]) for i in range(dims[0])]

    return rec((), shape)


class Geometry:
    """Curvature package of a metric given as an n x n nested jet field.

    Jet orders: with g of order k, Christoffels have order k-1, curvature
    k-2.  Materialized ndarrays are cached on first use.
    """

    def __init__(self, g):
        self.n = len(g)
        self.g = g
        self.k = _common_order(g)
        self.ginv = jet_matrix_inverse(g)
        self.Gamma = christoffel(g, self.ginv)
        self._cache = {}

    # ---- jet-valued pieces -------------------------------------------

    def riemann_up(self):
        """R[l][i][j][k] = R^l_{ijk}, jets of order k-2."""
        if "riemann_up" in self._cache:
            return self._cache["riemann_up"]
        self._cache["riemann_up"] = connection_curvature(self.Gamma)
        return self._cache["riemann_up"]

    def riemann(self):
        """Lowered Riem[i][j][k][l] = g_{km} R^m_{ijl}, jets."""
        if "riemann" in self._cache:
            return self._cache["riemann"]
        n = self.n
        R = self.riemann_up()
        km = _common_order(R)
        g = _trunc(self.g, km)
        Rm = nest((n, n, n, n), lambda idx: None)
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        acc = None
                        for m in range(n):
                            term = g[k][m] * R[m][i][j][l]
                            acc = term if acc is None else acc + term
                        Rm[i][j][k][l] = acc
        self._cache["riemann"] = Rm
        return Rm

    def ricci(self):
        """Ric[i][j] = R^a_{aij}, jets."""
        if "ricci" in self._cache:
            return self._cache["ricci"]
        n = self.n
        R = self.riemann_up()
        Ric = [[None] * n for _ in range(n)]
        for i in range(n):
            for j in range(n):
                acc = None
                for a in range(n):
                    term = R[a][a][i][j]
                    acc = term if acc is None else acc + term
                Ric[i][j] = acc
        self._cache["ricci"] = Ric
        return Ric

    def scal(self):
        """Scalar curvature jet."""
        if "scal" in self._cache:
            return self._cache["scal"]
        n = self.n
        Ric = self.ricci()
        km = _common_order(Ric)
        gi = _trunc(self.ginv, km)
        acc = None
        for i in range(n):
            for j in range(n):
                term = gi[i][j] * Ric[i][j]
                acc = term if acc is None else acc + term
        self._cache["scal"] = acc
        return acc

    def schouten(self):
        """Schouten tensor jets, n >= 3 only."""
        if self.n < 3:
            raise ValueError("Schouten tensor requires dimension >= 3")
        if "schouten" in self._cache:
            return self._cache["schouten"]
        n = self.n
        Ric = self.ricci()
        sc = self.scal()
        km = _common_order(Ric)
        g = _trunc(self.g, km)
        P = [[(Ric[i][j] - (sc * (1.0 / (2 * (n - 1)))) * g[i][j]) * (1.0 / (n - 2)) for j in range(n)] for i in range(n)]
        self._cache["schouten"] = P
        return P

    # ---- materialized pieces -----------------------------------------

    def mat(self, name):
        key = "m:" + name
        if key not in self._cache:
            self._cache[key] = materialize(getattr(self, name)())
        return self._cache[key]

    @property
    def g_mat(self):
        if "m:g" not in self._cache:
            self._cache["m:g"] = materialize(self.g)
        return self._cache["m:g"]

    @property
    def ginv_mat(self):
        if "m:ginv" not in self._cache:
            self._cache["m:ginv"] = materialize(self.ginv)
        return self._cache["m:ginv"]

    def weyl(self) -> np.ndarray:
        """Materialized Weyl tensor (zero for n < 4 metrics by the theory;
        computed, not assumed)."""
        if "m:weyl" in self._cache:
            return self._cache["m:weyl"]
        if self.n < 3:
            W = np.zeros_like(materialize(self.riemann()))
        else:
            Riem = materialize(self.riemann())
            P = materialize(self.schouten())
            W = Riem - tn.kn(P, self.g_mat)
        self._cache["m:weyl"] = W
        return W
