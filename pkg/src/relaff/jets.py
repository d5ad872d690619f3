"""Forward-mode automatic differentiation on truncated multivariate jets.

A *jet* of order ``k`` in ``n`` variables holds, for a smooth function f and a
batch of base points, every raw partial derivative ``D^a f`` with multi-index
``a`` of total order ``|a| <= k``.  "Raw" means the table stores the partial
derivatives themselves, *not* Taylor coefficients: no division by ``a!`` is
ever applied to the multivariate table.  (The univariate Taylor factors
``1/m!`` appear only inside :func:`compose`, where they belong.)

Multi-index order
-----------------
The table rows follow *graded lexicographic* order, frozen once and for all:
indices are sorted by total degree first, then lexicographically with the
first variable ranked highest, so for ``n = 2``::

    (0,0) | (1,0) (0,1) | (2,0) (1,1) (0,2) | (3,0) (2,1) (1,2) (0,3) | ...

Every consumer of ``Jet.values`` (tensor assembly, report serialization,
derivative extraction) relies on this order.  :func:`multi_indices` is the
single source of truth.

Batching
--------
``Jet.values`` has shape ``(T, B)``: ``T`` table rows, ``B`` base points.
All arithmetic is vectorized over the batch axis, which is what makes
whole-chart residual evaluation cheap (one jet multiplication is a single
``np.add.at`` over a precomputed Leibniz pair table instead of a Python loop
per point).

Arithmetic
----------
Products use the generalized Leibniz rule, quotients solve the product
relation by back-substitution in graded order, and elementary functions go
through :func:`compose`, a Horner evaluation of the univariate Taylor
expansion of F around the base value applied to the zero-constant-term jet.
``abs`` is special: it freezes the sign at the base point (and refuses a zero
base value), so it is linear and exact where defined.

Domain failures (``log`` of a non-positive value, division by zero, ...)
raise :class:`JetDomainError` carrying a per-point boolean mask so a caller
evaluating a whole batch can report exactly which points are outside the
domain.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product as _iproduct

import numpy as np

__all__ = [
    "Jet",
    "JetDomainError",
    "multi_indices",
    "table_size",
    "jexp",
    "jlog",
    "jsqrt",
    "jsin",
    "jcos",
    "jtan",
    "jabs",
    "jpow",
]


class JetDomainError(ValueError):
    """A pointwise domain violation during jet evaluation.

    ``mask`` is a boolean array over the batch; ``True`` marks offending
    points.  ``reason`` is a short machine-friendly tag (``"log"``,
    ``"sqrt"``, ``"div"``, ``"abs"``, ``"pow"``).
    """

    def __init__(self, reason: str, mask: np.ndarray, message: str):
        super().__init__(message)
        self.reason = reason
        self.mask = mask


@lru_cache(maxsize=None)
def multi_indices(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices with ``|a| <= k`` in graded lexicographic order."""
    idx = [a for a in _iproduct(range(k + 1), repeat=n) if sum(a) <= k]
    idx.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    return tuple(idx)


def table_size(n: int, k: int) -> int:
    return len(multi_indices(n, k))


@lru_cache(maxsize=None)
def _position(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {a: i for i, a in enumerate(multi_indices(n, k))}


@lru_cache(maxsize=None)
def _binomial_table(kmax: int) -> np.ndarray:
    b = np.zeros((kmax + 1, kmax + 1))
    for i in range(kmax + 1):
        b[i, 0] = 1.0
        for j in range(1, i + 1):
            b[i, j] = b[i - 1, j - 1] + b[i - 1, j]
    return b


@lru_cache(maxsize=None)
def _leibniz_table(n: int, k: int):
    """Flattened generalized-Leibniz pairs.

    Returns ``(IO, IL, IR, C)`` such that for raw-derivative tables f, g::

        (f*g)[IO[p]] += C[p] * f[IL[p]] * g[IR[p]]    for every pair p

    where ``C`` is the product of per-variable binomial coefficients.
    """
    idx = multi_indices(n, k)
    pos = _position(n, k)
    binom = _binomial_table(k)
    IO, IL, IR, C = [], [], [], []
    for a in idx:
        ia = pos[a]
        for b in _iproduct(*(range(ai + 1) for ai in a)):
            c = 1.0
            for ai, bi in zip(a, b):
                c *= binom[ai, bi]
            IO.append(ia)
            IL.append(pos[b])
            IR.append(pos[tuple(ai - bi for ai, bi in zip(a, b))])
            C.append(c)
    return (
        np.asarray(IO, dtype=np.intp),
        np.asarray(IL, dtype=np.intp),
        np.asarray(IR, dtype=np.intp),
        np.asarray(C),
    )


@lru_cache(maxsize=None)
def _division_table(n: int, k: int):
    """Per-row Leibniz pairs for back-substituted division.

    For each output row ``a`` (graded order) the strict pairs
    ``(i_h, i_g, c)`` with ``i_h`` indexing a *previous* row of the quotient
    table: ``h[a] = (f[a] - sum c * h[i_h] * g[i_g]) / g[0]``.
    """
    idx = multi_indices(n, k)
    pos = _position(n, k)
    binom = _binomial_table(k)
    rows = []
    for a in idx:
        IH, IG, C = [], [], []
        for b in _iproduct(*(range(ai + 1) for ai in a)):
            if b == a:
                continue  # the unknown h[a] itself (paired with g[0])
            c = 1.0
            for ai, bi in zip(a, b):
                c *= binom[ai, bi]
            IH.append(pos[b])
            IG.append(pos[tuple(ai - bi for ai, bi in zip(a, b))])
            C.append(c)
        rows.append(
            (
                np.asarray(IH, dtype=np.intp),
                np.asarray(IG, dtype=np.intp),
                np.asarray(C),
            )
        )
    return rows


@lru_cache(maxsize=None)
def _shift_table(n: int, k: int, i: int) -> np.ndarray:
    """Row map realizing d/dx_i: row ``a`` of the derivative is row ``a+e_i``."""
    pos = _position(n, k)
    out = []
    for a in multi_indices(n, k - 1):
        shifted = list(a)
        shifted[i] += 1
        out.append(pos[tuple(shifted)])
    return np.asarray(out, dtype=np.intp)


class Jet:
    """Truncated jet of a scalar function over a batch of base points."""

    __slots__ = ("n", "k", "values")

    def __init__(self, n: int, k: int, values: np.ndarray):
        self.n = n
        self.k = k
        self.values = values  # shape (T, B), row order = multi_indices(n, k)

    # -- constructors ---------------------------------------------------

    @classmethod
    def constant(cls, c, n: int, k: int, batch: int) -> "Jet":
        v = np.zeros((table_size(n, k), batch))
        v[0] = c
        return cls(n, k, v)

    @classmethod
    def variable(cls, i: int, x: np.ndarray, n: int, k: int) -> "Jet":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        v = np.zeros((table_size(n, k), len(x)))
        v[0] = x
        if k >= 1:
            e_i = tuple(1 if j == i else 0 for j in range(n))
            v[_position(n, k)[e_i]] = 1.0
        return cls(n, k, v)

    # -- views ----------------------------------------------------------

    @property
    def batch(self) -> int:
        return self.values.shape[1]

    @property
    def value(self) -> np.ndarray:
        """Base values, shape (B,)."""
        return self.values[0]

    def partial(self, i: int) -> "Jet":
        """The jet of d(self)/dx_i, of order k-1 (a pure table shift)."""
        if self.k < 1:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet(self.n, self.k - 1, self.values[_shift_table(self.n, self.k, i)])

    def truncate(self, k: int) -> "Jet":
        """Forget derivatives above order ``k`` (a prefix of the table)."""
        if k > self.k:
            raise ValueError(f"cannot raise jet order {self.k} -> {k}")
        if k == self.k:
            return self
        return Jet(self.n, k, self.values[: table_size(self.n, k)])

    def deriv(self, alpha: tuple[int, ...]) -> np.ndarray:
        """Raw partial derivative D^alpha, shape (B,)."""
        return self.values[_position(self.n, self.k)[alpha]]

    def copy(self) -> "Jet":
        return Jet(self.n, self.k, self.values.copy())

    # -- arithmetic -----------------------------------------------------

    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if other.n != self.n or other.k != self.k:
                raise ValueError(
                    f"jet shape mismatch: ({self.n},{self.k}) vs ({other.n},{other.k})"
                )
            return other
        if np.isscalar(other) or isinstance(other, np.ndarray):
            return Jet.constant(other, self.n, self.k, self.batch)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.n, self.k, self.values + o.values)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.n, self.k, -self.values)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.n, self.k, self.values - o.values)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return Jet(self.n, self.k, o.values - self.values)

    def __mul__(self, other):
        if not isinstance(other, Jet) and (np.isscalar(other) or isinstance(other, np.ndarray)):
            return Jet(self.n, self.k, self.values * other)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        IO, IL, IR, C = _leibniz_table(self.n, self.k)
        out = np.zeros_like(self.values)
        np.add.at(out, IO, C[:, None] * self.values[IL] * o.values[IR])
        return Jet(self.n, self.k, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet) and (np.isscalar(other) or isinstance(other, np.ndarray)):
            return Jet(self.n, self.k, self.values / other)
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        bad = o.value == 0.0
        if bad.any():
            raise JetDomainError("div", bad, "division by zero at some batch points")
        rows = _division_table(self.n, self.k)
        h = np.empty_like(self.values)
        g0 = o.value
        for i, (IH, IG, C) in enumerate(rows):
            if len(IH):
                acc = np.einsum("p,pb,pb->b", C, h[IH], o.values[IG])
            else:
                acc = 0.0
            h[i] = (self.values[i] - acc) / g0
        return Jet(self.n, self.k, h)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, p):
        return jpow(self, p)


def compose(f: Jet, d: np.ndarray) -> Jet:
    """Jet of F(f) from the univariate derivatives d[m] = F^(m)(f.value).

    ``d`` has shape ``(k+1, B)``.  Horner on the zero-constant-term jet with
    coefficients ``d[m]/m!`` (the only place factorials enter).
    """
    tilde = f.copy()
    tilde.values[0] = 0.0
    k = f.k
    coeff = [d[m] / float(np.prod(np.arange(1, m + 1))) if m else d[0] for m in range(k + 1)]
    acc = Jet.constant(0.0, f.n, f.k, f.batch)
    acc.values[0] = coeff[k]
    for m in range(k - 1, -1, -1):
        acc = acc * tilde
        acc.values[0] += coeff[m]
    return acc


def jexp(f: Jet) -> Jet:
    e = np.exp(f.value)
    d = np.broadcast_to(e, (f.k + 1, f.batch)).copy()
    return compose(f, d)


def jlog(f: Jet) -> Jet:
    bad = ~(f.value > 0.0)
    if bad.any():
        raise JetDomainError("log", bad, "log of a non-positive value at some batch points")
    x0 = f.value
    d = np.empty((f.k + 1, f.batch))
    d[0] = np.log(x0)
    for m in range(1, f.k + 1):
        # d^m/dx^m log x = (-1)^(m-1) (m-1)! / x^m
        d[m] = ((-1.0) ** (m - 1)) * float(np.prod(np.arange(1, m))) / x0**m
    return compose(f, d)


def jsqrt(f: Jet) -> Jet:
    bad = ~(f.value > 0.0)
    if bad.any():
        raise JetDomainError("sqrt", bad, "sqrt of a non-positive value at some batch points")
    x0 = f.value
    d = np.empty((f.k + 1, f.batch))
    d[0] = np.sqrt(x0)
    c = 0.5
    for m in range(1, f.k + 1):
        d[m] = c * x0 ** (0.5 - m) if m else d[0]
        c *= 0.5 - m
    return compose(f, d)


def jsin(f: Jet) -> Jet:
    s, c = np.sin(f.value), np.cos(f.value)
    cycle = [s, c, -s, -c]
    d = np.stack([cycle[m % 4] for m in range(f.k + 1)])
    return compose(f, d)


def jcos(f: Jet) -> Jet:
    s, c = np.sin(f.value), np.cos(f.value)
    cycle = [c, -s, -c, s]
    d = np.stack([cycle[m % 4] for m in range(f.k + 1)])
    return compose(f, d)


@lru_cache(maxsize=None)
def _tan_polys(k: int) -> tuple[tuple[float, ...], ...]:
    """Coefficient lists p_m with d^m/du^m tan(u) = p_m(tan u); p' rule via tan' = 1+tan^2."""
    polys = [(0.0, 1.0)]  # p_0(T) = T
    for _ in range(k):
        p = polys[-1]
        dp = tuple(j * p[j] for j in range(1, len(p)))  # p'
        # p'(T) * (1 + T^2)
        out = [0.0] * (len(dp) + 2)
        for j, cj in enumerate(dp):
            out[j] += cj
            out[j + 2] += cj
        polys.append(tuple(out))
    return tuple(polys)


def jtan(f: Jet) -> Jet:
    T = np.tan(f.value)
    d = np.empty((f.k + 1, f.batch))
    for m, poly in enumerate(_tan_polys(f.k)):
        acc = np.zeros(f.batch)
        for c in reversed(poly):
            acc = acc * T + c
        d[m] = acc
    return compose(f, d)


def jabs(f: Jet) -> Jet:
    bad = f.value == 0.0
    if bad.any():
        raise JetDomainError("abs", bad, "abs at a zero base value (sign undefined)")
    return Jet(f.n, f.k, np.sign(f.value) * f.values)


def jpow(a: Jet, b) -> Jet:
    """a**b.  Integer-constant b: repeated multiplication (negative bases fine).
    Otherwise requires a > 0 and evaluates exp(b * log a)."""
    if np.isscalar(b) and float(b) == int(b):
        p = int(b)
        if p == 0:
            return Jet.constant(1.0, a.n, a.k, a.batch)
        inv = p < 0
        p = abs(p)
        acc = a
        for _ in range(p - 1):
            acc = acc * a
        if inv:
            one = Jet.constant(1.0, a.n, a.k, a.batch)
            return one / acc
        return acc
    if isinstance(b, Jet):
        bad = ~(a.value > 0.0)
        if bad.any():
            raise JetDomainError("pow", bad, "power with non-positive base at some batch points")
        return jexp(b * jlog(a))
    bad = ~(a.value > 0.0)
    if bad.any():
        raise JetDomainError("pow", bad, "power with non-positive base at some batch points")
    return jexp(float(b) * jlog(a))
