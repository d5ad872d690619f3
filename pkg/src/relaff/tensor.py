"""Dense tensor algebra over batches of chart points.

Layout convention: a covariant rank-r tensor field sampled at B points is an
ndarray of shape (n,)*r + (B,), index slots first, batch axis last.  The
metric g and its inverse follow the same convention with r = 2.  All
operations below are einsum-vectorized over the batch axis ('...').

Projectors implemented here:

* sym / sym_part        -- symmetrization over chosen slots
* sym0_2, sym0_3, sym0_4 -- trace-free parts of (fully symmetrized) rank-2/3/4
  tensors with respect to a metric; coefficients fixed by requiring every
  g-trace of the output to vanish identically in any dimension
* weyl0                 -- projection of a tensor with pairwise-symmetric
  slots (12)(34) onto algebraic-Weyl symmetry (zero output in n = 2)
* codazzi0              -- projection onto trace-free Codazzi symmetry for a
  rank-4 tensor whose first slot is distinguished (derivative-like)

plus the Kulkarni-Nomizu product and metric contractions/norms.
"""

from __future__ import annotations

from itertools import permutations
from math import factorial

import numpy as np

__all__ = [
    "sym",
    "kn",
    "trace",
    "raise_slot",
    "norm2",
    "dot",
    "sym0_2",
    "sym0_3",
    "sym0_4",
    "weyl0",
    "unshuffle_weyl",
    "codazzi0",
    "det_batch",
    "inv_batch",
]

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def sym(T: np.ndarray, slots=None) -> np.ndarray:
    """Average of T over all permutations of the given index slots.

    slots defaults to every index slot (all axes except the trailing batch
    axis)."""
    r = T.ndim - 1
    if slots is None:
        slots = tuple(range(r))
    out = np.zeros_like(T)
    base = list(range(T.ndim))
    for perm in permutations(slots):
        ax = base.copy()
        for s, p in zip(slots, perm):
            ax[s] = p
        out += np.transpose(T, ax)
    out /= float(factorial(len(slots)))
    return out


def kn(B1: np.ndarray, B2: np.ndarray) -> np.ndarray:
    """Kulkarni-Nomizu product of two symmetric 2-tensors.

    (B1 kn B2)(X,Y,Z,W) = B1(X,Z)B2(Y,W) + B1(Y,W)B2(X,Z)
                        - B1(X,W)B2(Y,Z) - B1(Y,Z)B2(X,W)
    """
    t1 = np.einsum("ik...,jl...->ijkl...", B1, B2)
    t2 = np.einsum("jl...,ik...->ijkl...", B1, B2)
    t3 = np.einsum("il...,jk...->ijkl...", B1, B2)
    t4 = np.einsum("jk...,il...->ijkl...", B1, B2)
    return t1 + t2 - t3 - t4


def trace(T: np.ndarray, ginv: np.ndarray, slots: tuple[int, int]) -> np.ndarray:
    """Contract two covariant slots of T with the inverse metric."""
    r = T.ndim - 1
    a, b = slots
    src = _LETTERS[:r]
    out = "".join(c for i, c in enumerate(src) if i not in (a, b))
    spec = f"{src}...,{src[a]}{src[b]}...->{out}..."
    return np.einsum(spec, T, ginv)


def raise_slot(T: np.ndarray, ginv: np.ndarray, slot: int) -> np.ndarray:
    """Raise one covariant slot with the inverse metric (slot position kept)."""
    r = T.ndim - 1
    src = _LETTERS[:r]
    z = _LETTERS[r]
    out = src[:slot] + z + src[slot + 1:]
    return np.einsum(f"{src}...,{src[slot]}{z}...->{out}...", T, ginv)


def norm2(T: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Squared g-norm of a covariant tensor, per batch point."""
    r = T.ndim - 1
    a = _LETTERS[:r]
    b = _LETTERS[r: 2 * r]
    gs = ",".join(a[i] + b[i] + "..." for i in range(r))
    return np.einsum(f"{a}...,{b}...,{gs}->...", T, T, *([ginv] * r))


def dot(T1: np.ndarray, T2: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Full g-contraction of two covariant tensors of equal rank."""
    r = T1.ndim - 1
    a = _LETTERS[:r]
    b = _LETTERS[r: 2 * r]
    gs = ",".join(a[i] + b[i] + "..." for i in range(r))
    return np.einsum(f"{a}...,{b}...,{gs}->...", T1, T2, *([ginv] * r))


# ---------------------------------------------------------------------------
# trace-free symmetric projectors


def sym0_2(B: np.ndarray, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Trace-free part of the symmetrization of a 2-tensor."""
    n = g.shape[0]
    S = sym(B)
    tr = np.einsum("ab...,ab...->...", ginv, S)
    return S - (tr / n) * g


def sym0_3(B: np.ndarray, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Trace-free part of the symmetrization of a 3-tensor.

    S0 = Sym B - 3/(n+2) * Sym(g (x) theta),  theta_k = tr_g (Sym B)(.,.,k);
    the coefficient is forced by g^{ij}(g (x) theta)_sym having trace
    (n+2)/3 * theta."""
    n = g.shape[0]
    S = sym(B)
    theta = trace(S, ginv, (0, 1))
    correction = sym(np.einsum("ij...,k...->ijk...", g, theta))
    return S - (3.0 / (n + 2)) * correction


def sym0_4(B: np.ndarray, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Trace-free part of the symmetrization of a 4-tensor.

    With tau = tr_g Sym B and sigma = tr_g tau, subtract
    Sym(g (x) rho) for rho = 6/(n+4) * (tau - sigma g / (2(n+2))); this is the
    unique multiple making every trace vanish."""
    n = g.shape[0]
    S = sym(B)
    tau = trace(S, ginv, (0, 1))
    sigma = np.einsum("ab...,ab...->...", ginv, tau)
    rho = (6.0 / (n + 4)) * (tau - (sigma / (2.0 * (n + 2))) * g)
    correction = sym(np.einsum("ij...,kl...->ijkl...", g, rho))
    return S - correction


# ---------------------------------------------------------------------------
# Weyl and Codazzi projectors


def weyl0(B: np.ndarray, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Project a rank-4 tensor with (12)(34) pair symmetry onto algebraic
    Weyl symmetry: curvature-type symmetries and all traces zero.

    B1(X,Y,Z,W) = 1/4 (B(X,Z,Y,W) - B(X,W,Y,Z) - B(Y,Z,X,W) + B(Y,W,X,Z))
    frak(X,Y)   = 1/(n-2) * tr_g B1(., X, ., Y)
    out         = B1 - (frak - tr_g frak / (2(n-1)) * g) kn g
    """
    n = g.shape[0]
    if n < 3:
        return np.zeros_like(B)
    B1 = 0.25 * (
        np.einsum("ikjl...->ijkl...", B)
        - np.einsum("iljk...->ijkl...", B)
        - np.einsum("jkil...->ijkl...", B)
        + np.einsum("jlik...->ijkl...", B)
    )
    frak = trace(B1, ginv, (0, 2)) / (n - 2.0)
    trf = np.einsum("ab...,ab...->...", ginv, frak)
    P = frak - (trf / (2.0 * (n - 1))) * g
    return B1 - kn(P, g)


def unshuffle_weyl(W: np.ndarray) -> np.ndarray:
    """Canonical right inverse of the pair-antisymmetrization inside weyl0.

    Sends a curvature-pattern tensor back to the (12)(34) slot pattern via
    W(X,Y,Z,W) -> W(X,Z,Y,W); on algebraic Weyl tensors weyl0(unshuffle_weyl(W))
    reproduces W exactly, which is the idempotence statement for weyl0."""
    return np.einsum("ikjl...->ijkl...", W)


def codazzi0(B: np.ndarray, g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Project a rank-4 tensor B(X; Y, Z, W) (first slot derivative-like,
    last two symmetric) onto trace-free Codazzi symmetry.

    2 out(X;Y,Z,W) = B(X;Y,Z,W) - B(Y;X,Z,W)
                     + 1/n * ( b(X,Z) g(Y,W) + b(X,W) g(Y,Z)
                             - b(Y,Z) g(X,W) - b(Y,W) g(X,Z) )
    with b(Z,W) = g^{xy} B(x; y, Z, W).  Identically zero for n = 2.
    """
    n = g.shape[0]
    b = trace(B, ginv, (0, 1))
    anti = B - np.transpose(B, (1, 0, 2, 3, 4))
    corr = (
        np.einsum("ik...,jl...->ijkl...", b, g)
        + np.einsum("il...,jk...->ijkl...", b, g)
        - np.einsum("jk...,il...->ijkl...", b, g)
        - np.einsum("jl...,ik...->ijkl...", b, g)
    )
    return 0.5 * (anti + corr / n)


# ---------------------------------------------------------------------------
# batched linear algebra on the metric


def det_batch(G: np.ndarray) -> np.ndarray:
    """Determinant of a (n, n, B) field, per batch point."""
    return np.linalg.det(np.moveaxis(G, -1, 0))


def inv_batch(G: np.ndarray, min_det: float = 1e-10) -> np.ndarray:
    """Inverse of a (n, n, B) metric field; refuses near-singular points."""
    d = det_batch(G)
    bad = np.abs(d) < min_det
    if bad.any():
        raise ValueError(
            f"metric determinant below {min_det} at {int(bad.sum())} point(s); "
            "chart is degenerate there"
        )
    return np.moveaxis(np.linalg.inv(np.moveaxis(G, -1, 0)), 0, -1)
