"""Tensor algebra: projector algebra, traces, Kulkarni-Nomizu."""

from __future__ import annotations

import numpy as np
import pytest

from relaff import tensor as tn

RNG = np.random.default_rng(99)


def rand_metric(n, B):
    """Random SPD metric field, shape (n, n, B)."""
    A = RNG.normal(size=(B, n, n))
    G = np.einsum("bij,bkj->bik", A, A) + 2.0 * np.eye(n)
    return np.moveaxis(G, 0, -1)


def rand_tensor(n, r, B):
    return RNG.normal(size=(n,) * r + (B,))


def all_traces_vanish(T, ginv, tol=1e-12):
    r = T.ndim - 1
    scale = 1.0 + np.max(np.abs(T))
    for a in range(r):
        for b in range(a + 1, r):
            tr = tn.trace(T, ginv, (a, b))
            if np.max(np.abs(tr)) > tol * scale:
                return False
    return True


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sym_projector(n):
    B = 5
    T = rand_tensor(n, 3, B)
    S = tn.sym(T)
    # symmetric in every slot pair
    assert np.allclose(S, np.swapaxes(S, 0, 1))
    assert np.allclose(S, np.swapaxes(S, 1, 2))
    # idempotent, fixes symmetric input
    assert np.allclose(tn.sym(S), S, atol=1e-14)
    # antisymmetric 2-tensor goes to zero
    A2 = rand_tensor(n, 2, B)
    A2 = A2 - np.swapaxes(A2, 0, 1)
    assert np.max(np.abs(tn.sym(A2))) < 1e-14
    # equals the brute-force average over all 6 permutations
    brute = (
        T
        + np.transpose(T, (0, 2, 1, 3))
        + np.transpose(T, (1, 0, 2, 3))
        + np.transpose(T, (1, 2, 0, 3))
        + np.transpose(T, (2, 0, 1, 3))
        + np.transpose(T, (2, 1, 0, 3))
    ) / 6.0
    assert np.allclose(S, brute, atol=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_tracefree_sym_projectors(n, m):
    B = 7
    g = rand_metric(n, B)
    gi = tn.inv_batch(g)
    proj = {2: tn.sym0_2, 3: tn.sym0_3, 4: tn.sym0_4}[m]
    T = rand_tensor(n, m, B)
    P = proj(T, g, gi)
    scale = 1.0 + np.max(np.abs(T))
    # all traces vanish
    assert all_traces_vanish(P, gi)
    # idempotent
    assert np.max(np.abs(proj(P, g, gi) - P)) < 1e-12 * scale
    # absorption: tracefree_sym(sym(T)) == tracefree_sym(T)
    assert np.max(np.abs(proj(tn.sym(T), g, gi) - P)) < 1e-12 * scale
    # pure-metric input is annihilated
    if m == 2:
        assert np.max(np.abs(proj(g, g, gi))) < 1e-12
    if m == 4:
        gg = np.einsum("ij...,kl...->ijkl...", g, g)
        assert np.max(np.abs(proj(gg, g, gi))) < 1e-12 * np.max(np.abs(gg))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_kn_symmetries(n):
    B = 4
    g = rand_metric(n, B)
    gi = tn.inv_batch(g)
    q = tn.sym(rand_tensor(n, 2, B))
    K = tn.kn(q, g)
    assert np.allclose(K, -np.einsum("jikl...->ijkl...", K))
    assert np.allclose(K, -np.einsum("ijlk...->ijkl...", K))
    assert np.allclose(K, np.einsum("klij...->ijkl...", K))
    # tr_(0,2) (g kn g) = 2(n-1) g
    gg = tn.kn(g, g)
    tr = tn.trace(gg, gi, (0, 2))
    assert np.allclose(tr, 2.0 * (n - 1) * g, atol=1e-12 * np.max(np.abs(g)))


@pytest.mark.parametrize("n", [3, 4])
def test_weyl0(n):
    B = 6
    g = rand_metric(n, B)
    gi = tn.inv_batch(g)
    # domain of the projector: tensors symmetric within each slot pair
    T = rand_tensor(n, 4, B)
    T = tn.sym(T, slots=(0, 1))
    T = tn.sym(T, slots=(2, 3))
    W = tn.weyl0(T, g, gi)
    scale = 1.0 + np.max(np.abs(T))
    # curvature-type symmetries
    assert np.allclose(W, -np.einsum("jikl...->ijkl...", W), atol=1e-12 * scale)
    assert np.allclose(W, -np.einsum("ijlk...->ijkl...", W), atol=1e-12 * scale)
    assert np.allclose(W, np.einsum("klij...->ijkl...", W), atol=1e-12 * scale)
    # first Bianchi
    bianchi = W + np.einsum("jkil...->ijkl...", W) + np.einsum("kijl...->ijkl...", W)
    assert np.max(np.abs(bianchi)) < 1e-12 * scale
    # totally trace-free -- also for input with no pair symmetry at all
    assert all_traces_vanish(W, gi)
    assert all_traces_vanish(tn.weyl0(rand_tensor(n, 4, B), g, gi), gi)
    # idempotence through the canonical unshuffle
    W2 = tn.weyl0(tn.unshuffle_weyl(W), g, gi)
    assert np.max(np.abs(W2 - W)) < 1e-12 * scale
    # kills metric-paired input g (x) g and q (x) g + g (x) q
    gg = np.einsum("ij...,kl...->ijkl...", g, g)
    assert np.max(np.abs(tn.weyl0(gg, g, gi))) < 1e-12 * np.max(np.abs(gg))
    q = tn.sym(rand_tensor(n, 2, B))
    qg = np.einsum("ij...,kl...->ijkl...", q, g) + np.einsum("ij...,kl...->ijkl...", g, q)
    assert np.max(np.abs(tn.weyl0(qg, g, gi))) < 1e-12 * (1.0 + np.max(np.abs(qg)))


def test_weyl0_zero_in_2d():
    B = 3
    g = rand_metric(2, B)
    gi = tn.inv_batch(g)
    T = rand_tensor(2, 4, B)
    assert np.max(np.abs(tn.weyl0(T, g, gi))) == 0.0


def sym30_field(n, B, g, gi):
    """Random element of T* (x) Sym^3_0: trace-free cubic part per covector slot."""
    T = rand_tensor(n, 4, B)
    out = np.empty_like(T)
    for x in range(n):
        out[x] = tn.sym0_3(T[x], g, gi)
    return out


@pytest.mark.parametrize("n", [3, 4])
def test_codazzi0(n):
    B = 5
    g = rand_metric(n, B)
    gi = tn.inv_batch(g)
    Bfield = sym30_field(n, B, g, gi)
    P = tn.codazzi0(Bfield, g, gi)
    scale = 1.0 + np.max(np.abs(Bfield))
    # output is antisymmetric in the first two slots
    assert np.allclose(P, -np.einsum("jikl...->ijkl...", P), atol=1e-12 * scale)
    # its (0,1)-trace vanishes
    assert np.max(np.abs(tn.trace(P, gi, (0, 1)))) < 1e-12 * scale
    # idempotent
    assert np.max(np.abs(tn.codazzi0(P, g, gi) - P)) < 1e-12 * scale
    # kills symmetric (= Codazzi) inputs from Sym^4_0
    S40 = tn.sym0_4(rand_tensor(n, 4, B), g, gi)
    assert np.max(np.abs(tn.codazzi0(S40, g, gi))) < 1e-12 * (1.0 + np.max(np.abs(S40)))


def test_codazzi0_vanishes_identically_in_2d():
    B = 6
    g = rand_metric(2, B)
    gi = tn.inv_batch(g)
    Bfield = sym30_field(2, B, g, gi)
    out = tn.codazzi0(Bfield, g, gi)
    assert np.max(np.abs(out)) < 1e-12 * (1.0 + np.max(np.abs(Bfield)))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_metric_contractions(n):
    B = 5
    g = rand_metric(n, B)
    gi = tn.inv_batch(g)
    # |g|^2_g = n
    assert np.allclose(tn.norm2(g, gi), float(n), atol=1e-12)
    # raise then lower is the identity
    T = rand_tensor(n, 3, B)
    up = tn.raise_slot(T, gi, 1)
    down = np.einsum("iak...,aj...->ijk...", up, g)
    assert np.max(np.abs(down - T)) < 1e-12 * (1.0 + np.max(np.abs(T)))
    # dot agrees with norm2
    assert np.allclose(tn.dot(T, T, gi), tn.norm2(T, gi), rtol=1e-12)


def test_degenerate_metric_rejected():
    g = np.zeros((2, 2, 3))
    g[0, 0] = [1.0, 1.0, 1.0]
    g[1, 1] = [1.0, 1e-14, 1.0]
    with pytest.raises(ValueError, match="determinant"):
        tn.inv_batch(g)
