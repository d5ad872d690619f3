"""Numerical realization of the immersion behind hypersurface data.

The existence theorem for relative hypersurfaces rests on a flat connection
on the rank-(n+1) bundle TM + span(xi).  In the coordinate frame
(d_1, ..., d_n, xi) the connection is the matrix-valued one-form

    omega^k_j     = Gamma~^k_{ij} dx^i     (Gamma~ of the induced D + Chat)
    omega^{n+1}_j = G_{ij} dx^i
    omega^k_{n+1} = -Ahat^k_i dx^i
    omega^{n+1}_{n+1} = 0,

and the immersion f together with the frame matrix W (columns = flat-frame
coordinates of d_1, ..., d_n, xi) solves

    W' = W . omega(gamma'),        f' = W . (gamma' padded with 0)

along any chart curve gamma.  We integrate this linear system with a
classical fixed-step RK4, normalized to W = I and f = 0 at a base point.
Flatness of the connection -- equivalently, the integrability equations
checked in :mod:`relaff.hypersurface` -- makes the result path independent
up to integration error; `holonomy_residual` measures exactly that.

Everything downstream (comparing against closed-form immersions, quadric
detection, mesh export) only makes sense up to affine maps of the ambient
space, so fits go through `affine_fit`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hypersurface import HypersurfaceData, SurfaceFields

__all__ = [
    "FrameState",
    "ImmersionResult",
    "connection_matrix",
    "integrate_path",
    "immerse_grid",
    "axis_path",
    "holonomy_residual",
    "default_loop",
    "rk4_order",
    "affine_fit",
    "quadric_fit",
    "export_mesh",
]


# ---------------------------------------------------------------------------
# the connection one-form, evaluated in batch


def _omega_inputs(F: SurfaceFields, shift: float = 0.0):
    """The three position-dependent ingredients of omega at F's points:
    Gamma~^k_{ij} (induced connection), G_{ij}, Ahat^k_i."""
    from .geometry import materialize

    Gt = materialize(F.geo.Gamma) + F.Chat
    Ahat = F.Ahat
    if shift:
        # A -> A + shift * G  <=>  Ahat -> Ahat + shift * Id
        Ahat = Ahat + shift * np.eye(F.n)[:, :, None]
    return Gt, F.g, Ahat


def _omega_along(Gt, G, Ahat, direction):
    """omega(gamma') as a (B, n+1, n+1) stack for a fixed chart direction."""
    n = G.shape[0]
    B = G.shape[-1]
    om = np.zeros((B, n + 1, n + 1))
    # contract the one-form index with the direction
    om[:, :n, :n] = np.einsum('kijB,i->Bkj', Gt, direction)
    om[:, n, :n] = np.einsum('ijB,i->Bj', G, direction)
    om[:, :n, n] = -np.einsum('kiB,i->Bk', Ahat, direction)
    return om


def connection_matrix(hs: HypersurfaceData, p: np.ndarray,
                      direction_index: int) -> np.ndarray:
    """The (n+1)x(n+1) slice omega_i at a single chart point p."""
    p = np.asarray(p, dtype=float).reshape(-1)
    F = hs.fields(p[:, None], g_order=2, s_order=1, t_order=2)
    e = np.zeros(hs.n)
    e[direction_index] = 1.0
    return _omega_along(*_omega_inputs(F), e)[0]


# ---------------------------------------------------------------------------
# fixed-step RK4 along polylines


@dataclass
class FrameState:
    """Current chart point, frame matrix and immersion point."""
    point: np.ndarray
    W: np.ndarray
    f: np.ndarray


def _initial_state(hs: HypersurfaceData, base: np.ndarray) -> FrameState:
    m = hs.n + 1
    return FrameState(point=np.asarray(base, dtype=float).copy(),
                      W=np.eye(m), f=np.zeros(m))


def _advance(hs: HypersurfaceData, state: FrameState, target: np.ndarray,
             step: float, shift: float, min_det: float,
             record=None) -> FrameState:
    """March the frame from state.point to target along the straight chart
    segment.  ``record``, if given, is called as record(s, W, f) after every
    RK4 step with s the segment parameter in [0, 1]."""
    p = state.point
    q = np.asarray(target, dtype=float)
    d = q - p
    L = float(np.linalg.norm(d))
    if L == 0.0:
        return FrameState(point=q, W=state.W.copy(), f=state.f.copy())
    m = max(1, math.ceil(L / step))
    h = 1.0 / m

    # every RK4 stage point is a multiple of h/2: sample the fields once
    s = np.linspace(0.0, 1.0, 2 * m + 1)
    pts = p[:, None] + s[None, :] * d[:, None]
    if not hs.system.contains(pts).all():
        raise ValueError("integration path leaves the domain box")
    F = hs.fields(pts, g_order=2, s_order=1, t_order=2)
    om = _omega_along(*_omega_inputs(F, shift), d)

    v = np.zeros(hs.n + 1)
    v[:hs.n] = d
    W = state.W.copy()
    f = state.f.copy()
    for k in range(m):
        O1, O2, O3 = om[2 * k], om[2 * k + 1], om[2 * k + 2]
        K1 = W @ O1
        Y2 = W + (h / 2.0) * K1
        K2 = Y2 @ O2
        Y3 = W + (h / 2.0) * K2
        K3 = Y3 @ O2
        Y4 = W + h * K3
        K4 = Y4 @ O3
        f = f + (h / 6.0) * ((W + 2.0 * Y2 + 2.0 * Y3 + Y4) @ v)
        W = W + (h / 6.0) * (K1 + 2.0 * K2 + 2.0 * K3 + K4)
        if abs(np.linalg.det(W)) <= min_det:
            raise ValueError(
                f"frame became degenerate (|det W| <= {min_det:g}) at chart "
                f"point {p + (k + 1) * h * d}")
        if record is not None:
            record((k + 1) * h, W, f)
    return FrameState(point=q, W=W, f=f)


def integrate_path(hs: HypersurfaceData, path: np.ndarray, step: float = 1e-3,
                   *, weingarten_shift: float = 0.0,
                   min_det: float = 1e-10) -> FrameState:
    """Integrate the frame system along a polyline (n, K) of chart vertices.

    The first vertex is the base point (W = I, f = 0 there); the chart step
    of the RK4 marcher never exceeds ``step``.
    """
    path = np.atleast_2d(np.asarray(path, dtype=float))
    if path.shape[0] != hs.n:
        raise ValueError(f"path must have shape ({hs.n}, K)")
    state = _initial_state(hs, path[:, 0])
    for k in range(1, path.shape[1]):
        state = _advance(hs, state, path[:, k], step, weingarten_shift,
                         min_det)
    return state


def axis_path(base: np.ndarray, target: np.ndarray,
              order: tuple | None = None) -> np.ndarray:
    """Axis-aligned polyline from base to target, changing one coordinate at
    a time in the given axis order (default x-first: 0, 1, ...)."""
    base = np.asarray(base, dtype=float)
    target = np.asarray(target, dtype=float)
    order = tuple(range(base.size)) if order is None else tuple(order)
    verts = [base.copy()]
    cur = base.copy()
    for ax in order:
        if cur[ax] != target[ax]:
            cur = cur.copy()
            cur[ax] = target[ax]
            verts.append(cur)
    return np.stack(verts, axis=1)


# ---------------------------------------------------------------------------
# grid immersion


@dataclass
class ImmersionResult:
    """Frames and immersion points on a tensor grid, row-major node order."""
    hs: HypersurfaceData
    base_point: np.ndarray
    axes: tuple
    shape: tuple
    nodes: np.ndarray          # (n, N)
    f: np.ndarray              # (N, n+1)
    W: np.ndarray              # (N, n+1, n+1)
    step: float

    @property
    def xi(self) -> np.ndarray:
        """Transversal samples: last frame column, shape (N, n+1)."""
        return self.W[:, :, -1]


def immerse_grid(hs: HypersurfaceData, per_axis=20, step: float = 1e-3,
                 *, base_point: np.ndarray | None = None,
                 axis_order: tuple | None = None,
                 weingarten_shift: float = 0.0,
                 min_det: float = 1e-10) -> ImmersionResult:
    """Integrate to every node of a lattice over the domain box.

    ``per_axis`` is one count for all axes or a per-axis tuple.  Paths run
    axis-by-axis from the base point (x-first by default): the sweep along
    the first axis is shared, then each slice continues along the next
    axis, so every lattice edge is integrated exactly once.
    """
    system = hs.system
    n = hs.n
    base = (system.base_point() if base_point is None
            else np.asarray(base_point, dtype=float))
    if not system.contains(base[:, None])[0]:
        raise ValueError("base point lies outside the domain box")
    order = tuple(range(n)) if axis_order is None else tuple(axis_order)
    if sorted(order) != list(range(n)):
        raise ValueError("axis_order must be a permutation of the axes")

    counts = (tuple(per_axis) if np.iterable(per_axis)
              else (int(per_axis),) * n)
    if len(counts) != n or any(c < 2 for c in counts):
        raise ValueError(f"need one grid count >= 2 per axis, got {counts}")
    axes = tuple(np.linspace(lo, hi, c)
                 for (lo, hi), c in zip(system.domain, counts))
    shape = counts
    N = int(np.prod(counts))
    Wout = np.empty((N, n + 1, n + 1))
    fout = np.empty((N, n + 1))

    strides = np.array([int(np.prod(counts[k + 1:])) for k in range(n)])

    def node_flat(idx):
        return int(np.dot(idx, strides))

    def sweep(state: FrameState, depth: int, idx: list):
        """Walk axis order[depth] outward from the current state's
        coordinate, recursing into the remaining axes at every grid value."""
        ax = order[depth]
        vals = axes[ax]
        start = state.point[ax]
        above = [i for i in range(counts[ax]) if vals[i] >= start]
        below = [i for i in reversed(range(counts[ax])) if vals[i] < start]
        for side in (above, below):
            cur = state
            for i in side:
                target = cur.point.copy()
                target[ax] = vals[i]
                cur = _advance(hs, cur, target, step, weingarten_shift,
                               min_det)
                idx[ax] = i
                if depth == n - 1:
                    k = node_flat(idx)
                    Wout[k] = cur.W
                    fout[k] = cur.f
                else:
                    sweep(cur, depth + 1, idx)
        idx[ax] = -1

    sweep(_initial_state(hs, base), 0, [-1] * n)
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.reshape(-1) for m in mesh])
    return ImmersionResult(hs=hs, base_point=base, axes=axes, shape=shape,
                           nodes=nodes, f=fout, W=Wout, step=step)


# ---------------------------------------------------------------------------
# holonomy and convergence diagnostics


def default_loop(system) -> np.ndarray:
    """Axis-aligned square loop in the first two coordinates, centered at
    the base point, side min(1, 0.8 * smallest involved box width)."""
    base = system.base_point()
    w0 = system.domain[0][1] - system.domain[0][0]
    w1 = system.domain[1][1] - system.domain[1][0]
    side = min(1.0, 0.8 * min(w0, w1))
    c = []
    for dx, dy in ((-1, -1), (1, -1), (1, 1), (-1, 1), (-1, -1)):
        p = base.copy()
        p[0] += dx * side / 2.0
        p[1] += dy * side / 2.0
        c.append(p)
    return np.stack(c, axis=1)


def holonomy_residual(hs: HypersurfaceData, loop: np.ndarray | None = None,
                      step: float = 1e-3, *,
                      weingarten_shift: float = 0.0) -> float:
    """Frobenius distance of the frame from the identity after a closed
    loop; measures the curvature of the reconstruction connection."""
    loop = default_loop(hs.system) if loop is None else np.asarray(loop, float)
    if not np.allclose(loop[:, 0], loop[:, -1]):
        raise ValueError("loop polyline must be closed")
    state = integrate_path(hs, loop, step, weingarten_shift=weingarten_shift)
    return float(np.linalg.norm(state.W - np.eye(hs.n + 1)))


def rk4_order(hs: HypersurfaceData, path: np.ndarray | None = None,
              steps: tuple = (4e-2, 2e-2, 1e-2)) -> float:
    """Observed convergence order of the marcher via Richardson comparison
    of three step sizes on one path (diagonal across the box by default).
    The default steps are coarse enough that the h^4 truncation error
    dominates accumulated roundoff.  Cases the marcher integrates exactly
    (position-independent omega) leave only roundoff and report inf."""
    if path is None:
        lo = np.array([a for a, _ in hs.system.domain])
        hi = np.array([b for _, b in hs.system.domain])
        p0 = 0.9 * lo + 0.1 * hi
        d = 0.8 * (hi - lo)
        # trim to a whole number of coarsest steps so the refinements halve
        # the step exactly (ceil quantization would bias the estimate)
        L = float(np.linalg.norm(d))
        d *= math.floor(L / steps[0]) * steps[0] / L
        path = np.stack([p0, p0 + d], axis=1)
    outs = []
    for st in steps:
        fs = integrate_path(hs, path, st)
        outs.append(np.concatenate([fs.W.reshape(-1), fs.f]))
    d01 = np.linalg.norm(outs[0] - outs[1])
    d12 = np.linalg.norm(outs[1] - outs[2])
    floor = 1e3 * np.finfo(float).eps * (1.0 + np.linalg.norm(outs[2]))
    if max(d01, d12) < floor or d12 == 0.0:
        return float("inf")        # integrated exactly; no order signal
    return float(np.log2(d01 / d12) / np.log2(steps[0] / steps[1]))


# ---------------------------------------------------------------------------
# fitting up to affine maps


def affine_fit(samples: np.ndarray, reference: np.ndarray):
    """Least-squares affine map L, b minimizing sum |L s + b - r|^2.

    ``samples`` and ``reference`` are (N, d) point clouds in the ambient
    space.  Returns (L, b, rms) with rms the root mean square of the
    per-point euclidean residual.  Raises on degenerate sample clouds.
    """
    S = np.asarray(samples, dtype=float)
    R = np.asarray(reference, dtype=float)
    if S.shape != R.shape:
        raise ValueError("samples and reference must have matching shapes")
    N, d = S.shape
    if N < d + 1:
        raise ValueError(f"need at least {d + 1} samples, got {N}")
    X = np.hstack([S, np.ones((N, 1))])
    sol, _, rank, _ = np.linalg.lstsq(X, R, rcond=None)
    if rank < d + 1:
        raise ValueError("sample cloud is affinely degenerate "
                         f"(design rank {rank} < {d + 1})")
    L = sol[:d].T
    b = sol[d]
    resid = S @ L.T + b - R
    rms = float(np.sqrt(np.mean(np.sum(resid ** 2, axis=1))))
    return L, b, rms


def quadric_fit(samples: np.ndarray):
    """Homogeneous least-squares fit of one quadric through a point cloud.

    Builds the (d+1)(d+2)/2 quadric monomials (1, z_i, z_i z_j) on the
    affinely normalized cloud (centered, scaled to unit RMS radius -- a
    quadric stays a quadric) and returns (coefficients, sigma_min/sigma_max)
    from the SVD of the monomial matrix.  A tiny ratio certifies that the
    cloud lies on a quadric hypersurface.
    """
    Z = np.asarray(samples, dtype=float)
    N, d = Z.shape
    mcount = (d + 1) * (d + 2) // 2
    if N < 2 * mcount:
        raise ValueError(f"need at least {2 * mcount} samples, got {N}")
    center = Z.mean(axis=0)
    Z0 = Z - center
    scale = float(np.sqrt(np.mean(np.sum(Z0 ** 2, axis=1))))
    if scale == 0.0:
        raise ValueError("sample cloud is a single point")
    Z0 = Z0 / scale
    cols = [np.ones(N)]
    cols.extend(Z0[:, i] for i in range(d))
    cols.extend(Z0[:, i] * Z0[:, j]
                for i in range(d) for j in range(i, d))
    M = np.stack(cols, axis=1)
    _, sig, Vt = np.linalg.svd(M, full_matrices=False)
    if sig[0] == 0.0:
        raise ValueError("degenerate sample configuration")
    return Vt[-1], float(sig[-1] / sig[0])


# ---------------------------------------------------------------------------
# mesh export (surfaces only)


def export_mesh(result: ImmersionResult, path) -> None:
    """Write the immersed grid as a Wavefront OBJ (n = 2 charts only).

    Vertices appear in row-major node order with 17 significant digits
    (lossless float round trip); each grid quad is split into two
    triangles with 1-based indices.
    """
    if result.hs.n != 2:
        raise ValueError("mesh export supports 2-dimensional charts only")
    gx, gy = result.shape
    lines = []
    for p in result.f:
        lines.append("v " + " ".join("%.17g" % c for c in p))
    for i in range(gx - 1):
        for j in range(gy - 1):
            a = i * gy + j + 1          # 1-based, row-major
            b = (i + 1) * gy + j + 1
            c = (i + 1) * gy + j + 2
            dd = i * gy + j + 2
            lines.append(f"f {a} {b} {c}")
            lines.append(f"f {a} {c} {dd}")
    text = "\n".join(lines) + "\n"
    with open(path, "w") as fh:
        fh.write(text)
