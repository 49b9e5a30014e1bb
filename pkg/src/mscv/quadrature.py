"""Small tensor-product Gauss quadrature helpers on subcells and facets."""
from __future__ import annotations

import numpy as np

from .mesh import SubMesh


def gauss01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def ref_rule(dim: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss rule on the reference cube [0,1]^dim."""
    x, w = gauss01(n)
    if dim == 1:
        return x[:, None], w
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    pts = np.column_stack([g.ravel() for g in grids])
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    acc = wgrids[0]
    for g in wgrids[1:]:
        acc = acc * g
    return pts, acc.ravel()


def bilinear_points(corners: np.ndarray, ref: np.ndarray):
    """Map reference points through bilinear maps.

    corners: (N, 4, 2) counterclockwise quad corners;
    ref: (m, 2) points in [0,1]^2.
    Returns points (N, m, 2) and Jacobian determinants (N, m).
    """
    xh, yh = ref[:, 0], ref[:, 1]
    shp = np.stack([(1 - xh) * (1 - yh), xh * (1 - yh), xh * yh,
                    (1 - xh) * yh])                       # (4, m)
    pts = np.einsum("nkd,km->nmd", corners, shp)
    p1, p2, p3, p4 = (corners[:, k] for k in range(4))
    dx = (p2 - p1)[:, None, :] * (1 - yh)[None, :, None] \
        + (p3 - p4)[:, None, :] * yh[None, :, None]       # (N, m, 2)
    dy = (p4 - p1)[:, None, :] * (1 - xh)[None, :, None] \
        + (p3 - p2)[:, None, :] * xh[None, :, None]
    det = dx[..., 0] * dy[..., 1] - dx[..., 1] * dy[..., 0]
    return pts, det


def subcell_rule(sub: SubMesh, n: int):
    """Quadrature points/weights on every subcell.

    Returns points (nsub, m, d) and weights (nsub, m) with the Jacobian
    folded in, so sums over the last axis integrate over each subcell.
    """
    ref, w = ref_rule(sub.dim, n)
    if sub.dim == 2:
        pts, det = bilinear_points(sub.subcell_corners, ref)
        return pts, det * w[None, :]
    # 3D subcells are axis-aligned boxes
    lo = sub.subcell_corners.min(axis=1)   # (nsub, 3)
    hi = sub.subcell_corners.max(axis=1)
    span = hi - lo
    pts = lo[:, None, :] + ref[None, :, :] * span[:, None, :]
    vol = np.prod(span, axis=1)
    return pts, vol[:, None] * w[None, :]


def integrate_over_cells(sub: SubMesh, fn, n: int = 2) -> np.ndarray:
    """Integral of a vectorized field over each macro cell, accumulated from
    its subcells.  fn maps (npts, d) -> (npts,) or (npts, k)."""
    pts, w = subcell_rule(sub, n)
    nsub, m, d = pts.shape
    vals = np.asarray(fn(pts.reshape(-1, d)))
    k = 1 if vals.ndim == 1 else vals.shape[1]
    vals = vals.reshape(nsub, m, k)
    per_sub = np.einsum("smk,sm->sk", vals, w)
    per_cell = np.zeros((sub.macro.num_cells, k))
    cell_of_sub = np.arange(nsub) // (4 if sub.dim == 2 else 8)
    np.add.at(per_cell, cell_of_sub, per_sub)
    return per_cell if k > 1 else per_cell[:, 0]


def facet_mean(points_fn, a: np.ndarray, b: np.ndarray, n: int = 3):
    """Mean of a vectorized field over straight segments a->b ((N,2) each)."""
    t, w = gauss01(n)
    pts = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    N, m, d = pts.shape
    vals = np.asarray(points_fn(pts.reshape(-1, d)))
    k = 1 if vals.ndim == 1 else vals.shape[1]
    vals = vals.reshape(N, m, k)
    mean = np.einsum("nmk,m->nk", vals, w)
    return mean if k > 1 else mean[:, 0]


def rect_face_mean(points_fn, corners: np.ndarray, n: int = 3):
    """Mean over axis-aligned rectangular faces given (N, 4, 3) corners."""
    lo = corners.min(axis=1)
    hi = corners.max(axis=1)
    span = hi - lo
    axis = np.argmin(span, axis=1)
    ref, w = ref_rule(2, n)
    N = len(corners)
    out = None
    for f in range(N):
        free = [a for a in range(3) if a != axis[f]]
        pts = np.tile(lo[f], (len(ref), 1))
        pts[:, free[0]] += ref[:, 0] * span[f, free[0]]
        pts[:, free[1]] += ref[:, 1] * span[f, free[1]]
        vals = np.asarray(points_fn(pts))
        k = 1 if vals.ndim == 1 else vals.shape[1]
        if out is None:
            out = np.zeros((N, k))
        out[f] = w @ vals.reshape(len(ref), k)
    return out
