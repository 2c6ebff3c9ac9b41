"""Boundary closure of the band: ghost-value extrapolation and resampling.

Fields on the band stand for surface functions extended to be constant along
normals, so a ghost node's value is the field's value anywhere on the ghost's
own normal line.  The closure interpolates band values with tensor-product
cubics at a point on that line at a prescribed *target depth* from the
surface, on the ghost's side.  When the interpolation cell at the target
depth is not fully interior, the evaluation point slides toward (and past)
the surface in quarter-spacing steps until the cell fits; a ghost whose whole
ladder fails raises `StencilEscapesBand`.

`reinit_matrix` builds the same kind of operator for interior nodes with
target depth zero: resampling at each node's foot point restores constancy
along normals, which is how long time integrations are kept from drifting in
the normal direction.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import sparse

from .errors import StencilEscapesBand
from .narrowband import Narrowband

__all__ = ["GhostClosure", "ghost_closure", "reinit_matrix"]


def _cell_offsets(dim: int) -> np.ndarray:
    return np.array(list(product((-1, 0, 1, 2), repeat=dim)), dtype=np.int64)


def _cubic_weights_1d(t: np.ndarray) -> np.ndarray:
    """Lagrange weights on nodes {-1, 0, 1, 2} evaluated at t in [0, 1]."""
    return np.stack([
        -t * (t - 1) * (t - 2) / 6.0,
        (t * t - 1) * (t - 2) / 2.0,
        -t * (t + 1) * (t - 2) / 2.0,
        t * (t * t - 1) / 6.0,
    ], axis=1)


def _cubic_rows(band: Narrowband, pts: np.ndarray):
    """Interior-only cubic interpolation stencils at ``pts``.

    Returns ``(ok, ranks, weights)``: rows where the 4^dim cell consists
    purely of interior nodes are marked ok; others must be retried elsewhere.
    """
    dim = band.dim
    offs = _cell_offsets(dim)
    xi = pts / band.h - band.shift
    anchor = np.ceil(xi).astype(np.int64) - 1
    tloc = xi - anchor
    rel = anchor - band.lo
    inbox = np.ones(len(pts), dtype=bool)
    for k in range(dim):
        inbox &= (rel[:, k] >= 1) & (rel[:, k] + 2 < band.shape[k])
    cells = rel[:, None, :] + offs[None, :, :]
    for k in range(dim):
        cells[:, :, k] = np.clip(cells[:, :, k], 0, band.shape[k] - 1)
    ranks = band.lookup[tuple(np.moveaxis(cells, 2, 0))].astype(np.int64)
    ok = inbox & np.all((ranks >= 0) & (ranks < band.n_interior), axis=1)
    w1d = [_cubic_weights_1d(tloc[:, k]) for k in range(dim)]
    weights = np.ones((len(pts), len(offs)))
    for k in range(dim):
        weights *= w1d[k][:, offs[:, k] + 1]
    return ok, ranks, weights


def _ladder_interpolate(band: Narrowband, foot: np.ndarray,
                        direction: np.ndarray, targets, what: str):
    """Resolve one interpolation row per point, trying the depth candidates
    in ``targets`` in order (evaluation point = foot + t * direction)."""
    n = len(foot)
    size = 4 ** band.dim
    cols = np.zeros((n, size), dtype=np.int64)
    wts = np.zeros((n, size))
    depth = np.full(n, np.nan)
    points = np.full_like(foot, np.nan)
    resolved = np.zeros(n, dtype=bool)
    for t in targets:
        if resolved.all():
            break
        todo = np.flatnonzero(~resolved)
        pts = foot[todo] + t * direction[todo]
        ok, ranks, w = _cubic_rows(band, pts)
        hit = todo[ok]
        cols[hit] = ranks[ok]
        wts[hit] = w[ok]
        depth[hit] = t
        points[hit] = pts[ok]
        resolved[hit] = True
    if not resolved.all():
        bad = int(np.flatnonzero(~resolved)[0])
        raise StencilEscapesBand(
            f"{what}: no fully interior interpolation cell found for node "
            f"{bad} anywhere on its normal line (band too thin for h)")
    return cols, wts, depth, points


@dataclass
class GhostClosure:
    """Sparse extrapolation of interior values onto the ghost layer."""

    matrix: sparse.csr_matrix     # (n_ghost, n_interior)
    target: float                 # requested depth
    depth_used: np.ndarray        # per-ghost depth after ladder fallback
    points: np.ndarray            # per-ghost evaluation point

    def extend(self, values: np.ndarray) -> np.ndarray:
        """Concatenate interior values with their ghost extrapolation."""
        return np.concatenate([values, self.matrix @ values])


def ghost_closure(band: Narrowband, depth: float | str = "default",
                  mirrored: bool = True) -> GhostClosure:
    """Build the ghost extrapolation operator.

    ``depth="default"`` places the evaluation point ``eps - 2 sqrt(dim) h``
    from the surface (deep enough that a centered cell usually fits);
    a number places it at ``depth * h``.  Either way the per-ghost ladder
    falls back toward the surface in steps of ``h/4`` when needed.

    With ``mirrored=True`` the depth is measured on each ghost's own side of
    the surface.  ``mirrored=False`` reads it as a signed distance along the
    outward normal, the same for every ghost; the depth-sensitivity study
    sweeps that signed target.
    """
    if depth == "default":
        t0 = band.eps - 2.0 * np.sqrt(band.dim) * band.h
    else:
        t0 = float(depth) * band.h
    fb = band.ghost_frames
    if band.n_ghost == 0:
        return GhostClosure(
            sparse.csr_matrix((0, band.n_interior)), t0,
            np.zeros(0), np.zeros((0, band.dim)))
    foot = band.ghost_points - fb.d[:, None] * fb.normal
    if mirrored:
        sgn = np.where(fb.d >= 0, 1.0, -1.0)
        direction = sgn[:, None] * fb.normal
        step = 1.0
    else:
        direction = fb.normal.copy()
        step = 1.0 if t0 >= 0 else -1.0
    n_steps = int(np.floor((step * t0 + band.eps / 2) / (band.h / 4))) + 1
    targets = [t0 - step * j * band.h / 4 for j in range(max(n_steps, 1))]
    cols, wts, depth_used, points = _ladder_interpolate(
        band, foot, direction, targets, "ghost closure")
    rows = np.repeat(np.arange(band.n_ghost), cols.shape[1])
    matrix = sparse.csr_matrix(
        (wts.ravel(), (rows, cols.ravel())),
        shape=(band.n_ghost, band.n_interior))
    return GhostClosure(matrix, t0, depth_used, points)


def reinit_matrix(band: Narrowband, details: bool = False):
    """Resampling operator that re-extends interior values from the surface.

    Each interior node takes the cubic interpolant of the current values at
    its own foot point (or as close to it as a fully interior cell allows,
    alternating sides in steps of ``h/4``).  With ``details=True`` also
    returns the per-node depth and evaluation point actually used.
    """
    fb = band.interior_frames
    sgn = np.where(fb.d >= 0, 1.0, -1.0)
    foot = band.interior_points - fb.d[:, None] * fb.normal
    direction = sgn[:, None] * fb.normal
    targets = [0.0]
    j = 1
    while j * band.h / 4 <= band.eps / 2:
        targets += [j * band.h / 4, -j * band.h / 4]
        j += 1
    cols, wts, depth_used, points = _ladder_interpolate(
        band, foot, direction, targets, "reinitialization")
    rows = np.repeat(np.arange(band.n_interior), cols.shape[1])
    matrix = sparse.csr_matrix(
        (wts.ravel(), (rows, cols.ravel())),
        shape=(band.n_interior, band.n_interior))
    if details:
        return matrix, depth_used, points
    return matrix
