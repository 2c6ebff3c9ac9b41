"""Band quadrature: surface integrals as weighted sums over band nodes.

A surface integral of ``f`` becomes a sum of the extension of ``f`` over
interior nodes against per-node weights ``K(d) * m * h^dim``.  The measure
weight ``m`` converts volume to surface measure exactly in the continuum
(it is the Jacobian for a hypersurface and the stretch factor for a space
curve), so the only quadrature error is the midpoint rule's.

Kernels average across the band's thickness:

* codimension 1: ``box`` is ``1/(2 eps)``; ``cosine`` is
  ``(1 + cos(pi d / eps)) / (2 eps)``.
* codimension 2: the kernel is a radial profile over the normal disc;
  ``box`` is ``1/(pi eps^2)``, ``cosine`` is ``(1 + cos(pi d / eps))``
  normalized so the disc integral is one.
"""
from __future__ import annotations

import numpy as np

from .closure import GhostClosure
from .discretize import weighted_gradient
from .errors import ZeroNorm
from .narrowband import Narrowband

__all__ = [
    "quad_weights",
    "band_integral",
    "band_inner",
    "band_norm",
    "band_normalize",
    "dirichlet_energy",
]


def quad_weights(band: Narrowband, kernel: str = "box") -> np.ndarray:
    """Quadrature weight of every interior node."""
    d = band.interior_frames.d
    m = band.interior_frames.measure
    eps = band.eps
    cell = band.h ** band.dim
    if band.geom.codim == 1:
        if kernel == "box":
            k = np.full_like(d, 1.0 / (2 * eps))
        elif kernel == "cosine":
            k = (1.0 + np.cos(np.pi * d / eps)) / (2 * eps)
        else:
            raise ValueError(f"unknown kernel {kernel!r}")
    else:
        if kernel == "box":
            k = np.full_like(d, 1.0 / (np.pi * eps**2))
        elif kernel == "cosine":
            norm = eps**2 * (np.pi - 4.0 / np.pi)
            k = (1.0 + np.cos(np.pi * d / eps)) / norm
        else:
            raise ValueError(f"unknown kernel {kernel!r}")
    return k * m * cell


def band_integral(band: Narrowband, values, kernel: str = "box") -> float:
    """Surface integral of the surface function whose extension is
    ``values`` (given at interior nodes)."""
    return float(quad_weights(band, kernel) @ np.asarray(values, dtype=float))


def band_inner(band: Narrowband, u, v, kernel: str = "box") -> float:
    return float(quad_weights(band, kernel)
                 @ (np.asarray(u, float) * np.asarray(v, float)))


def band_norm(band: Narrowband, v, kernel: str = "box") -> float:
    return float(np.sqrt(max(band_inner(band, v, v, kernel), 0.0)))


def band_normalize(band: Narrowband, v, kernel: str = "box") -> np.ndarray:
    """Scale ``v`` to unit band norm.  Raises ZeroNorm on a zero vector."""
    nrm = band_norm(band, v, kernel)
    if nrm <= 0.0:
        raise ZeroNorm("cannot normalize a vector with zero band norm")
    return np.asarray(v, float) / nrm


def dirichlet_energy(band: Narrowband, v: np.ndarray,
                     closure: GhostClosure, mu=None,
                     kernel: str = "box") -> float:
    """``1/2`` times the surface integral of the squared weighted gradient.

    The closure fills ghost values so the gradient exists at every interior
    node; for clean extensions this is the surface Dirichlet energy.
    """
    g = weighted_gradient(band, closure.extend(v), mu)
    return 0.5 * band_integral(band, np.einsum("ni,ni->n", g, g), kernel)
