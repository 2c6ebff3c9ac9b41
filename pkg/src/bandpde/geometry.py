"""Closest-point geometry for closed curves and surfaces in R^2 and R^3.

Every solver in this package works on a thin Cartesian band around a curve or
surface ``Gamma``.  A geometry object answers, for arbitrary points ``z`` in
that band:

* the distance ``d(z)`` to ``Gamma`` (signed for codimension 1, with the
  convention ``d < 0`` inside; unsigned for a curve in R^3),
* the closest point (foot point) on ``Gamma``,
* a per-point frame: unit normal, tangent direction(s), the curvature(s) of
  the level set of ``d`` through ``z``, and the stretch factors ``sigma_j``
  of the closest-point map, and
* the volume-to-surface Jacobian used when band integrals stand in for
  surface integrals.

Conventions
-----------
``sigma_j`` are the nonzero singular values of the differential of the
closest-point map.  With the curvature ``kappa_j(z)`` of the level set
through ``z`` (positive for a convex shape with outward normal) they satisfy

    sigma_j = 1 - d(z) * kappa_j(z)

so ``sigma = R/|z|`` on a sphere of radius ``R``.  The Jacobian is
``sigma_1 * sigma_2`` for a surface in R^3, ``sigma_1`` for a curve in R^2,
and ``sigma_1 / (2 pi d)`` for a curve in R^3.  ``measure`` is the weight a
band quadrature pairs with its normal-direction kernel: the Jacobian itself
in codimension 1, and ``sigma_1`` alone in codimension 2 (the ``2 pi d``
factor is absorbed by the radial kernel profile).

All point-valued methods are vectorized over an ``(n, dim)`` array.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateFrame, OutOfTube

__all__ = [
    "PointFrame",
    "FrameBatch",
    "SurfaceGeometry",
    "Sphere",
    "CircleCurve",
    "RotatedEllipse",
    "Torus",
    "TiltedCircle",
    "Plane",
    "SampledDistanceField",
    "tensor_A",
    "tensor_B",
    "default_mu",
    "frames_via_svd",
]


@dataclass(frozen=True)
class PointFrame:
    """Differential data of the closest-point map at a single point.

    ``t2``/``sigma2``/``kappa2`` are ``None`` for plane curves.  For a curve
    in R^3, ``normal`` points from the foot point toward the query point and
    ``n2`` completes the orthonormal triple; both normal directions carry the
    free extension weights.
    """

    point: np.ndarray
    d: float
    normal: np.ndarray
    t1: np.ndarray
    t2: np.ndarray | None
    n2: np.ndarray | None
    kappa1: float
    kappa2: float | None
    sigma1: float
    sigma2: float | None
    jacobian: float
    measure: float
    codim: int


@dataclass
class FrameBatch:
    """Vectorized frames at ``points``; same fields as `PointFrame` batched."""

    points: np.ndarray
    d: np.ndarray
    normal: np.ndarray
    t1: np.ndarray
    t2: np.ndarray | None
    n2: np.ndarray | None
    kappa1: np.ndarray
    kappa2: np.ndarray | None
    sigma1: np.ndarray
    sigma2: np.ndarray | None
    jacobian: np.ndarray
    measure: np.ndarray
    codim: int

    def __len__(self) -> int:
        return self.points.shape[0]

    def frame(self, i: int) -> PointFrame:
        def pick(arr):
            return None if arr is None else arr[i]

        return PointFrame(
            point=self.points[i],
            d=float(self.d[i]),
            normal=self.normal[i],
            t1=self.t1[i],
            t2=pick(self.t2),
            n2=pick(self.n2),
            kappa1=float(self.kappa1[i]),
            kappa2=None if self.kappa2 is None else float(self.kappa2[i]),
            sigma1=float(self.sigma1[i]),
            sigma2=None if self.sigma2 is None else float(self.sigma2[i]),
            jacobian=float(self.jacobian[i]),
            measure=float(self.measure[i]),
            codim=self.codim,
        )


def _as_points(pts, dim: int) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[-1] != dim:
        raise ValueError(f"expected points in R^{dim}, got shape {pts.shape}")
    return pts


class SurfaceGeometry:
    """Base class: a closed shape with a smooth closest-point map nearby.

    Attributes
    ----------
    dim : ambient dimension (2 or 3).
    codim : 1 for hypersurfaces, 2 for a curve in R^3.
    kind : one of ``AnalyticCurve2D``, ``AnalyticCurveIn3D``,
        ``AnalyticSurface3D``, ``SampledDistanceField``.
    kappa_max : upper bound of the shape's curvatures; the closest-point map
        is smooth for ``|d| < 1/kappa_max``.  ``0.0`` means flat (no bound).
    default_mu_rule : ``"sigma_inv"`` or ``"one"``; the extension weight a
        discretization uses when the caller does not choose one.
    """

    dim: int = 0
    codim: int = 1
    kind: str = ""
    kappa_max: float = 0.0
    default_mu_rule: str = "sigma_inv"

    @property
    def params(self) -> dict:
        return dict(self._params)

    @property
    def reach(self) -> float:
        """Largest distance at which frames stay valid (inf when flat)."""
        return np.inf if self.kappa_max == 0.0 else 1.0 / self.kappa_max

    # subclasses implement the batched kernel
    def _frames(self, pts: np.ndarray) -> FrameBatch:  # pragma: no cover
        raise NotImplementedError

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:  # pragma: no cover
        raise NotImplementedError

    def frames(self, pts) -> FrameBatch:
        return self._frames(_as_points(pts, self.dim))

    def distance(self, pts) -> np.ndarray:
        # subclasses override with direct formulas (cheaper, and safe at
        # focal points where frame quantities blow up)
        return self.frames(pts).d

    def closest_point(self, pts) -> np.ndarray:
        fb = self.frames(pts)
        return fb.points - fb.d[:, None] * fb.normal

    def frame_at(self, z) -> PointFrame:
        """Frame at one point; raises `OutOfTube` beyond the shape's reach."""
        fb = self.frames(z)
        if abs(fb.d[0]) >= self.reach:
            raise OutOfTube(
                f"point at distance {fb.d[0]:.6g} is outside the smooth "
                f"tube (reach {self.reach:.6g})"
            )
        return fb.frame(0)


# ---------------------------------------------------------------------------
# analytic shapes


class Sphere(SurfaceGeometry):
    """Sphere of given radius, optionally off-center."""

    dim = 3
    codim = 1
    kind = "AnalyticSurface3D"

    def __init__(self, radius: float = 1.0, center=(0.0, 0.0, 0.0)):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        self.kappa_max = 1.0 / self.radius
        self._params = {"radius": self.radius, "center": tuple(self.center)}

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def distance(self, pts) -> np.ndarray:
        pts = _as_points(pts, 3)
        return np.linalg.norm(pts - self.center, axis=1) - self.radius

    def _frames(self, pts):
        u = pts - self.center
        r = np.linalg.norm(u, axis=1)
        r = np.maximum(r, 1e-300)
        n = u / r[:, None]
        # stable tangent pair: cross n with the least-aligned axis
        k = np.argmin(np.abs(n), axis=1)
        e = np.zeros_like(n)
        e[np.arange(len(n)), k] = 1.0
        t1 = np.cross(e, n)
        t1 /= np.linalg.norm(t1, axis=1)[:, None]
        t2 = np.cross(n, t1)
        sigma = self.radius / r
        kappa = 1.0 / r
        return FrameBatch(
            points=pts, d=r - self.radius, normal=n, t1=t1, t2=t2, n2=None,
            kappa1=kappa, kappa2=kappa.copy(), sigma1=sigma, sigma2=sigma.copy(),
            jacobian=sigma**2, measure=sigma**2, codim=1,
        )


class CircleCurve(SurfaceGeometry):
    """Circle of given radius in the plane."""

    dim = 2
    codim = 1
    kind = "AnalyticCurve2D"

    def __init__(self, radius: float = 1.0, center=(0.0, 0.0)):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        self.kappa_max = 1.0 / self.radius
        self._params = {"radius": self.radius, "center": tuple(self.center)}

    def bounding_box(self):
        return self.center - self.radius, self.center + self.radius

    def distance(self, pts) -> np.ndarray:
        pts = _as_points(pts, 2)
        return np.linalg.norm(pts - self.center, axis=1) - self.radius

    def _frames(self, pts):
        u = pts - self.center
        r = np.maximum(np.linalg.norm(u, axis=1), 1e-300)
        n = u / r[:, None]
        t = np.stack([-n[:, 1], n[:, 0]], axis=1)
        sigma = self.radius / r
        return FrameBatch(
            points=pts, d=r - self.radius, normal=n, t1=t, t2=None, n2=None,
            kappa1=1.0 / r, kappa2=None, sigma1=sigma, sigma2=None,
            jacobian=sigma, measure=sigma, codim=1,
        )


class RotatedEllipse(SurfaceGeometry):
    """Ellipse with semi-axes ``a >= b``, rotated by ``angle`` about origin.

    Foot points are found by a safeguarded Newton iteration on the parameter
    of the nearest ellipse point; in a thin band this converges to machine
    precision from the closed-form starting guess.
    """

    dim = 2
    codim = 1
    kind = "AnalyticCurve2D"

    def __init__(self, a: float = 2.0, b: float = 1.0, angle: float = np.pi / 5):
        if not (a >= b > 0):
            raise ValueError("need a >= b > 0")
        self.a, self.b, self.angle = float(a), float(b), float(angle)
        self.kappa_max = self.a / self.b**2
        c, s = np.cos(self.angle), np.sin(self.angle)
        self._rot = np.array([[c, -s], [s, c]])
        self._params = {"a": self.a, "b": self.b, "angle": self.angle}
        self._arc_table = None

    def bounding_box(self):
        a, b = self.a, self.b
        c, s = np.cos(self.angle), np.sin(self.angle)
        ext = np.array([np.hypot(a * c, b * s), np.hypot(a * s, b * c)])
        return -ext, ext

    def distance(self, pts) -> np.ndarray:
        pts = _as_points(pts, 2)
        th = self.foot_parameter(pts)
        w = pts @ self._rot
        ct, st = np.cos(th), np.sin(th)
        norm_n = np.hypot(self.b * ct, self.a * st)
        nx = self.b * ct / norm_n
        ny = self.a * st / norm_n
        return (w[:, 0] - self.a * ct) * nx + (w[:, 1] - self.b * st) * ny

    def foot_parameter(self, pts) -> np.ndarray:
        """Parameter ``theta`` of the foot point on ``(a cos, b sin)``."""
        w = _as_points(pts, 2) @ self._rot  # rot^T applied to rows
        a, b = self.a, self.b
        th = np.arctan2(a * w[:, 1], b * w[:, 0])
        for _ in range(30):
            ct, st = np.cos(th), np.sin(th)
            g = -(w[:, 0] - a * ct) * a * st + (w[:, 1] - b * st) * b * ct
            gp = (-a * w[:, 0] * ct - b * w[:, 1] * st
                  + (a * a - b * b) * np.cos(2 * th))
            step = g / np.where(np.abs(gp) < 1e-14, 1e-14, gp)
            step = np.clip(step, -0.5, 0.5)
            th = th - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return th

    def arc_length(self, theta) -> np.ndarray:
        """Arc length from parameter 0 to ``theta`` (dense-table lookup)."""
        if self._arc_table is None:
            tt = np.linspace(0.0, 2 * np.pi, 200_001)
            speed = np.hypot(self.a * np.sin(tt), self.b * np.cos(tt))
            s = np.concatenate([[0.0], np.cumsum(
                0.5 * (speed[1:] + speed[:-1]) * np.diff(tt))])
            self._arc_table = (tt, s)
        tt, s = self._arc_table
        theta = np.mod(np.asarray(theta, dtype=float), 2 * np.pi)
        return np.interp(theta, tt, s)

    @property
    def perimeter(self) -> float:
        return float(self.arc_length(np.array([2 * np.pi - 1e-12]))[0]
                     + self.arc_length(np.array([1e-12]))[0])

    def _frames(self, pts):
        th = self.foot_parameter(pts)
        w = pts @ self._rot
        a, b = self.a, self.b
        ct, st = np.cos(th), np.sin(th)
        foot = np.stack([a * ct, b * st], axis=1)
        norm_n = np.hypot(b * ct, a * st)
        n_loc = np.stack([b * ct, a * st], axis=1) / norm_n[:, None]
        t_loc = np.stack([-a * st, b * ct], axis=1) / norm_n[:, None]
        d = np.einsum("ij,ij->i", w - foot, n_loc)
        kap_g = a * b / norm_n**3
        sigma = 1.0 / (1.0 + d * kap_g)
        n = n_loc @ self._rot.T
        t = t_loc @ self._rot.T
        return FrameBatch(
            points=pts, d=d, normal=n, t1=t, t2=None, n2=None,
            kappa1=kap_g * sigma, kappa2=None, sigma1=sigma, sigma2=None,
            jacobian=sigma, measure=sigma, codim=1,
        )


class Torus(SurfaceGeometry):
    """Torus ``(sqrt(x^2+y^2) - major)^2 + z^2 = minor^2``."""

    dim = 3
    codim = 1
    kind = "AnalyticSurface3D"
    default_mu_rule = "one"  # flows on the torus run with unit normal weight

    def __init__(self, major: float = 0.7, minor: float = 0.3):
        if not (major > minor > 0):
            raise ValueError("need major > minor > 0")
        self.major, self.minor = float(major), float(minor)
        self.kappa_max = max(1.0 / self.minor, 1.0 / (self.major - self.minor))
        self._params = {"major": self.major, "minor": self.minor}

    def bounding_box(self):
        out = self.major + self.minor
        return (np.array([-out, -out, -self.minor]),
                np.array([out, out, self.minor]))

    @property
    def area(self) -> float:
        return 4 * np.pi**2 * self.major * self.minor

    def distance(self, pts) -> np.ndarray:
        pts = _as_points(pts, 3)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        return np.hypot(rho - self.major, pts[:, 2]) - self.minor

    def angles(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Foot-point angles (toroidal, poloidal) of each query point."""
        pts = _as_points(pts, 3)
        rho = np.hypot(pts[:, 0], pts[:, 1])
        return np.arctan2(pts[:, 1], pts[:, 0]), np.arctan2(
            pts[:, 2], rho - self.major)

    def _frames(self, pts):
        R, r = self.major, self.minor
        x, y, zc = pts[:, 0], pts[:, 1], pts[:, 2]
        rho = np.maximum(np.hypot(x, y), 1e-300)
        q = np.maximum(np.hypot(rho - R, zc), 1e-300)
        cb, sb = (rho - R) / q, zc / q
        cx, cy = x / rho, y / rho
        n = np.stack([cb * cx, cb * cy, sb], axis=1)
        t_tor = np.stack([-cy, cx, np.zeros_like(cx)], axis=1)
        t_pol = np.stack([-sb * cx, -sb * cy, cb], axis=1)
        rho_foot = R + r * cb
        sig_tor = rho_foot / rho
        sig_pol = r / q
        d = q - r
        safe_d = np.where(np.abs(d) < 1e-14, 1.0, d)
        kap_tor = np.where(np.abs(d) < 1e-14, cb / rho, (1.0 - sig_tor) / safe_d)
        kap_pol = 1.0 / q
        return FrameBatch(
            points=pts, d=d, normal=n, t1=t_tor, t2=t_pol, n2=None,
            kappa1=kap_tor, kappa2=kap_pol, sigma1=sig_tor, sigma2=sig_pol,
            jacobian=sig_tor * sig_pol, measure=sig_tor * sig_pol, codim=1,
        )


#: Orthogonal matrix whose first two columns span the reference tilted-circle
#: plane; the circle is ``column1 * cos(theta) + column2 * sin(theta)``.
TILTED_CIRCLE_FRAME = np.array([
    [-7.0 / np.sqrt(102.0), 1.0 / np.sqrt(2.0), 1.0 / np.sqrt(51.0)],
    [-7.0 / np.sqrt(102.0), -1.0 / np.sqrt(2.0), 1.0 / np.sqrt(51.0)],
    [2.0 / np.sqrt(102.0), 0.0, 7.0 / np.sqrt(51.0)],
])


class TiltedCircle(SurfaceGeometry):
    """Unit circle in a tilted plane in R^3 (codimension 2).

    Distance is unsigned; ``normal`` points from the foot point to the query
    point and ``n2`` spans the rest of the normal plane.  The stretch factor
    is ``sigma_1 = 1/rho`` with ``rho`` the in-plane radius of the query.
    """

    dim = 3
    codim = 2
    kind = "AnalyticCurveIn3D"

    def __init__(self, frame: np.ndarray | None = None, radius: float = 1.0):
        self.radius = float(radius)
        M = TILTED_CIRCLE_FRAME if frame is None else np.asarray(frame, float)
        if not np.allclose(M @ M.T, np.eye(3), atol=1e-12):
            raise ValueError("frame must be orthogonal")
        self.frame_matrix = M
        self.kappa_max = 1.0 / self.radius
        self._params = {"radius": self.radius}

    def bounding_box(self):
        ext = self.radius * np.hypot(self.frame_matrix[:, 0],
                                     self.frame_matrix[:, 1])
        return -ext, ext

    def plane_coords(self, pts) -> np.ndarray:
        return _as_points(pts, 3) @ self.frame_matrix

    def distance(self, pts) -> np.ndarray:
        u = self.plane_coords(pts)
        rho = np.hypot(u[:, 0], u[:, 1])
        return np.hypot(rho - self.radius, u[:, 2])

    def _frames(self, pts):
        M = self.frame_matrix
        u = pts @ M
        rho = np.maximum(np.hypot(u[:, 0], u[:, 1]), 1e-300)
        foot_u = np.stack([self.radius * u[:, 0] / rho,
                           self.radius * u[:, 1] / rho,
                           np.zeros_like(rho)], axis=1)
        diff = u - foot_u
        d = np.linalg.norm(diff, axis=1)
        safe_d = np.where(d < 1e-14, 1.0, d)
        n_u = np.where(d[:, None] < 1e-14,
                       np.stack([u[:, 0] / rho, u[:, 1] / rho,
                                 np.zeros_like(rho)], axis=1),
                       diff / safe_d[:, None])
        t_u = np.stack([-u[:, 1] / rho, u[:, 0] / rho,
                        np.zeros_like(rho)], axis=1)
        n = n_u @ M.T
        t = t_u @ M.T
        n2 = np.cross(t, n)
        sigma = self.radius / rho
        kap = np.where(d < 1e-14, 0.0, (1.0 - sigma) / safe_d)
        jac = np.where(d < 1e-14, np.inf, sigma / (2 * np.pi * safe_d))
        return FrameBatch(
            points=pts, d=d, normal=n, t1=t, t2=None, n2=n2,
            kappa1=kap, kappa2=None, sigma1=sigma, sigma2=None,
            jacobian=jac, measure=sigma, codim=2,
        )


class Plane(SurfaceGeometry):
    """Flat line (2D) or plane (3D) through the origin, normal to the last
    axis.  Test support: every stretch factor is one and curvature zero.
    ``extent`` bounds the tangential directions for band construction."""

    codim = 1

    def __init__(self, dim: int = 2, extent: float = 1.0):
        if dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        self.dim = dim
        self.kind = "AnalyticCurve2D" if dim == 2 else "AnalyticSurface3D"
        self.extent = float(extent)
        self.kappa_max = 0.0
        self._params = {"dim": dim, "extent": self.extent}

    def bounding_box(self):
        lo = -self.extent * np.ones(self.dim)
        hi = self.extent * np.ones(self.dim)
        lo[-1] = hi[-1] = 0.0
        return lo, hi

    def distance(self, pts) -> np.ndarray:
        return _as_points(pts, self.dim)[:, -1].copy()

    def _frames(self, pts):
        n0 = len(pts)
        zeros = np.zeros(n0)
        ones = np.ones(n0)
        n = np.zeros_like(pts)
        n[:, -1] = 1.0
        t1 = np.zeros_like(pts)
        t1[:, 0] = 1.0
        if self.dim == 3:
            t2 = np.zeros_like(pts)
            t2[:, 1] = 1.0
            return FrameBatch(points=pts, d=pts[:, -1].copy(), normal=n,
                              t1=t1, t2=t2, n2=None, kappa1=zeros,
                              kappa2=zeros.copy(), sigma1=ones,
                              sigma2=ones.copy(), jacobian=ones.copy(),
                              measure=ones.copy(), codim=1)
        return FrameBatch(points=pts, d=pts[:, -1].copy(), normal=n,
                          t1=t1, t2=None, n2=None, kappa1=zeros, kappa2=None,
                          sigma1=ones, sigma2=None, jacobian=ones.copy(),
                          measure=ones.copy(), codim=1)


# ---------------------------------------------------------------------------
# sampled distance fields


class SampledDistanceField(SurfaceGeometry):
    """Geometry reconstructed from signed-distance samples on a regular grid.

    The field is interpolated with tensor-product cubics; gradients come from
    fourth-order centered differences of the samples, so the reconstructed
    frames converge at second order to those of the underlying shape.  Frames
    are recovered from the singular value decomposition of a finite-difference
    approximation of the closest-point map's differential.

    Parameters
    ----------
    values : ``(n1, ..., nd)`` signed-distance samples, axis ``k`` along
        coordinate ``k``.
    origin : coordinates of the ``[0, ..., 0]`` sample.
    h : grid spacing (isotropic).
    kappa_max : optional curvature bound of the sampled shape (0 = unknown).
    """

    codim = 1
    kind = "SampledDistanceField"

    def __init__(self, values: np.ndarray, origin, h: float,
                 kappa_max: float = 0.0):
        self.values = np.asarray(values, dtype=float)
        self.dim = self.values.ndim
        if self.dim not in (2, 3):
            raise ValueError("values must be a 2-D or 3-D array")
        self.origin = np.asarray(origin, dtype=float)
        self.h = float(h)
        self.kappa_max = float(kappa_max)
        self._params = {"shape": self.values.shape, "h": self.h}
        self._grad = [self._grid_gradient(ax) for ax in range(self.dim)]

    # -- file format: text header then one sample per line, row-major -------
    @classmethod
    def from_file(cls, path, kappa_max: float = 0.0) -> "SampledDistanceField":
        lines = Path(path).read_text().split("\n")
        header = {}
        idx = 0
        for idx, ln in enumerate(lines):
            parts = ln.split()
            if not parts:
                continue
            if parts[0] in ("dim", "shape", "origin", "h"):
                header[parts[0]] = parts[1:]
            else:
                break
        for key in ("dim", "shape", "origin", "h"):
            if key not in header:
                raise ValueError(f"distance-field file missing '{key}' header")
        dim = int(header["dim"][0])
        shape = tuple(int(v) for v in header["shape"][:dim])
        origin = np.array([float(v) for v in header["origin"][:dim]])
        h = float(header["h"][0])
        flat = np.array([float(v) for v in lines[idx:] if v.strip()])
        if flat.size != int(np.prod(shape)):
            raise ValueError("sample count does not match declared shape")
        return cls(flat.reshape(shape), origin, h, kappa_max=kappa_max)

    def to_file(self, path) -> None:
        with open(path, "w") as f:
            f.write(f"dim {self.dim}\n")
            f.write("shape " + " ".join(str(n) for n in self.values.shape) + "\n")
            f.write("origin " + " ".join(f"{v:.17g}" for v in self.origin) + "\n")
            f.write(f"h {self.h:.17g}\n")
            for v in self.values.ravel():
                f.write(f"{v:.17g}\n")

    def bounding_box(self):
        margin = 5 * self.h
        hi = self.origin + (np.array(self.values.shape) - 1) * self.h
        return self.origin + margin, hi - margin

    def _grid_gradient(self, axis: int) -> np.ndarray:
        v = self.values
        g = np.gradient(v, self.h, axis=axis)  # second order at the edges
        sl = [slice(None)] * self.dim
        sl[axis] = slice(2, v.shape[axis] - 2)
        inner = tuple(sl)

        def shift(k):
            s = [slice(None)] * self.dim
            s[axis] = slice(2 + k, v.shape[axis] - 2 + k)
            return v[tuple(s)]

        g[inner] = (8 * (shift(1) - shift(-1)) - (shift(2) - shift(-2))) / (
            12 * self.h)
        return g

    def _interp(self, grid: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Tensor-product cubic interpolation of ``grid`` at ``pts``."""
        xi = (pts - self.origin) / self.h
        base = np.ceil(xi).astype(int) - 1  # cell anchor, ties to lower cell
        for ax in range(self.dim):
            base[:, ax] = np.clip(base[:, ax], 1, grid.shape[ax] - 3)
        t = xi - base
        w = []
        for ax in range(self.dim):
            s = t[:, ax]
            w.append(np.stack([
                -s * (s - 1) * (s - 2) / 6.0,
                (s * s - 1) * (s - 2) / 2.0,
                -s * (s + 1) * (s - 2) / 2.0,
                s * (s * s - 1) / 6.0,
            ], axis=1))
        out = np.zeros(len(pts))
        offs = range(-1, 3)
        if self.dim == 2:
            for i in offs:
                for j in offs:
                    out += (w[0][:, i + 1] * w[1][:, j + 1]
                            * grid[base[:, 0] + i, base[:, 1] + j])
        else:
            for i in offs:
                for j in offs:
                    wij = w[0][:, i + 1] * w[1][:, j + 1]
                    for k in offs:
                        out += (wij * w[2][:, k + 1]
                                * grid[base[:, 0] + i, base[:, 1] + j,
                                       base[:, 2] + k])
        return out

    def sample_distance(self, pts) -> np.ndarray:
        return self._interp(self.values, _as_points(pts, self.dim))

    def distance(self, pts) -> np.ndarray:
        return self.sample_distance(pts)

    def sample_gradient(self, pts) -> np.ndarray:
        pts = _as_points(pts, self.dim)
        return np.stack([self._interp(g, pts) for g in self._grad], axis=1)

    def closest_point(self, pts) -> np.ndarray:
        pts = _as_points(pts, self.dim)
        d = self.sample_distance(pts)
        g = self.sample_gradient(pts)
        g = g / np.maximum(np.linalg.norm(g, axis=1), 1e-300)[:, None]
        return pts - d[:, None] * g

    def _frames(self, pts):
        d = self.sample_distance(pts)
        g = self.sample_gradient(pts)
        n = g / np.maximum(np.linalg.norm(g, axis=1), 1e-300)[:, None]
        sv, vecs = _dp_svd(self.closest_point, pts, self.h)
        sigma1 = sv[:, 0]
        t1 = vecs[:, 0]
        safe_d = np.where(np.abs(d) < 1e-10, np.nan, d)
        if self.dim == 3:
            sigma2 = sv[:, 1]
            t2 = vecs[:, 1]
            return FrameBatch(
                points=pts, d=d, normal=n, t1=t1, t2=t2, n2=None,
                kappa1=(1 - sigma1) / safe_d, kappa2=(1 - sigma2) / safe_d,
                sigma1=sigma1, sigma2=sigma2, jacobian=sigma1 * sigma2,
                measure=sigma1 * sigma2, codim=1)
        return FrameBatch(
            points=pts, d=d, normal=n, t1=t1, t2=None, n2=None,
            kappa1=(1 - sigma1) / safe_d, kappa2=None,
            sigma1=sigma1, sigma2=None, jacobian=sigma1,
            measure=sigma1, codim=1)


def _dp_svd(closest_point, pts, step: float):
    """Singular data of a centered-difference differential of the
    closest-point map: fourth-order five-point stencil per axis."""
    pts = np.asarray(pts, dtype=float)
    n0, dim = pts.shape
    cols = []
    for ax in range(dim):
        e = np.zeros(dim)
        e[ax] = step
        p1 = closest_point(pts + e)
        m1 = closest_point(pts - e)
        p2 = closest_point(pts + 2 * e)
        m2 = closest_point(pts - 2 * e)
        cols.append((8 * (p1 - m1) - (p2 - m2)) / (12 * step))
    dp = np.stack(cols, axis=2)  # dp[i] maps direction -> image displacement
    _, sv, vh = np.linalg.svd(dp)
    return sv, vh  # vh[i, j] is the j-th right singular direction at pts[i]


def frames_via_svd(geom: SurfaceGeometry, pts, step: float, strict: bool = False,
                   separation_tol: float = 1e-6):
    """Frames recovered from the SVD of a finite-difference differential of
    ``geom``'s closest-point map.

    Returns ``(sigma, tangents)`` with ``sigma`` the nonzero singular values
    (descending, ``(n, dim - codim)``) and ``tangents`` the matching right
    singular directions.  With ``strict=True`` raises `DegenerateFrame` when
    the retained singular values are too clustered to pin down individual
    directions.
    """
    pts = _as_points(pts, geom.dim)
    sv, vh = _dp_svd(geom.closest_point, pts, step)
    keep = geom.dim - geom.codim
    if strict and keep >= 2:
        gap = (sv[:, 0] - sv[:, 1]) / np.maximum(sv[:, 0], 1.0)
        if np.any(gap < separation_tol):
            raise DegenerateFrame(
                "singular values too clustered to separate tangent directions")
    return sv[:, :keep], vh[:, :keep]


# ---------------------------------------------------------------------------
# extension tensors


def _resolve_mu(mu, fb: FrameBatch) -> np.ndarray:
    if isinstance(mu, str):
        if mu == "sigma_inv":
            return 1.0 / fb.sigma1
        if mu == "one":
            return np.ones(len(fb))
        raise ValueError(f"unknown extension weight rule {mu!r}")
    mu = np.asarray(mu, dtype=float)
    if mu.ndim == 0:
        return np.full(len(fb), float(mu))
    return mu


def _outer(v: np.ndarray) -> np.ndarray:
    return v[:, :, None] * v[:, None, :]


def tensor_A(fb: FrameBatch, mu, mu2=None) -> np.ndarray:
    """Gradient-extension tensor: tangential weights are the reciprocal
    stretch factors; ``mu`` weights the normal direction(s).

    For constant-along-normal fields ``A grad v`` reproduces the surface
    gradient at the foot point, independent of ``mu``.
    """
    mu = _resolve_mu(mu, fb)
    if fb.codim == 1:
        A = _outer(fb.t1) / fb.sigma1[:, None, None]
        if fb.t2 is not None:
            A = A + _outer(fb.t2) / fb.sigma2[:, None, None]
        return A + _outer(fb.normal) * mu[:, None, None]
    mu2 = mu if mu2 is None else _resolve_mu(mu2, fb)
    return (_outer(fb.t1) / fb.sigma1[:, None, None]
            + _outer(fb.normal) * mu[:, None, None]
            + _outer(fb.n2) * mu2[:, None, None])


def tensor_B(fb: FrameBatch, nu, nu2=None) -> np.ndarray:
    """Flux-extension tensor: ``tensor_B(fb, J * mu) == J * tensor_A(fb, mu)``
    pointwise, with ``J`` the Jacobian.  Divergence of ``B`` times an
    extended flux reproduces ``J`` times the extended surface divergence.
    """
    nu = _resolve_mu(nu, fb)
    J = fb.jacobian
    if fb.codim == 1:
        out = _outer(fb.t1) * (J / fb.sigma1)[:, None, None]
        if fb.t2 is not None:
            out = out + _outer(fb.t2) * (J / fb.sigma2)[:, None, None]
        return out + _outer(fb.normal) * nu[:, None, None]
    nu2 = nu if nu2 is None else _resolve_mu(nu2, fb)
    return (_outer(fb.t1) * (J / fb.sigma1)[:, None, None]
            + _outer(fb.normal) * nu[:, None, None]
            + _outer(fb.n2) * nu2[:, None, None])


def default_mu(geom: SurfaceGeometry, fb: FrameBatch) -> np.ndarray:
    """The extension weight a discretization uses unless told otherwise."""
    return _resolve_mu(geom.default_mu_rule, fb)
