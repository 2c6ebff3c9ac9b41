"""Band quadrature against closed-form surface integrals."""
import numpy as np
import pytest

from bandpde.closure import ghost_closure
from bandpde.geometry import CircleCurve, RotatedEllipse, Sphere, TiltedCircle, Torus
from bandpde.narrowband import Narrowband
from bandpde.quadrature import (
    band_inner,
    band_integral,
    band_norm,
    dirichlet_energy,
    quad_weights,
)


@pytest.mark.parametrize("kernel,rel", [("box", 2e-3), ("cosine", 1e-5)])
def test_sphere_area(kernel, rel):
    band = Narrowband.build(Sphere(), h=0.1, eps=0.4)
    got = band_integral(band, np.ones(band.n_interior), kernel=kernel)
    assert got == pytest.approx(4 * np.pi, rel=rel)


def test_smooth_kernel_beats_box_at_band_edge():
    # the box kernel is chopped at |d| = eps, which the node set samples
    # with O(h) jitter; the cosine kernel decays to zero there
    band = Narrowband.build(Sphere(), h=0.05, eps=0.2)
    ones = np.ones(band.n_interior)
    err_box = abs(band_integral(band, ones, "box") - 4 * np.pi)
    err_cos = abs(band_integral(band, ones, "cosine") - 4 * np.pi)
    assert err_cos < err_box / 20


def test_sphere_second_moment():
    # integral of x^2 over the unit sphere is 4 pi / 3
    band = Narrowband.build(Sphere(), h=0.05, eps=0.2)
    r = np.linalg.norm(band.interior_points, axis=1)
    f = (band.interior_points[:, 0] / r) ** 2
    assert band_integral(band, f) == pytest.approx(4 * np.pi / 3, rel=2e-3)


@pytest.mark.parametrize("kernel", ["box", "cosine"])
def test_circle_length(kernel):
    band = Narrowband.build(CircleCurve(radius=1.3), h=0.02, eps=0.1)
    got = band_integral(band, np.ones(band.n_interior), kernel=kernel)
    assert got == pytest.approx(2 * np.pi * 1.3, rel=1e-3)


def test_ellipse_perimeter():
    geom = RotatedEllipse()
    band = Narrowband.build(geom, h=0.02, eps=0.1)
    ones = np.ones(band.n_interior)
    assert band_integral(band, ones) == pytest.approx(geom.perimeter,
                                                      rel=5e-3)
    assert band_integral(band, ones, "cosine") == pytest.approx(
        geom.perimeter, rel=1e-4)


def test_torus_area():
    geom = Torus()
    band = Narrowband.build(geom, h=0.05, eps=0.2)
    ones = np.ones(band.n_interior)
    assert band_integral(band, ones) == pytest.approx(geom.area, rel=2e-2)
    assert band_integral(band, ones, "cosine") == pytest.approx(
        geom.area, rel=3e-4)


@pytest.mark.parametrize("kernel", ["box", "cosine"])
def test_space_curve_length(kernel):
    band = Narrowband.build(TiltedCircle(), h=0.05, eps=0.2)
    got = band_integral(band, np.ones(band.n_interior), kernel=kernel)
    assert got == pytest.approx(2 * np.pi, rel=5e-3)


def test_inner_product_and_norm():
    band = Narrowband.build(CircleCurve(), h=0.02, eps=0.1)
    th = np.arctan2(band.interior_points[:, 1], band.interior_points[:, 0])
    s, c = np.sin(th), np.cos(3 * th)
    # orthogonal harmonics; norms are sqrt(pi)
    assert abs(band_inner(band, s, c, "cosine")) < 1e-4
    assert band_norm(band, s, "cosine") == pytest.approx(np.sqrt(np.pi),
                                                         rel=1e-4)


def test_weights_are_positive_and_sum_to_size():
    band = Narrowband.build(Sphere(), h=0.1, eps=0.3)
    w = quad_weights(band)
    assert np.all(w > 0)
    assert w.sum() == pytest.approx(4 * np.pi, rel=2e-2)


def test_circle_dirichlet_energy():
    band = Narrowband.build(CircleCurve(), h=0.01, eps=0.05)
    clo = ghost_closure(band)
    th = np.arctan2(band.interior_points[:, 1], band.interior_points[:, 0])
    e = dirichlet_energy(band, np.sin(th), clo)
    assert e == pytest.approx(np.pi / 2, rel=1e-3)


def test_ellipse_wave_profile_energy():
    # the standing profile sin(2 pi s / L) has Dirichlet energy pi^2 / L
    geom = RotatedEllipse()
    L = geom.perimeter
    band = Narrowband.build(geom, h=0.02, eps=0.08)
    clo = ghost_closure(band)
    s = geom.arc_length(geom.foot_parameter(band.interior_points))
    v = np.sin(2 * np.pi * s / L)
    e = dirichlet_energy(band, v, clo)
    assert e == pytest.approx(np.pi**2 / L, rel=1e-2)


def test_unknown_kernel_rejected():
    band = Narrowband.build(CircleCurve(), h=0.05, eps=0.2)
    with pytest.raises(ValueError):
        quad_weights(band, kernel="triangle")
