"""Band construction: membership, numbering, ghost layer, guard rails.

Oracle: an independent brute-force scan over the integer lattice, written
with plain loops against the exact circle distance.
"""
import itertools

import numpy as np
import pytest

from bandpde.errors import BandTooWide, EmptyBand
from bandpde.geometry import CircleCurve, Sphere, Torus
from bandpde.narrowband import Narrowband, stencil_offsets


def test_stencil_offset_census():
    assert len(stencil_offsets(2, 1)) == 9
    assert len(stencil_offsets(3, 1)) == 19
    assert len(stencil_offsets(2, 2)) == 13
    assert len(stencil_offsets(3, 2)) == 25
    # no cube corners ever
    for radius in (1, 2):
        offs = stencil_offsets(3, radius)
        assert not np.any(np.count_nonzero(offs, axis=1) == 3)
    # symmetric under negation and containing the origin
    offs = {tuple(o) for o in stencil_offsets(3, 2)}
    assert (0, 0, 0) in offs
    assert all(tuple(-np.array(o)) in offs for o in offs)


def brute_force_band(radius_circle, h, eps, radius):
    """Loop-based reference for the circle band membership sets."""
    span = int(np.ceil((radius_circle + eps) / h)) + 4
    interior = set()
    for i, j in itertools.product(range(-span, span + 1), repeat=2):
        d = np.hypot(i * h, j * h) - radius_circle
        if abs(d) <= eps:
            interior.add((i, j))
    offs = [tuple(o) for o in stencil_offsets(2, radius)]
    ghosts = set()
    for (i, j) in interior:
        for (oi, oj) in offs:
            cand = (i + oi, j + oj)
            if cand not in interior:
                ghosts.add(cand)
    return interior, ghosts


@pytest.mark.parametrize("radius", [1, 2])
def test_membership_matches_brute_force(radius):
    h, eps = 0.11, 0.31
    band = Narrowband.build(CircleCurve(), h=h, eps=eps, radius=radius)
    interior, ghosts = brute_force_band(1.0, h, eps, radius)
    assert {tuple(ix) for ix in band.interior_index} == interior
    assert {tuple(ix) for ix in band.ghost_index} == ghosts


def test_numbering_is_lexicographic_and_lookup_consistent():
    band = Narrowband.build(CircleCurve(), h=0.13, eps=0.3)
    idx = band.interior_index
    order = np.lexsort(idx.T[::-1])  # by first column, then second, ...
    np.testing.assert_array_equal(order, np.arange(len(idx)))
    ranks = band.lookup[tuple((idx - band.lo).T)]
    np.testing.assert_array_equal(ranks, np.arange(band.n_interior))
    granks = band.lookup[tuple((band.ghost_index - band.lo).T)]
    np.testing.assert_array_equal(
        granks, band.n_interior + np.arange(band.n_ghost))


def test_points_and_frames_belong_to_nodes():
    band = Narrowband.build(Sphere(), h=0.21, eps=0.42, shift=0.5)
    np.testing.assert_allclose(
        band.interior_points, (band.interior_index + 0.5) * 0.21)
    assert np.all(np.abs(band.interior_frames.d) <= 0.42)
    assert np.all(np.abs(band.ghost_frames.d) > 0.42)
    # frames were taken at the stored points
    fb = band.geom.frames(band.ghost_points)
    np.testing.assert_allclose(band.ghost_frames.d, fb.d)


def test_neighbor_table_agrees_with_lookup(rng):
    band = Narrowband.build(CircleCurve(), h=0.09, eps=0.27)
    offs = stencil_offsets(2, 1)
    table = band.neighbor_table(offs)
    assert table.shape == (band.n_interior, len(offs))
    assert np.all(table >= 0)
    for row in rng.choice(band.n_interior, size=12, replace=False):
        for c, o in enumerate(offs):
            at = band.interior_index[row] + o - band.lo
            assert table[row, c] == band.lookup[tuple(at)]
    # the zero offset is the node itself
    zero_col = np.flatnonzero((offs == 0).all(axis=1))[0]
    np.testing.assert_array_equal(table[:, zero_col],
                                  np.arange(band.n_interior))


def test_ghost_neighbors_may_leave_band():
    band = Narrowband.build(CircleCurve(), h=0.09, eps=0.27)
    table = band.neighbor_table(stencil_offsets(2, 1), on="ghost")
    assert (table < 0).any()


def test_band_too_wide_raises():
    with pytest.raises(BandTooWide):
        Narrowband.build(CircleCurve(), h=0.1, eps=0.95)


def test_torus_band_at_experiment_resolution():
    # the production configuration must build: ghosts stay inside the reach
    band = Narrowband.build(Torus(), h=1.0 / 20, eps=4.0 / 20, radius=1)
    assert band.n_interior > 5000
    worst = max(np.max(np.abs(band.interior_frames.d)),
                np.max(np.abs(band.ghost_frames.d)))
    assert worst < band.geom.reach
    # widening the stencil to radius 2 reaches the focal circle exactly
    with pytest.raises(BandTooWide):
        Narrowband.build(Torus(), h=1.0 / 20, eps=4.0 / 20, radius=2)


def test_empty_band_raises():
    with pytest.raises(EmptyBand):
        Narrowband.build(CircleCurve(), h=0.3, eps=0.001)


def test_all_points_concatenates():
    band = Narrowband.build(CircleCurve(), h=0.12, eps=0.24)
    pts = band.all_points()
    assert len(pts) == band.n_interior + band.n_ghost
    np.testing.assert_array_equal(pts[:band.n_interior],
                                  band.interior_points)


def test_classification_is_lattice_shift_equivariant():
    # moving the circle by a whole cell must only relabel node indices
    h = 0.125
    base = Narrowband.build(CircleCurve(), h=h, eps=3 * h)
    moved = Narrowband.build(CircleCurve(center=(2 * h, -h)), h=h, eps=3 * h)
    np.testing.assert_array_equal(
        moved.interior_index - np.array([2, -1]), base.interior_index)
    np.testing.assert_array_equal(
        moved.ghost_index - np.array([2, -1]), base.ghost_index)


def test_random_shift_study_is_deterministic():
    from bandpde.narrowband import random_shift_study
    a = random_shift_study(CircleCurve(), h=0.1, eps=0.3, trials=3, seed=11)
    b = random_shift_study(CircleCurve(), h=0.1, eps=0.3, trials=3, seed=11)
    assert [gap for gap, _ in a] == [gap for gap, _ in b]
    for (_, ba), (_, bb) in zip(a, b):
        np.testing.assert_array_equal(ba.interior_index, bb.interior_index)
        np.testing.assert_allclose(ba.shift, bb.shift)
    # distinct shifts actually move the grid
    assert not np.allclose(a[0][1].shift, a[1][1].shift)


def test_random_shift_study_gap_is_positive_and_below_cell():
    from bandpde.narrowband import random_shift_study
    trials = random_shift_study(Sphere(), h=0.2, eps=0.6, trials=4, seed=5)
    for gap, band in trials:
        assert 0.0 < gap <= band.eps
        assert gap == pytest.approx(
            float(np.min(band.eps - np.abs(band.interior_frames.d))))
