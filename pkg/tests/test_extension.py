import numpy as np
import pytest

from bounds import BoundChain, LSC_UPPER, USC_LOWER
from conftest import make_interval, make_triangle, random_psd
from extension import (extend_band, extend_envelopes, extend_local, extend_nearest, midband_projection,
                       soft_rank_field, transition_zones)
from homotopy import MatrixField, find_uniform_gap
from matcalc import cutdown, op_norm, rank_tol
from utils.errors import MeshTooCoarseError, RankBoundError


def _on_y(K, points, matrices):
    return MatrixField(K, np.stack(matrices).astype(np.complex128), points)


def _vertex(K, coords):
    return int(np.flatnonzero(np.all(np.isclose(K.vertices, coords), axis=1))[0])


def _chain(K, kind, values, first_points):
    """Two-level chain: values[0] on the full subcomplex of ``first_points``, values[1] elsewhere."""
    return BoundChain(kind, values, [K.full_subcomplex(first_points), K.full()])


def test_extend_nearest_splits_at_midpoint(interval):
    K = interval
    a = _on_y(K, [0, 1], [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    b = extend_nearest(a)
    x = K.vertices[:, 0]
    for p in K.sample_points:
        expected = a.value(1) if x[p] > 0.5 else a.value(0)
        assert np.array_equal(b.value(p), expected)
    with pytest.raises(ValueError):
        extend_nearest(MatrixField(K, np.zeros((0, 2, 2)), []))


def test_extend_local_from_an_endpoint(interval):
    K = interval
    a = _on_y(K, [0], [np.diag([1.0, 0.0])])
    f = BoundChain.constant(K, LSC_UPPER, 2)
    g = BoundChain.constant(K, USC_LOWER, 1)
    U, b = extend_local(a, f, g)
    assert 0 in U
    assert np.array_equal(b.value(0), a.value(0))
    assert np.all(b.ranks == 1)
    # off Y the values are cut down, never raised
    for p in b.support[1:]:
        assert b.value(p)[0, 0].real < 1.0


def test_extend_local_constant_bounds(interval):
    K = interval
    a = _on_y(K, [0], [np.diag([1.0, 1.0, 0.0])])
    f = BoundChain.constant(K, LSC_UPPER, 2)
    g = BoundChain.constant(K, USC_LOWER, 2)
    U, b = extend_local(a, f, g)
    assert len(U) == K.n_points
    assert np.all(b.ranks == 2)
    assert np.array_equal(b.value(0), a.value(0))


def test_extend_local_respects_tighter_upper_bound(interval):
    K = interval
    x = K.vertices[:, 0]
    far = np.flatnonzero(x >= 0.5)
    a = _on_y(K, [0], [np.diag([1.0, 0.5])])
    f = _chain(K, LSC_UPPER, [1, 2], far)
    g = BoundChain.constant(K, USC_LOWER, 1)
    U, b = extend_local(a, f, g)
    assert set(U.vertices.tolist()) == set(np.flatnonzero(x < 0.5).tolist())
    fv = f.evaluate()
    assert np.all(b.ranks <= fv[b.support])
    assert np.all(b.ranks >= 1)


def test_extend_local_errors(interval):
    K = interval
    a = _on_y(K, [0], [np.diag([1.0, 0.5])])
    g = BoundChain.constant(K, USC_LOWER, 1)
    # upper bound drops right next to Y
    f = _chain(K, LSC_UPPER, [1, 2], np.setdiff1d(K.sample_points, [0]))
    with pytest.raises(MeshTooCoarseError) as info:
        extend_local(a, f, g)
    assert info.value.point == 0
    U, b = extend_local(a, f, g, strict=False)
    assert list(U.vertices) == [0]
    with pytest.raises(RankBoundError):
        extend_local(a, BoundChain.constant(K, LSC_UPPER, 1), g)
    with pytest.raises(ValueError):
        extend_local(a, BoundChain.constant(K, LSC_UPPER, 1), BoundChain.constant(K, USC_LOWER, 2))
    with pytest.raises(ValueError):
        extend_local(a, g, g)


def test_extend_band_from_one_point(rng, interval):
    K = interval
    a = _on_y(K, [0], [random_psd(rng, 8, 3)])
    b = extend_band(a, 1, 6)
    assert len(b.support) == K.n_points
    assert np.array_equal(b.value(0), a.value(0))
    assert np.all((b.ranks >= 1) & (b.ranks <= 6))


def test_extend_band_reaches_midband_far_from_y(rng, interval):
    K = interval
    a = _on_y(K, [0, 1], [random_psd(rng, 8, 3), random_psd(rng, 8, 2)])
    b = extend_band(a, 1, 6)
    assert np.array_equal(b.value(0), a.value(0))
    assert np.array_equal(b.value(1), a.value(1))
    d = midband_projection(8, 1, 6)
    assert np.allclose(b.value(2), d)
    assert np.linalg.matrix_rank(d) == 4
    assert np.all((b.ranks >= 1) & (b.ranks <= 6))


def test_extend_band_checks(interval):
    K = interval
    a = _on_y(K, [0], [np.eye(8)])
    with pytest.raises(ValueError):
        extend_band(a, 3, 6)
    with pytest.raises(RankBoundError):
        extend_band(a, 1, 6)
    empty = MatrixField(K, np.zeros((0, 8, 8)), [])
    b = extend_band(empty, 1, 6)
    assert np.all(b.ranks == 4)


def test_midband_projection_rotation(rng):
    d = midband_projection(6, 1, 6, rng)
    assert np.allclose(d @ d, d, atol=1e-12)
    assert np.isclose(np.trace(d).real, 4.0)


def test_extend_envelopes_on_two_complex(rng):
    K = make_triangle(1)
    x0, x1 = K.vertices[:, 0], K.vertices[:, 1]
    f = _chain(K, LSC_UPPER, [10, 14], np.flatnonzero(x0 >= 0.6))
    g = _chain(K, USC_LOWER, [5, 2], np.flatnonzero(x1 >= 0.6))
    fv, gv = f.evaluate(), g.evaluate()
    assert (fv - gv).min() == 4 * K.dim
    origin = _vertex(K, [0.0, 0.0])
    a = _on_y(K, [origin], [random_psd(rng, 16, 8)])
    b = extend_envelopes(a, f, g)
    assert len(b.support) == K.n_points
    assert np.array_equal(b.value(origin), a.value(origin))
    assert np.all(b.ranks >= gv) and np.all(b.ranks <= fv)
    assert b.ranks[_vertex(K, [1.0, 0.0])] == 8
    assert b.ranks[_vertex(K, [0.0, 1.0])] == 8


def test_extend_envelopes_needs_slack(rng):
    K = make_triangle(1)
    f = BoundChain.constant(K, LSC_UPPER, 9)
    g = BoundChain.constant(K, USC_LOWER, 2)
    a = _on_y(K, [0], [random_psd(rng, 16, 4)])
    with pytest.raises(ValueError):
        extend_envelopes(a, f, g)


def test_extend_envelopes_on_interval_levels(rng):
    K = make_interval(3)
    x = K.vertices[:, 0]
    f = _chain(K, LSC_UPPER, [6, 7], np.flatnonzero(x <= 0.25))
    g = _chain(K, USC_LOWER, [3, 1], np.flatnonzero(x >= 0.75))
    a = _on_y(K, [0], [random_psd(rng, 8, 2)])
    b = extend_envelopes(a, f, g)
    assert np.array_equal(b.value(0), a.value(0))
    assert np.all(b.ranks >= g.evaluate()) and np.all(b.ranks <= f.evaluate())


def test_extend_local_stays_within_the_gap(interval):
    K = interval
    a = _on_y(K, [0], [np.diag([1.0, 0.4, 0.05, 0.0])])
    f = BoundChain.constant(K, LSC_UPPER, 4)
    g = BoundChain.constant(K, USC_LOWER, 2)
    U, b = extend_local(a, f, g)
    tilde = extend_nearest(a, b.support)
    eta = find_uniform_gap(tilde, g)
    assert np.all(op_norm(b.values - tilde.values) < eta)
    assert np.all(b.ranks >= rank_tol(cutdown(tilde.values, eta)))


def test_soft_rank_field_squeezes_between_bounds():
    K = make_interval(5)
    x = K.vertices[:, 0]
    lower = np.where(x >= 0.5, 4, 0)
    upper = np.where(x <= 0.25, 2, 6)
    d = soft_rank_field(K, K.sample_points, lower, upper, 6)
    assert np.all(d.ranks >= lower) and np.all(d.ranks <= upper)
    assert d.ranks[np.argmin(np.abs(x - 0.25))] == 2
    assert d.ranks[np.argmin(np.abs(x - 0.5))] == 4
    # steepest admissible slope: (4 - 2) / 0.25
    assert d.omega <= 8.0 * K.mesh_width + 1e-9
    lam = d.eig[0]
    assert lam.min() >= -1e-12 and lam.max() <= 1 + 1e-12
    with pytest.raises(ValueError):
        soft_rank_field(K, K.sample_points, upper + 1, upper, 6)


def test_transition_zones_split_by_reach():
    K = make_interval(5)
    x = K.vertices[:, 0]
    U = np.flatnonzero(x < 0.5)
    V, Z, far = transition_zones(K, np.array([0]), U, K.sample_points)
    assert np.allclose(np.sort(x[V]), np.arange(4) / 32.0)
    assert np.all((x[Z] >= 0.125) & (x[Z] < 0.5)) and len(Z) == 12
    assert np.all(x[far] >= 0.5) and len(far) == 17
    V, Z, far = transition_zones(K, np.array([0]), K.sample_points, K.sample_points)
    assert len(V) == K.n_points and not len(Z) and not len(far)


def test_extend_band_is_continuous_on_a_fine_interval(rng):
    K = make_interval(7)
    a = _on_y(K, [0, 1], [random_psd(rng, 8, 3), random_psd(rng, 8, 2)])
    b = extend_band(a, 1, 6)
    assert np.array_equal(b.value(0), a.value(0)) and np.array_equal(b.value(1), a.value(1))
    assert np.all((b.ranks >= 1) & (b.ranks <= 6))
    assert np.allclose(b.value(2), midband_projection(8, 1, 6))
    assert b.omega <= 0.5


def test_extend_envelopes_is_continuous_on_a_fine_interval():
    K = make_interval(7)
    x = K.vertices[:, 0]
    f = _chain(K, LSC_UPPER, [7, 8], np.flatnonzero(x >= 0.5))
    g = _chain(K, USC_LOWER, [3, 1], np.flatnonzero(x >= 0.75))
    fv, gv = f.evaluate(), g.evaluate()
    a = _on_y(K, [0], [np.diag([1.0, 0.5, 0, 0, 0, 0, 0, 0])])
    b = extend_envelopes(a, f, g)
    assert np.array_equal(b.value(0), a.value(0))
    assert np.all(b.ranks >= gv) and np.all(b.ranks <= fv)
    assert b.ranks[np.argmin(np.abs(x - 1.0))] == 5
    assert b.omega <= 0.5
    # ranks change, but only through small eigenvalues
    e = b.local_edges
    assert np.any(b.ranks[e[:, 0]] != b.ranks[e[:, 1]])


def test_extend_envelopes_from_nothing_is_continuous():
    K = make_interval(5)
    x = K.vertices[:, 0]
    f = _chain(K, LSC_UPPER, [6, 11], np.flatnonzero(x <= 0.25))
    g = _chain(K, USC_LOWER, [7, 1], np.flatnonzero(x >= 0.75))
    a = MatrixField(K, np.zeros((0, 12, 12)), [])
    b = extend_envelopes(a, f, g)
    assert np.all(b.ranks >= g.evaluate()) and np.all(b.ranks <= f.evaluate())
    # the lower bound 7 sits 0.5 away from the upper bound 6
    assert b.omega <= 2.0 * K.mesh_width + 1e-9
