import numpy as np
import pytest

from conftest import make_interval, make_triangle
from space import (SampledSpace, dist_to, distances_to, point_distances, refine_subcomplex, subdivide,
                   urysohn)


def test_subdivided_interval_counts():
    K = make_interval(3)
    assert K.n_points == 9
    assert K.dim == 1
    assert K.mesh_width == pytest.approx(0.125)
    assert np.all(K.vertices[:2, 0] == [0.0, 1.0])
    assert make_interval(7).n_points == 129


def test_subdivided_triangle_counts():
    K = make_triangle(1)
    assert K.n_points == 7
    assert K.dim == 2
    assert sum(1 for s in K.simplices if len(s) == 3) == 6
    assert np.allclose(K.vertices[:3], [[0, 0], [1, 0], [0, 1]])


def test_from_simplices_closes_faces():
    K = SampledSpace.from_simplices([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])
    assert len(K.simplices) == 7
    assert len(K.edges) == 3


def test_rejects_bad_complexes():
    with pytest.raises(ValueError):
        SampledSpace([[0.0], [0.0]], [(0,), (1,)])
    with pytest.raises(ValueError):
        SampledSpace([[0.0], [1.0]], [(0,), (1,), (0, 1, 2)])
    with pytest.raises(ValueError):
        subdivide(make_interval(), -1)


def test_check_point():
    K = make_interval(1)
    assert K.check_point(np.int64(2)) == 2
    for bad in (True, 3, -1, 0.5):
        with pytest.raises(ValueError):
            K.check_point(bad)


def test_neighbors_and_full_subcomplex():
    K = make_interval(1)
    assert list(K.neighbors(2)) == [0, 1]
    S = K.full_subcomplex([0, 2])
    assert list(S.vertices) == [0, 2]
    assert (0, 2) in S.simplices()
    assert 1 not in S


def test_subcomplex_algebra():
    K = make_interval(1)
    left, right = K.full_subcomplex([0, 2]), K.full_subcomplex([1, 2])
    assert list(left.intersection(right).vertices) == [2]
    assert left.union(right).issubset(K.full())
    assert not left.issubset(right)
    assert K.empty().is_empty()


def test_refine_subcomplex_follows_carriers():
    root = make_interval()
    K = subdivide(root, 3)
    end = refine_subcomplex(root.subcomplex([[0]]), K)
    assert list(end.vertices) == [0]
    whole = refine_subcomplex(root.full(), K)
    assert len(whole) == K.n_points
    with pytest.raises(ValueError):
        refine_subcomplex(make_interval().full(), K)


def test_dist_to_matches_brute_force(triangle):
    K = triangle
    S = K.full_subcomplex([0, 1])
    for x in K.sample_points:
        brute = min(np.linalg.norm(K.vertices[x] - K.vertices[y]) for y in (0, 1))
        assert dist_to(K, S, x) == pytest.approx(brute, abs=1e-12)
    assert dist_to(K, S, 0) == 0.0
    assert np.all(distances_to(K, S)[S.vertices] == 0.0)


def test_dist_to_empty_raises(interval):
    with pytest.raises(ValueError):
        dist_to(interval, interval.empty(), 0)


def test_urysohn_on_interval(interval):
    K = interval
    A, B = K.full_subcomplex([0]), K.full_subcomplex([1])
    u = urysohn(K, A, B)
    assert u[0] == 0.0 and u[1] == 1.0
    assert np.allclose(u, K.vertices[:, 0])
    assert np.all((u >= 0) & (u <= 1))


def test_urysohn_needs_disjoint_sets(interval):
    K = interval
    with pytest.raises(ValueError):
        urysohn(K, K.full_subcomplex([0, 2]), K.full_subcomplex([2, 1]))
    with pytest.raises(ValueError):
        urysohn(K, K.empty(), K.full_subcomplex([1]))


def _edge_lengths(K):
    return np.linalg.norm(K.vertices[K.edges[:, 0]] - K.vertices[K.edges[:, 1]], axis=1)


@pytest.mark.parametrize("r", [1, 2])
def test_dist_to_is_lipschitz_over_edges(r):
    K = make_triangle(r)
    S = K.full_subcomplex([0, 2])
    d = distances_to(K, S)
    jumps = np.abs(d[K.edges[:, 0]] - d[K.edges[:, 1]])
    assert np.all(jumps <= _edge_lengths(K) + 1e-12)
    assert jumps.max() <= K.mesh_width + 1e-12


def test_urysohn_is_lipschitz_over_edges():
    K = make_triangle(2)
    A, B = K.full_subcomplex([0]), K.full_subcomplex([1, 2])
    u = urysohn(K, A, B)
    gap = point_distances(K.vertices[A.vertices], K.vertices[B.vertices]).min()
    jumps = np.abs(u[K.edges[:, 0]] - u[K.edges[:, 1]])
    assert np.all(jumps <= 2.0 * _edge_lengths(K) / gap + 1e-12)
    assert np.all((u >= 0) & (u <= 1))


def test_point_distances_are_exact_on_coinciding_points(triangle):
    P = triangle.vertices
    D = point_distances(P, P)
    assert np.all(np.diag(D) == 0.0)
    brute = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    assert np.allclose(D, brute, atol=1e-14)
