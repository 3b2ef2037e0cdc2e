import numpy as np
import pytest

from bounds import BoundChain, USC_LOWER
from conftest import make_interval, make_triangle, random_unitary
from homotopy import (MatrixField, WellSupportedField, check_band, connect_in_band,
                      find_trivial_subprojection, find_uniform_gap, flatten_spectrum,
                      peel_trivial_summand, raise_min_rank,
                      rotation_path, sublevel_strata, well_supported_approx)
from matcalc import min_eig, rank_tol, spectral_proj
from space import SampledSpace
from utils.errors import IllPosedCutError, RankBoundError


def _spectrum_field(K, U, base, shifts):
    """U diag(base, (s(x) - shift)_+) U* with s the coordinate sum; ranks step up along s."""
    s = K.vertices.sum(axis=1)
    n = U.shape[0]
    lam = np.zeros((K.n_points, n))
    lam[:, :len(base)] = base
    for i, shift in enumerate(shifts):
        lam[:, len(base) + i] = np.maximum(s - shift, 0.0)
    values = (U[None] * lam[:, None, :]) @ U.conj().T[None]
    return MatrixField(K, 0.5 * (values + values.conj().transpose(0, 2, 1)))


def _diag_field(K, diagonals):
    return MatrixField(K, np.stack([np.diag(d).astype(np.complex128) for d in diagonals]))


INTERVAL_SHIFTS = [0.1, 0.3, 0.55, 0.8]
TRIANGLE_SHIFTS = [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9]


@pytest.fixture
def interval_pair(rng):
    K = make_interval(3)
    a = _spectrum_field(K, random_unitary(rng, 9), [0.9], INTERVAL_SHIFTS)
    b = _spectrum_field(K, random_unitary(rng, 9), [0.8], INTERVAL_SHIFTS[::-1])
    return a, b


@pytest.fixture
def triangle_pair(rng):
    K = make_triangle(1)
    a = _spectrum_field(K, random_unitary(rng, 16), [0.9, 0.9], TRIANGLE_SHIFTS)
    b = _spectrum_field(K, random_unitary(rng, 16), [0.7, 0.9], TRIANGLE_SHIFTS)
    return a, b


def test_gap_suite(rng):
    for i in range(25):
        K = make_interval(3) if i % 2 else make_triangle(1)
        n = int(rng.integers(2, 13))
        base = rng.uniform(0.2, 1.0, int(rng.integers(1, n + 1)))
        shifts = rng.uniform(0.0, 0.9, n - len(base))
        a = _spectrum_field(K, random_unitary(rng, n), base, shifts)
        ranks = a.ranks
        lo, hi = int(ranks.min()), int(ranks.max())
        if hi > lo:
            top = K.full_subcomplex(np.flatnonzero(ranks >= hi))
            g = BoundChain(USC_LOWER, [hi, lo], [top, K.full()])
        else:
            g = BoundChain.constant(K, USC_LOWER, lo)
        eta = find_uniform_gap(a, g)
        assert eta > 0
        need = g.evaluate()
        for scale in (1.0, 0.5, 0.1):
            for x in K.sample_points:
                P = spectral_proj(a.value(x), scale * eta)
                assert rank_tol(P) >= need[x]


def test_gap_examples():
    K = make_interval(2)
    x = K.vertices[:, 0]
    g = BoundChain.constant(K, USC_LOWER, 1)
    eta = find_uniform_gap(MatrixField.constant(K, np.diag([1.0, 0.0])), g)
    assert 0 < eta < 1
    eta = find_uniform_gap(_diag_field(K, [[t, 1.0] for t in x]), g)
    assert 0 < eta < 1
    with pytest.raises(RankBoundError) as info:
        find_uniform_gap(_diag_field(K, [[t, 0.0] for t in x]), g)
    assert info.value.point == 0


def test_flatten_spectrum_preserves_ranks(interval_pair):
    a, _ = interval_pair
    eta = find_uniform_gap(a, BoundChain.constant(a.space, USC_LOWER, 1))
    path = flatten_spectrum(a, eta, T=32)
    assert np.array_equal(path.steps[0].values, a.values)
    assert path.step_gap <= path.path_tol
    for step in path.steps:
        assert np.array_equal(step.ranks, a.ranks)
    # eigenvalues above eta end up at one
    lam_end = path.end.eig[0]
    lam = a.eig[0]
    assert np.allclose(lam_end[lam > eta], 1.0)


def test_flatten_fixes_projections(interval):
    P = MatrixField.constant(interval, np.diag([1.0, 1.0, 0.0]))
    path = flatten_spectrum(P, 0.5, T=4)
    for step in path.steps:
        assert np.allclose(step.values, P.values, atol=1e-12)
    with pytest.raises(ValueError):
        flatten_spectrum(MatrixField.constant(interval, 2 * np.eye(2)), 0.5)


def test_trivial_subprojection_of_constant_projection(interval):
    P = MatrixField.constant(interval, np.diag([1.0, 1.0, 0.0]))
    p = find_trivial_subprojection(P, 1)
    assert p.rank == 1
    assert np.all(p.ranks == 1)
    assert p.certificate['containment'] <= 1e-9
    assert p.certificate['orthonormality'] <= 1e-9
    assert min(min_eig(P.values - p.values)) >= -1e-9
    with pytest.raises(RankBoundError):
        find_trivial_subprojection(P, 3)
    with pytest.raises(ValueError):
        find_trivial_subprojection(P, 4)


def test_trivial_subprojection_follows_rotating_plane():
    # closed loop of 12 points; P(x) spans e_0 and a direction turning in the (e_1, e_2) plane
    m = 12
    angles = np.linspace(0.0, np.pi, m, endpoint=False)
    verts = np.c_[np.cos(2 * angles), np.sin(2 * angles)]
    K = SampledSpace.from_simplices(verts, [[i, (i + 1) % m] for i in range(m)])
    frames = np.zeros((m, 3, 2))
    frames[:, 0, 0] = 1.0
    frames[:, 1, 1] = np.cos(angles)
    frames[:, 2, 1] = np.sin(angles)
    P = MatrixField(K, frames @ frames.transpose(0, 2, 1))
    p = find_trivial_subprojection(P, 1)
    assert np.all(p.ranks == 1)
    assert p.certificate['containment'] <= 1e-9
    assert p.certificate['max_jump'] <= 0.5


def test_peel_trivial_summand_certificate():
    K = make_interval(3)
    a = _diag_field(K, [[1.0, 1.0, x] for x in K.vertices[:, 0]])
    path, p = peel_trivial_summand(a, 2, T=32)
    assert np.array_equal(path.steps[0].values, a.values)
    assert p.rank >= 2 - K.dim
    assert p.certificate['summand_defect'] <= 1e-8
    end = path.end.values
    assert np.max(np.abs(p.values @ end - p.values)) <= 1e-8
    assert np.max(np.abs(end @ p.values - p.values)) <= 1e-8
    for step in path.steps:
        assert np.array_equal(step.ranks, a.ranks)
    with pytest.raises(RankBoundError):
        peel_trivial_summand(a, 3)


@pytest.mark.parametrize("make, n, base", [(lambda: make_interval(3), 9, [0.9, 0.6, 0.5]),
                                           (lambda: make_triangle(1), 16, [0.9, 0.8, 0.7, 0.6])])
def test_peel_on_spectrum_fields(rng, make, n, base):
    K = make()
    k = len(base)
    a = _spectrum_field(K, random_unitary(rng, n), base, INTERVAL_SHIFTS)
    path, p = peel_trivial_summand(a, k, T=32)
    assert p.rank >= k - K.dim
    assert p.certificate['summand_defect'] <= 1e-8
    assert path.step_gap <= path.path_tol


def test_well_supported_approx_on_diagonal_field():
    K = make_interval(3)
    x = K.vertices[:, 0]
    a = _diag_field(K, [[t, 1.0] for t in x])
    strata = [(K.full_subcomplex([0]), 1), (K.full(), 2)]
    ws = well_supported_approx(a, 0.5, strata)
    b = ws.base
    assert np.max(np.abs(b.values - a.values)) < 0.5
    assert np.all(min_eig(a.values - b.values) >= -1e-9)
    report = ws.check()
    assert report['passed'] and report['constant_rank']
    assert report['max_edge_jump'] <= 1e-9
    assert [r for _, r in sublevel_strata(a)] == [1, 2]


def test_well_supported_check_flags_a_jumping_projection():
    K = make_interval(3)
    left = K.vertices[:, 0] < 0.5
    values = np.where(left[:, None, None], np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    b = MatrixField(K, values)
    ws = WellSupportedField(b, [(K.full(), 1)], [b])
    report = ws.check()
    assert report['constant_rank'] and report['support_defect'] <= 1e-12
    assert report['max_edge_jump'] == pytest.approx(1.0)
    assert not report['passed']


def test_well_supported_approx_rejects_undeclared_rank(interval):
    a = _diag_field(interval, [[t, 1.0] for t in interval.vertices[:, 0]])
    with pytest.raises(RankBoundError) as info:
        well_supported_approx(a, 0.5, [(interval.full(), 2)])
    assert info.value.point == 0
    with pytest.raises(ValueError):
        well_supported_approx(a, 0.0, sublevel_strata(a))


@pytest.mark.parametrize("pair, l, k", [("interval_pair", 1, 5), ("triangle_pair", 2, 10)])
def test_raise_min_rank_stays_in_band(request, pair, l, k):
    a, _ = request.getfixturevalue(pair)
    dim = a.space.dim
    assert a.ranks.min() == l and a.ranks.max() == k
    path = raise_min_rank(a, l, k, T=32)
    assert np.array_equal(path.steps[0].values, a.values)
    results = check_band(path, l, k)
    assert results['passed'], results['witnesses']
    assert np.all(path.end.ranks >= l + dim)


def test_raise_min_rank_checks_hypotheses(interval_pair):
    a, _ = interval_pair
    with pytest.raises(ValueError):
        raise_min_rank(a, 1, 4)
    with pytest.raises(ValueError):
        raise_min_rank(a, 2, 9)
    with pytest.raises(RankBoundError):
        raise_min_rank(a, 0, 4)


def test_raise_min_rank_short_circuits(interval):
    a = MatrixField.constant(interval, np.diag([1.0, 1.0, 1.0, 0, 0, 0, 0]))
    path = raise_min_rank(a, 1, 5, T=8)
    assert all(np.array_equal(step.values, a.values) for step in path.steps)


@pytest.mark.parametrize("pair, l, k", [("interval_pair", 1, 5), ("triangle_pair", 2, 10)])
def test_connect_in_band(request, pair, l, k):
    a, b = request.getfixturevalue(pair)
    path = connect_in_band(a, b, l, k, T=32)
    assert np.array_equal(path.steps[0].values, a.values)
    assert np.allclose(path.end.values, b.values, atol=1e-12)
    assert path.step_gap <= path.path_tol
    results = check_band(path, l, k)
    assert results['passed'], results['witnesses']
    assert results['checked'] >= 33 * len(a.support)


def test_connect_orthogonal_projections_on_a_point():
    K = SampledSpace.from_simplices([[0.0]], [[0]])
    a = MatrixField.constant(K, np.diag([1.0, 0.0]))
    b = MatrixField.constant(K, np.diag([0.0, 1.0]))
    path = connect_in_band(a, b, 1, 2, T=32)
    results = check_band(path, 1, 2)
    assert results['passed'] and results['min_rank'] >= 1
    assert np.allclose(path.end.values, b.values, atol=1e-12)


def test_connect_identical_fields_is_constant(interval_pair):
    a, _ = interval_pair
    path = connect_in_band(a, a, 1, 5, T=4)
    assert all(np.array_equal(step.values, a.values) for step in path.steps)
    with pytest.raises(RankBoundError):
        connect_in_band(a, a, 2, 6)


def _phase_field(K, phases):
    return np.stack([np.diag([np.exp(1j * p), 1.0]) for p in phases])


def test_rotation_path_is_continuous_across_minus_one():
    K = make_interval(4)
    A = np.array([[0.6, 0.3], [0.3, 0.4]])
    start = MatrixField.constant(K, A)
    W = _phase_field(K, np.pi - 0.5 + K.vertices[:, 0])
    path = rotation_path(start, W, T=32)
    bound = 2 * start.norm * K.mesh_width + 1e-9
    assert all(step.omega <= bound for step in path.steps)
    assert np.allclose(path.end.values, W @ A @ W.conj().transpose(0, 2, 1), atol=1e-10)
    assert path.step_gap <= path.path_tol


def test_rotation_path_rejects_a_winding_loop():
    m = 12
    angles = 2 * np.pi * np.arange(m) / m
    loop = SampledSpace.from_simplices(np.c_[np.cos(angles), np.sin(angles)],
                                       [[i, (i + 1) % m] for i in range(m)])
    start = MatrixField.constant(loop, np.diag([1.0, 0.0]))
    with pytest.raises(IllPosedCutError):
        rotation_path(start, _phase_field(loop, angles))
