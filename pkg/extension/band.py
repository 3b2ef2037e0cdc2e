import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.stats import unitary_group

from bounds import BoundChain, LSC_UPPER, USC_LOWER
from homotopy import MatrixField, check_slack, connect_in_band
from matcalc import dagger, hermitize, op_norm
from space import point_distances, urysohn
from utils.errors import MeshTooCoarseError
from .local import check_field_bounds, extend_local


def _rotation(n, rng):
    if rng is None:
        return None
    return unitary_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1))


def midband_projection(n, l, k, rng=None):
    """Constant projection of rank ceil((l + k) / 2), optionally rotated by a seeded unitary."""
    r = (l + k + 1) // 2
    d = np.diag(np.r_[np.ones(r), np.zeros(n - r)]).astype(np.complex128)
    u = _rotation(n, rng)
    if u is not None:
        d = hermitize(u @ d @ dagger(u))
    return d


def soft_rank_field(K, points, lower, upper, n, rng=None):
    """Continuous field on ``points`` with lower <= rank <= upper.

    U diag(clip(c - i, 0, 1)) U* with c squeezed between the bounds by the smallest
    Lipschitz constant L that allows it, so the rank ceil(c) changes one eigenvalue
    at a time and neighbours differ by at most L times their distance.
    """
    points = np.asarray(points, dtype=np.int64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.minimum(np.asarray(upper, dtype=np.float64), n)
    crossed = np.flatnonzero(lower > upper)
    if len(crossed):
        x = int(points[crossed[0]])
        raise ValueError("lower bound %d above upper bound %d at point %d"
                         % (lower[crossed[0]], upper[crossed[0]], x))
    if not len(points):
        return MatrixField(K, np.zeros((0, n, n)), points)
    D = point_distances(K.vertices[points], K.vertices[points])
    excess = lower[:, None] - upper[None, :]
    steep = excess > 0
    L = float(np.max(excess[steep] / D[steep])) if steep.any() else 0.0
    c_lo = np.max(lower[None, :] - L * D, axis=1)
    c_hi = np.min(upper[None, :] + L * D, axis=1)
    c = 0.5 * (c_lo + c_hi)
    mu = np.clip(c[:, None] - np.arange(n)[None, :], 0.0, 1.0)
    values = np.zeros((len(points), n, n), dtype=np.complex128)
    values[:, np.arange(n), np.arange(n)] = mu
    u = _rotation(n, rng)
    if u is not None:
        values = hermitize(u @ values @ dagger(u))
    return MatrixField(K, values, points)


def transition_zones(K, Y, U, points):
    """Split ``points`` into (V, Z, far) by distance to Y.

    With reach the distance from Y to the nearest point outside U: V holds Y and the
    points closer than reach / 4, Z the points up to reach, far the rest. Without a
    point outside U everything is in V.
    """
    points = np.asarray(points, dtype=np.int64)
    dY = point_distances(K.vertices[points], K.vertices[Y]).min(axis=1)
    outside = ~np.isin(points, U)
    if not outside.any():
        return points, points[:0], points[:0]
    reach = float(dY[outside].min())
    V = np.union1d(points[dY < reach / 4.0], Y)
    Z = points[(dY >= reach / 4.0) & (dY < reach)]
    far = points[dY >= reach]
    return V, Z, far


def pieces(K, points):
    """Connected components of the mesh graph restricted to ``points``."""
    points = np.asarray(points, dtype=np.int64)
    if not len(points):
        return []
    e = np.searchsorted(points, K.edges_within(points).reshape(-1, 2))
    graph = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(len(points), len(points)))
    count, labels = connected_components(graph, directed=False)
    return [points[labels == c] for c in range(count)]


def _arc_times(path):
    """Path times and their normalized arc length (sup over the support)."""
    times = path.times
    steps = path.steps
    gaps = [float(np.max(op_norm(a.values - b.values))) if len(a) else 0.0
            for a, b in zip(steps[:-1], steps[1:])]
    arc = np.r_[0.0, np.cumsum(gaps)] + 1e-9 * times
    return times, arc / arc[-1]


def glue(local, background, zones, bands, T=None, strict=True):
    """Field equal to ``local`` on V, to ``background`` on the far region.

    On each piece of the transition zone Z the values follow a path from the local to
    the background values inside the piece's band, at the arc-length time given by
    the Urysohn function of V and the far region.
    """
    K = local.space
    V, Z, far = zones
    points = np.union1d(V, np.union1d(Z, far))
    n = local.n
    values = np.empty((len(points), n, n), dtype=np.complex128)
    rows = np.searchsorted(points, V)
    values[rows] = local.values[local.positions[V]]
    rest = np.union1d(Z, far)
    if len(rest):
        values[np.searchsorted(points, rest)] = background.values[background.positions[rest]]
    if strict and len(far):
        e = K.edges_within(np.union1d(V, far)).reshape(-1, 2)
        cross = e[np.isin(e[:, 0], V) != np.isin(e[:, 1], V)]
        if len(cross):
            x = int(cross[0, 0]) if np.isin(cross[0, 0], V) else int(cross[0, 1])
            raise MeshTooCoarseError("no transition zone between the local extension and the far "
                                     "region next to point %d" % x, point=x)
    if len(Z):
        u = urysohn(K, K.full_subcomplex(V), K.full_subcomplex(far), Z)
        for piece, l, k in bands:
            path = connect_in_band(local.restrict(piece), background.restrict(piece), l, k, T)
            times, arc = _arc_times(path)
            s = np.interp(u[np.searchsorted(Z, piece)], arc, times)
            for i, x in enumerate(piece):
                values[np.searchsorted(points, x)] = path.at(s[i], [i])[0]
    return MatrixField(K, values, points)


def extend_band(a, l, k, shells=None, domain=None, rng=None, T=None, strict=True):
    """Extension b of a from Y to all of ``domain`` with l <= rank(b) <= k and b|_Y = a.

    Near Y the local extension is used; away from it every fibre is the midband
    constant projection, and in between the values run along a path inside the band.
    """
    K = a.space
    n = a.n
    check_slack(K, n, l, k)
    Y = a.support
    points = K.sample_points if domain is None else np.union1d(np.asarray(domain, dtype=np.int64), Y)
    f_const = BoundChain.constant(K, LSC_UPPER, k)
    g_const = BoundChain.constant(K, USC_LOWER, l)
    check_field_bounds(a, f_const.evaluate(), g_const.evaluate(), 'restricted field')
    d = midband_projection(n, l, k, rng)
    if not len(Y):
        return MatrixField.constant(K, d, points)
    if len(points) == len(Y):
        return a

    U, local = extend_local(a, f_const, g_const, shells, points, strict)
    zones = transition_zones(K, Y, U.vertices, points)
    background = MatrixField.constant(K, d, np.union1d(zones[1], zones[2]))
    bands = [(piece, l, k) for piece in pieces(K, zones[1])]
    b = glue(local, background, zones, bands, T, strict)
    check_field_bounds(b, f_const.evaluate(), g_const.evaluate(), 'band extension')
    return b
