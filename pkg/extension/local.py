import numpy as np

from bounds import LSC_UPPER, USC_LOWER
from homotopy import MatrixField, find_uniform_gap
from matcalc import cutdown, op_norm
from space import point_distances
from utils.errors import MeshTooCoarseError, RankBoundError
from utils.tolerances import get_tolerances


def _nearest(K, Y, points):
    """Index into Y of the nearest point of Y for every point (ties: lowest index)."""
    D = point_distances(K.vertices[points], K.vertices[Y])
    return np.argmin(D, axis=1), D


def _domain(K, Y, domain):
    if domain is None:
        return K.sample_points
    return np.union1d(np.asarray(domain, dtype=np.int64), Y)


def check_chains(f, g, space):
    if f.kind != LSC_UPPER or g.kind != USC_LOWER:
        raise ValueError("expected an LSC-upper bound f and a USC-lower bound g")
    if f.space is not space or g.space is not space:
        raise ValueError("bound chains live on a different space than the field")


def check_field_bounds(b, f_values, g_values, what='field'):
    ranks = b.ranks
    lo, hi = g_values[b.support], f_values[b.support]
    bad = np.flatnonzero((ranks < lo) | (ranks > hi))
    if len(bad):
        i = bad[0]
        x = int(b.support[i])
        raise RankBoundError("%s has rank %d outside [%d, %d] at point %d"
                             % (what, ranks[i], lo[i], hi[i], x), point=x)


def extend_nearest(a, points=None):
    """Nearest-point extension of a field on Y to ``points`` (all sample points by default)."""
    K = a.space
    Y = a.support
    if not len(Y):
        raise ValueError("cannot extend a field from an empty subcomplex")
    points = K.sample_points if points is None else np.unique(np.asarray(points, dtype=np.int64))
    src, _ = _nearest(K, Y, points)
    values = a.values[src]
    # exact copy on Y
    on_y = a.positions[points] >= 0
    values[on_y] = a.values[a.positions[points[on_y]]]
    return MatrixField(K, values, points)


def _shell_levels(dist, diff, dist_yy, f_new, f_y, eta, shells):
    """Deepest shell U_n holding each new point (0 when outside U_1).

    ``dist``/``diff`` are new-point x Y distances and fibre gaps, ``dist_yy`` the
    distances inside Y, ``f_new``/``f_y`` the upper bound on both sides.
    """
    C = dist.shape[0]
    level = np.zeros(C, dtype=np.int64)
    previous = np.ones(C, dtype=bool)
    for n in range(1, shells + 1):
        violating = diff >= eta / 2.0 ** n
        delta = float(dist[violating].min()) if violating.any() else np.inf
        covered = np.zeros(len(f_y), dtype=bool)
        inside = np.zeros(C, dtype=bool)
        for value in np.unique(f_y):
            ys = (f_y == value) & ~covered
            if not ys.any():
                continue
            radius = delta
            lower = f_new < value
            if lower.any():
                radius = min(radius, float(dist[np.ix_(lower, ys)].min()))
            inside |= dist[:, ys].min(axis=1) < radius
            covered |= dist_yy[:, ys].min(axis=1) < radius
        inside &= previous
        level[inside] = n
        previous = inside
        if not inside.any():
            break
    return level


def extend_local(a, f, g, shells=None, domain=None, strict=True):
    """Extend a from Y to a neighbourhood U of Y inside the bounds g <= rank <= f.

    The nearest-point extension is cut down by eta / 2^n on the n-th distance shell
    around Y, with eta a uniform spectral gap for the lower bound. Returns (U, b) with
    b defined on the sample points of U and equal to a on Y.
    """
    K = a.space
    check_chains(f, g, K)
    Y = a.support
    if not len(Y):
        raise ValueError("extend_local needs a nonempty subcomplex Y")
    fv, gv = f.evaluate(), g.evaluate()
    points = _domain(K, Y, domain)
    crossed = np.flatnonzero(fv[points] < gv[points])
    if len(crossed):
        x = int(points[crossed[0]])
        raise ValueError("upper bound %d below lower bound %d at point %d" % (fv[x], gv[x], x))
    check_field_bounds(a, fv, gv, 'restricted field')
    shells = int(get_tolerances().shells if shells is None else shells)

    new = np.setdiff1d(points, Y)
    if not len(new):
        return K.full_subcomplex(Y), a
    src, dist = _nearest(K, Y, new)
    tilde = a.values[src]
    tilde_ranks = a.ranks[src]
    keep = tilde_ranks >= gv[new]
    cand, src, dist, tilde = new[keep], src[keep], dist[keep], tilde[keep]

    level = np.zeros(len(cand), dtype=np.int64)
    if len(cand):
        U0 = np.union1d(Y, cand)
        values = np.empty((len(U0), a.n, a.n), dtype=np.complex128)
        values[np.searchsorted(U0, Y)] = a.values
        values[np.searchsorted(U0, cand)] = tilde
        eta = find_uniform_gap(MatrixField(K, values, U0), g)

        # tilde(x) = a(src(x)), so fibre gaps are gaps between points of Y
        sources = np.unique(src)
        gaps = np.stack([op_norm(a.values - a.values[s]) for s in sources])
        diff = gaps[np.searchsorted(sources, src)]
        dist_yy = point_distances(K.vertices[Y], K.vertices[Y])
        level = _shell_levels(dist, diff, dist_yy, fv[cand], fv[Y], eta, shells)

    reached = level > 0
    if strict and not reached.any():
        touching = [x for x in Y if np.any(np.isin(K.adjacency[x], new))]
        if touching:
            raise MeshTooCoarseError("no distance shell around Y reaches a neighbouring sample point",
                                     point=int(touching[0]))

    grown = cand[reached]
    U = np.union1d(Y, grown)
    values = np.empty((len(U), a.n, a.n), dtype=np.complex128)
    values[np.searchsorted(U, Y)] = a.values
    if len(grown):
        cutoff = eta / 2.0 ** level[reached]
        values[np.searchsorted(U, grown)] = cutdown(tilde[reached], cutoff)
    b = MatrixField(K, values, U)
    check_field_bounds(b, fv, gv, 'local extension')
    return K.full_subcomplex(U), b
