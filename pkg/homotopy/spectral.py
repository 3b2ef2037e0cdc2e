import numpy as np

from bounds import BoundChain, USC_LOWER
from matcalc import dagger, hermitize, rank_threshold
from utils.errors import RankBoundError
from utils.tolerances import get_tolerances
from .field import FieldPath, MatrixField
from .frames import find_trivial_subprojection


def _bound_on_support(g, a):
    if g.space is not a.space:
        raise ValueError("bound and field live on different spaces")
    return g.evaluate()[a.support]


def find_uniform_gap(a, g):
    """eta > 0 with #{eigenvalues of a(x) above eta'} >= g(x) for all x and 0 < eta' <= eta.

    Half of the smallest g(x)-th largest eigenvalue, moved off the spectrum of the
    field so that cutting at eta is well posed.
    """
    if g.kind != USC_LOWER:
        raise ValueError("find_uniform_gap expects a USC-lower bound chain")
    need = _bound_on_support(g, a)
    short = np.flatnonzero(a.ranks < need)
    if len(short):
        x = int(a.support[short[0]])
        raise RankBoundError("rank %d below the lower bound %d at point %d"
                             % (a.ranks[short[0]], need[short[0]], x), point=x)
    lam = a.eig[0]
    if not len(lam):
        return 1.0
    positive = need > 0
    if np.any(positive):
        kth = lam[positive, a.n - need[positive]]
        eta = 0.5 * float(kth.min())
    else:
        above = lam[lam > rank_threshold(lam)[:, None]]
        eta = 0.5 * float(above.min()) if above.size else 0.5
    clearance = 10 * get_tolerances().gap
    for _ in range(200):
        if not np.any(np.abs(lam - eta) < clearance + 1e-3 * eta):
            break
        eta *= 0.9
    return eta


def _check_unit_norm(a):
    if a.norm > 1 + 10 * get_tolerances().herm:
        raise ValueError("field norm %.6g exceeds 1; normalize first" % a.norm)


def flatten_spectrum(a, eta, T=None):
    """Path h(t) = f_s(a) with s = 1 - t(1 - eta/2); ranks stay constant."""
    _check_unit_norm(a)
    if not (0 < eta <= 2):
        raise ValueError("eta must lie in (0, 2], got %r" % eta)
    lam, U = a.eig
    support = lam > rank_threshold(lam)[:, None]

    def formula(t, rows):
        s = 1.0 - t * (1.0 - eta / 2.0)
        vals = np.where(support[rows], np.minimum(lam[rows] / s, 1.0), 0.0)
        return hermitize((U[rows] * vals[:, None, :]) @ dagger(U[rows]))
    return FieldPath(a, formula, T, 'flatten_spectrum')


def _cut_projection(a, eta):
    lam, U = a.eig
    keep = (lam > eta).astype(np.float64)
    return MatrixField(a.space, hermitize((U * keep[:, None, :]) @ dagger(U)), a.support)


def peel_trivial_summand(a, k, T=None):
    """Flatten a so that a trivial projection p of rank >= k - dim becomes a summand.

    Returns (path, p) with p.frame the trivializing frame and p h(1) = p.
    """
    _check_unit_norm(a)
    short = np.flatnonzero(a.ranks < k)
    if len(short):
        x = int(a.support[short[0]])
        raise RankBoundError("rank %d below %d at point %d" % (a.ranks[short[0]], k, x), point=x)
    eta = find_uniform_gap(a, BoundChain.constant(a.space, USC_LOWER, k))
    path = flatten_spectrum(a, eta, T)
    P = _cut_projection(a, eta)
    p = find_trivial_subprojection(P, max(int(k) - a.space.dim, 0))
    end = path.end.values
    p.certificate['summand_defect'] = float(np.max(
        np.linalg.norm(p.values @ end - p.values, ord=2, axis=(1, 2)))) if len(end) else 0.0
    p.certificate['eta'] = eta
    return path, p
