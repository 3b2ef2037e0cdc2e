import math
from fractions import Fraction

import numpy as np

from utils.errors import MeshTooCoarseError
from .chain import BoundChain, LSC_UPPER, USC_LOWER


class GridFunction(object):
    """Function with values in {k/n}; stored exactly as integer numerators k."""
    def __init__(self, n, numerators, tag='none'):
        if n <= 0:
            raise ValueError("grid denominator must be positive, got %r" % n)
        if tag not in ('lsc', 'usc', 'none'):
            raise ValueError("unknown semicontinuity tag %r" % tag)
        self.n = int(n)
        self.numerators = np.asarray(numerators, dtype=np.int64)
        self.tag = tag

    @property
    def values(self):
        return self.numerators / float(self.n)

    def fraction(self, x):
        return Fraction(int(self.numerators[x]), self.n)

    def clamp(self, lo=None, hi=None):
        k = self.numerators
        if lo is not None:
            k = np.maximum(k, lo)
        if hi is not None:
            k = np.minimum(k, hi)
        return GridFunction(self.n, k, self.tag)

    def __len__(self):
        return len(self.numerators)


def _check_grid(n):
    if int(n) <= 0:
        raise ValueError("grid denominator must be a positive integer, got %r" % n)
    return int(n)


def floor_env(alpha, n):
    """g(x) = k/n with k/n < alpha(x) <= (k+1)/n (lsc)."""
    n = _check_grid(n)
    k = [math.ceil(Fraction(float(a)) * n) - 1 for a in np.ravel(alpha)]
    return GridFunction(n, k, 'lsc')


def ceil_env(alpha, n):
    """h(x) = (k+1)/n with k/n <= alpha(x) < (k+1)/n (usc)."""
    n = _check_grid(n)
    k = [math.floor(Fraction(float(a)) * n) + 1 for a in np.ravel(alpha)]
    return GridFunction(n, k, 'usc')


def discretize_to_chain(G, K):
    """Encode n*G as a BoundChain on K (lsc -> LSC-upper, usc -> USC-lower).

    A vertex function extends to |K| by the max (lsc) or min (usc) over the carrier
    simplex, so its level sets are the full subcomplexes on the vertex level sets.
    """
    if G.tag not in ('lsc', 'usc'):
        raise ValueError("grid function must be tagged lsc or usc to become a bound chain")
    if len(G) != K.n_points:
        raise MeshTooCoarseError("grid function has %d samples but the complex has %d points"
                                 % (len(G), K.n_points))
    k = G.numerators
    if G.tag == 'lsc':
        values = sorted(set(int(v) for v in k))
        levels = [K.full_subcomplex(np.flatnonzero(k <= v)) for v in values]
        chain = BoundChain(LSC_UPPER, values, levels)
    else:
        values = sorted(set(int(v) for v in k), reverse=True)
        levels = [K.full_subcomplex(np.flatnonzero(k >= v)) for v in values]
        chain = BoundChain(USC_LOWER, values, levels)
    mismatch = np.flatnonzero(chain.evaluate() != k)
    if len(mismatch):
        raise MeshTooCoarseError("level sets do not reproduce the grid function",
                                 point=int(mismatch[0]))
    return chain
