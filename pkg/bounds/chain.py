import numpy as np

LSC_UPPER = 'lsc_upper'
USC_LOWER = 'usc_lower'


class BoundChain(object):
    """Integer-valued semicontinuous rank bound as a nested chain of closed subcomplexes.

    LSC-upper:  E_i = {f <= n_i},  n_1 < ... < n_k
    USC-lower:  F_j = {g >= m_j},  m_1 > ... > m_k
    In both cases the levels increase, E_1 ⊆ ... ⊆ E_k = X, and the value at x is
    the value of the first level containing x.
    """
    def __init__(self, kind, values, levels):
        if kind not in (LSC_UPPER, USC_LOWER):
            raise ValueError("unknown bound kind %r" % (kind,))
        values = tuple(int(v) for v in values)
        levels = tuple(levels)
        if not values or len(values) != len(levels):
            raise ValueError("a bound chain needs one value per level (%d values, %d levels)"
                             % (len(values), len(levels)))
        steps = np.diff(values)
        if kind == LSC_UPPER and np.any(steps <= 0):
            raise ValueError("LSC-upper values must increase strictly: %s" % (values,))
        if kind == USC_LOWER and np.any(steps >= 0):
            raise ValueError("USC-lower values must decrease strictly: %s" % (values,))
        space = levels[0].parent
        for i, level in enumerate(levels):
            if level.parent is not space:
                raise ValueError("level %d lives in a different space" % i)
            if i and not levels[i - 1].issubset(level):
                raise ValueError("levels %d and %d are not nested" % (i - 1, i))
        if len(levels[-1].simplex_ids) != len(space.simplices):
            raise ValueError("last level must be the whole complex")
        self.kind = kind
        self.values = values
        self.levels = levels
        self.space = space
        self._evaluated = None

    @classmethod
    def constant(cls, space, kind, c):
        return cls(kind, [c], [space.full()])

    def evaluate(self):
        """Bound value at every sample point."""
        if self._evaluated is None:
            out = np.empty(self.space.n_points, dtype=np.int64)
            for value, level in zip(reversed(self.values), reversed(self.levels)):
                out[level.mask] = value
            out.setflags(write=False)
            self._evaluated = out
        return self._evaluated

    def __repr__(self):
        return "BoundChain(%s, values=%s)" % (self.kind, list(self.values))


def eval_bound(B, x):
    x = B.space.check_point(x)
    return int(B.evaluate()[x])
