from fractions import Fraction

import numpy as np

from bounds import ceil_env, floor_env


class TargetProfile(object):
    """Per-stage target functions h_k with accuracy eps and the tolerance schedule.

    Arguments:
        values (list): one array of h_k values per stage, indexed by sample point.
        eps (float): accuracy.
        deltas (list, optional): delta_0, ..., delta_l; defaults to 3 eps / 4 followed
            by eps / (8 l) for every later stage.
    """
    def __init__(self, values, eps, deltas=None):
        self.values = [np.asarray(v, dtype=np.float64).reshape(-1) for v in values]
        if not self.values:
            raise ValueError("a target profile needs at least one stage")
        self.eps = float(eps)
        if not self.eps > 0:
            raise ValueError("eps must be positive, got %r" % eps)
        l = len(self.values) - 1
        if deltas is None:
            deltas = [0.75 * self.eps] + ([self.eps / (8.0 * l)] * l if l else [])
        self.deltas = [float(d) for d in deltas]
        if len(self.deltas) != len(self.values):
            raise ValueError("%d tolerances for %d stages" % (len(self.deltas), len(self.values)))
        self.etas = list(np.cumsum(self.deltas))

    @classmethod
    def from_polynomials(cls, R, coefficients, eps, deltas=None):
        """h_k(x) = sum_i c_i x_0^i on the first coordinate of each stage base."""
        if len(coefficients) != len(R):
            raise ValueError("%d polynomials for %d stages" % (len(coefficients), len(R)))
        values = []
        for stage, coef in zip(R.stages, coefficients):
            x = stage.base.vertices[:, 0]
            values.append(np.polynomial.polynomial.polyval(x, np.asarray(coef, dtype=np.float64)))
        return cls(values, eps, deltas)

    @property
    def norm(self):
        return float(max(np.max(np.abs(v)) for v in self.values if len(v)))

    @property
    def eta(self):
        """eta_l, the final accumulated tolerance."""
        return float(self.etas[-1])

    def check(self, R):
        """Raise ValueError unless the profile fits R and the tolerance chain holds."""
        if len(self.values) != len(R):
            raise ValueError("profile has %d stages, decomposition %d" % (len(self.values), len(R)))
        for k, (stage, h) in enumerate(zip(R.stages, self.values)):
            if len(h) != stage.base.n_points:
                raise ValueError("h_%d has %d values for %d points" % (k, len(h), stage.base.n_points))
            if np.min(h) <= 0:
                x = int(np.argmin(h))
                raise ValueError("h_%d is not strictly positive at point %d (%.6g)" % (k, x, h[x]))
        if self.norm > 1.0:
            raise ValueError("target norm %.6g exceeds 1" % self.norm)
        if not self.eps < self.norm:
            raise ValueError("eps %.6g must be below the target norm %.6g" % (self.eps, self.norm))
        eps = Fraction(self.eps)
        deltas = [Fraction(d) for d in self.deltas]
        if any(d <= 0 for d in deltas):
            raise ValueError("tolerances must be strictly positive: %s" % self.deltas)
        # defaults are rounded floats; allow one ulp-scale shortfall
        if deltas[0] < 3 * eps / 4 * (1 - Fraction(1, 10 ** 12)):
            raise ValueError("delta_0 = %.6g is below 3 eps / 4 = %.6g" % (self.deltas[0], 0.75 * self.eps))
        if not sum(deltas) < eps:
            raise ValueError("tolerances sum to %.6g, which is not below eps" % float(sum(deltas)))
        for k, stage in enumerate(R.stages):
            for y in stage.boundary.vertices:
                blocks = stage.clutch.get(int(y), [])
                expected = sum(b.multiplicity * R.stages[b.stage].size * self.values[b.stage][b.point]
                               for b in blocks) / float(stage.size)
                if abs(expected - self.values[k][y]) > 1e-9:
                    raise ValueError("h_%d(%d) = %.9g does not match the clutch average %.9g"
                                     % (k, y, self.values[k][y], expected))
        return self

    def bounds(self, k, n):
        """Grid envelopes (lower, upper) for stage k: ceil_env(h - eta_k) clamped at 0, floor_env(h)."""
        h = self.values[k]
        lower = ceil_env(h - self.etas[k], n).clamp(lo=0)
        upper = floor_env(h, n)
        return lower, upper


def check_dimbound(R, eps):
    """(eps / 4) n(j) > 4 dim(X_j) + 4 for every stage, as a report."""
    stages = []
    for j, stage in enumerate(R.stages):
        left = eps / 4.0 * stage.size
        right = 4 * stage.base.dim + 4
        stages.append({'stage': j, 'lhs': float(left), 'rhs': int(right),
                       'margin': float(left - right), 'passed': bool(left > right)})
    return {'passed': all(s['passed'] for s in stages), 'stages': stages,
            'margin': min(s['margin'] for s in stages)}


def envelope_slack(R, target):
    """Per stage, min over points of n (upper - lower) against 4 dim(X_j)."""
    stages = []
    for j, stage in enumerate(R.stages):
        lower, upper = target.bounds(j, stage.size)
        slack = upper.numerators - lower.numerators
        x = int(np.argmin(slack))
        need = 4 * stage.base.dim
        stages.append({'stage': j, 'min_slack': int(slack[x]), 'needed': need, 'point': x,
                       'margin': int(slack[x] - need), 'passed': bool(slack[x] > need)})
    return {'passed': all(s['passed'] for s in stages), 'stages': stages}
