import functools

import numpy as np

from matcalc import check_hermitian, dagger, eigh, hermitize, op_norm, ranks_from_eigenvalues
from utils.errors import MeshTooCoarseError
from utils.tolerances import get_tolerances


class MatrixField(object):
    """PSD matrix field sampled on (a subset of) the points of a SampledSpace.

    Arguments:
        space (SampledSpace): the complex the field lives on.
        values (array): (N, n, n) complex, one matrix per support point.
        support (array, optional): sorted vertex indices carrying the values;
            defaults to every sample point.
    """
    def __init__(self, space, values, support=None):
        values = np.asarray(values, dtype=np.complex128)
        if values.ndim != 3 or values.shape[1] != values.shape[2]:
            raise ValueError("field values must have shape (N, n, n), got %s" % (values.shape,))
        if support is None:
            support = np.arange(space.n_points)
        support = np.asarray(support, dtype=np.int64)
        if len(support) != len(values):
            raise ValueError("%d values for %d support points" % (len(values), len(support)))
        if len(support) and (np.any(np.diff(support) <= 0) or support[0] < 0
                             or support[-1] >= space.n_points):
            raise ValueError("support must be sorted distinct sample points of the space")
        check_hermitian(values)
        values = np.array(values)
        values.setflags(write=False)
        self.space = space
        self.values = values
        self.support = support
        self.n = values.shape[1]

    @classmethod
    def constant(cls, space, M, support=None):
        support = np.arange(space.n_points) if support is None else np.asarray(support, dtype=np.int64)
        M = np.asarray(M, dtype=np.complex128)
        return cls(space, np.broadcast_to(M, (len(support),) + M.shape), support)

    def __len__(self):
        return len(self.support)

    @functools.cached_property
    def positions(self):
        """Sample point -> row of ``values`` (-1 off the support)."""
        pos = -np.ones(self.space.n_points, dtype=np.int64)
        pos[self.support] = np.arange(len(self.support))
        return pos

    def position(self, x):
        x = self.space.check_point(x)
        p = self.positions[x]
        if p < 0:
            raise ValueError("sample point %d is outside the field's support" % x)
        return int(p)

    def value(self, x):
        return self.values[self.position(x)]

    @functools.cached_property
    def eig(self):
        return eigh(self.values)

    @functools.cached_property
    def ranks(self):
        return ranks_from_eigenvalues(self.eig[0]).astype(np.int64).reshape(-1)

    @functools.cached_property
    def norm(self):
        if not len(self.values):
            return 0.0
        return float(np.max(np.abs(self.eig[0])))

    @functools.cached_property
    def local_edges(self):
        """Mesh edges inside the support, as pairs of value rows."""
        edges = self.space.edges_within(self.support)
        return self.positions[edges].reshape(-1, 2)

    @functools.cached_property
    def omega(self):
        """Continuity certificate: max operator-norm jump over mesh edges."""
        e = self.local_edges
        if not len(e):
            return 0.0
        return float(np.max(op_norm(self.values[e[:, 0]] - self.values[e[:, 1]])))

    def is_psd(self):
        lam = self.eig[0]
        if not lam.size:
            return True
        scale = np.maximum(1.0, np.max(np.abs(lam), axis=1))
        return bool(np.all(lam[:, 0] >= -get_tolerances().psd * scale))

    def restrict(self, points):
        points = np.unique(np.asarray(points, dtype=np.int64))
        pos = self.positions[points]
        if np.any(pos < 0):
            raise ValueError("cannot restrict to points outside the support: %s"
                             % points[pos < 0][:5].tolist())
        return MatrixField(self.space, self.values[pos], points)

    def with_values(self, values):
        return MatrixField(self.space, values, self.support)

    def same_domain(self, other):
        return (self.space is other.space and self.n == other.n
                and np.array_equal(self.support, other.support))

    def __repr__(self):
        return "MatrixField(n=%d, points=%d)" % (self.n, len(self.support))


def projection_from_frame(frame):
    return hermitize(frame @ dagger(frame))


class ProjectionField(MatrixField):
    """Projection field together with an orthonormal frame spanning its range."""
    def __init__(self, space, frame, support=None, certificate=None):
        frame = np.asarray(frame, dtype=np.complex128)
        super(ProjectionField, self).__init__(space, projection_from_frame(frame), support)
        frame = np.array(frame)
        frame.setflags(write=False)
        self.frame = frame
        self.rank = frame.shape[2]
        self.certificate = dict(certificate or {})


class FieldPath(object):
    """Homotopy of matrix fields given by an explicit formula in t.

    ``formula(t, rows)`` returns the values at time t on the given rows of the support.
    Steps are sampled lazily on a T-step grid and bisected until consecutive steps
    differ by at most path_tol.
    """
    def __init__(self, start, formula, T=None, name='path'):
        self.start = start
        self.formula = formula
        self.T = int(get_tolerances().time_steps if T is None else T)
        if self.T < 1:
            raise ValueError("a path needs at least one time step")
        self.name = name

    @property
    def space(self):
        return self.start.space

    @property
    def support(self):
        return self.start.support

    @property
    def n(self):
        return self.start.n

    def at(self, t, rows=None):
        rows = np.arange(len(self.support)) if rows is None else np.asarray(rows, dtype=np.int64)
        if t == 0.0:
            return self.start.values[rows]
        return self.formula(float(t), rows)

    def field_at(self, t):
        if t == 0.0:
            return self.start
        return MatrixField(self.space, self.at(t), self.support)

    @functools.cached_property
    def end(self):
        return self.field_at(1.0)

    @property
    def path_tol(self):
        return get_tolerances().path * max(self.start.norm, self.end.norm)

    @functools.cached_property
    def _samples(self):
        times = list(np.linspace(0.0, 1.0, self.T + 1))
        values = {t: self.at(t) for t in times}
        for _ in range(get_tolerances().max_refine + 1):
            gaps = [_sup_gap(values[a], values[b]) for a, b in zip(times[:-1], times[1:])]
            bad = [i for i, g in enumerate(gaps) if g > self.path_tol]
            if not bad:
                break
            for i in bad:
                mid = 0.5 * (times[i] + times[i + 1])
                values[mid] = self.at(mid)
            times = sorted(values)
        else:
            raise MeshTooCoarseError("%s: step gap %.3g stays above path_tol %.3g after refinement"
                                     % (self.name, max(gaps), self.path_tol))
        return np.array(times), [values[t] for t in times], (max(gaps) if gaps else 0.0)

    @property
    def times(self):
        return self._samples[0]

    @functools.cached_property
    def steps(self):
        times, values, _ = self._samples
        fields = [self.start if t == 0.0 else MatrixField(self.space, v, self.support)
                  for t, v in zip(times, values)]
        fields[-1] = self.end
        return fields

    @property
    def step_gap(self):
        return self._samples[2]

    def __repr__(self):
        return "FieldPath(%s, n=%d, points=%d)" % (self.name, self.n, len(self.support))


def _sup_gap(A, B):
    if not len(A):
        return 0.0
    return float(np.max(op_norm(A - B)))


def constant_path(a, T=None, name='constant'):
    return FieldPath(a, lambda t, rows: a.values[rows], T, name)


def concat_paths(paths, name='concat'):
    """Run the paths one after another, each on an equal share of [0, 1]."""
    paths = list(paths)
    if len(paths) == 1:
        return paths[0]
    m = len(paths)

    def formula(t, rows):
        i = min(int(t * m), m - 1)
        return paths[i].at(t * m - i, rows)
    return FieldPath(paths[0].start, formula, max(p.T for p in paths), name)


def reverse_path(path, name=None):
    return FieldPath(path.end, lambda t, rows: path.at(1.0 - t, rows), path.T,
                     name or 'reverse(%s)' % path.name)


def lift_path(path, frame, p, name=None):
    """t -> G h(t) G* + p for a path h in the corner cut out by the frame G."""
    G = np.asarray(frame)
    P = np.asarray(p.values)

    def lift(values, rows):
        return hermitize(G[rows] @ values @ dagger(G[rows]) + P[rows])
    start = MatrixField(p.space, lift(path.start.values, np.arange(len(p.support))), p.support)
    return FieldPath(start, lambda t, rows: lift(path.at(t, rows), rows), path.T,
                     name or 'lift(%s)' % path.name)


def scale_path(a, c, T=None, name='scale'):
    """Straight line from a to a / c (c > 0); ranks are preserved."""
    if c <= 0:
        raise ValueError("scale must be positive")
    return FieldPath(a, lambda t, rows: (1.0 - t + t / c) * a.values[rows], T, name)
