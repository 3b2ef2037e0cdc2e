import itertools

import numpy as np
from sklearn.metrics import pairwise_distances


def _faces(simplex):
    """All nonempty faces of a simplex (the simplex itself included)."""
    simplex = tuple(sorted(simplex))
    for size in range(1, len(simplex) + 1):
        for face in itertools.combinations(simplex, size):
            yield face


def point_distances(P, Q):
    """Euclidean distances between two coordinate arrays.

    sklearn's pairwise_distances with the minkowski metric (p=2) takes coordinate
    differences directly, so coinciding points are at distance exactly zero.
    """
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    return pairwise_distances(P, Q, metric='minkowski', p=2)


class SampledSpace(object):
    """Finite geometric simplicial complex standing in for a compact metric space.

    Arguments:
        vertices (array): (V, m) coordinates; the vertices are the sample points.
        simplices (iterable): vertex-index tuples, closed under taking faces.
        carriers (tuple, optional): for every vertex, the vertex set of the simplex of the
            unsubdivided complex whose interior contains it.
        root (SampledSpace, optional): the unsubdivided complex this one refines.
    """
    def __init__(self, vertices, simplices, carriers=None, root=None):
        vertices = np.asarray(vertices, dtype=np.float64)
        if vertices.ndim == 1:
            vertices = vertices.reshape(-1, 1)
        self.vertices = vertices
        self.simplices = tuple(sorted({tuple(sorted(int(v) for v in s)) for s in simplices},
                                      key=lambda s: (len(s), s)))
        self.index = {s: i for i, s in enumerate(self.simplices)}
        n_points = len(vertices)

        for s in self.simplices:
            for v in s:
                if v < 0 or v >= n_points:
                    raise ValueError("simplex %s references unknown vertex %d" % (s, v))
            for face in _faces(s):
                if face not in self.index:
                    raise ValueError("face %s of simplex %s is not listed" % (face, s))
        for v in range(n_points):
            if (v,) not in self.index:
                raise ValueError("vertex %d is not a 0-simplex of the complex" % v)
        if n_points and len(np.unique(vertices, axis=0)) != n_points:
            raise ValueError("sample points must be pairwise distinct")

        if carriers is None:
            carriers = tuple(frozenset([v]) for v in range(n_points))
        self.carriers = tuple(frozenset(c) for c in carriers)
        self.root = self if root is None else root

        self.edges = np.array([s for s in self.simplices if len(s) == 2], dtype=np.int64).reshape(-1, 2)
        self.dim = max(len(s) for s in self.simplices) - 1 if self.simplices else 0
        if len(self.edges):
            lengths = np.linalg.norm(vertices[self.edges[:, 0]] - vertices[self.edges[:, 1]], axis=1)
            self.mesh_width = float(lengths.max())
        else:
            self.mesh_width = 0.0
        self._adjacency = None

    @classmethod
    def from_simplices(cls, vertices, maximal):
        """Build a complex from its maximal simplices, closing under faces."""
        vertices = np.asarray(vertices, dtype=np.float64)
        n_points = len(vertices) if vertices.ndim > 1 else vertices.shape[0]
        closed = set((v,) for v in range(n_points))
        for s in maximal:
            closed.update(_faces(s))
        return cls(vertices, closed)

    @property
    def n_points(self):
        return len(self.vertices)

    @property
    def sample_points(self):
        return np.arange(self.n_points)

    @property
    def adjacency(self):
        if self._adjacency is None:
            adj = [[] for _ in range(self.n_points)]
            for x, y in self.edges:
                adj[x].append(int(y))
                adj[y].append(int(x))
            self._adjacency = tuple(np.array(sorted(a), dtype=np.int64) for a in adj)
        return self._adjacency

    def neighbors(self, x):
        return self.adjacency[self.check_point(x)]

    def check_point(self, x):
        if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
            raise ValueError("sample point must be a vertex index, got %r" % (x,))
        if x < 0 or x >= self.n_points:
            raise ValueError("%d is not a sample point (space has %d)" % (x, self.n_points))
        return int(x)

    def edges_within(self, points):
        """Edges with both endpoints in ``points``."""
        mask = np.zeros(self.n_points, dtype=bool)
        mask[np.asarray(points, dtype=np.int64)] = True
        if not len(self.edges):
            return self.edges
        keep = mask[self.edges[:, 0]] & mask[self.edges[:, 1]]
        return self.edges[keep]

    # subcomplexes

    def subcomplex(self, simplices):
        closed = set()
        for s in simplices:
            closed.update(_faces(s))
        missing = [s for s in closed if s not in self.index]
        if missing:
            raise ValueError("simplices %s are not in the complex" % sorted(missing)[:3])
        return Subcomplex(self, [self.index[s] for s in closed])

    def full_subcomplex(self, points):
        """Largest subcomplex whose vertices all lie in ``points``."""
        mask = np.zeros(self.n_points, dtype=bool)
        mask[np.asarray(list(points), dtype=np.int64)] = True
        ids = [i for i, s in enumerate(self.simplices) if mask[list(s)].all()]
        return Subcomplex(self, ids)

    def full(self):
        return Subcomplex(self, range(len(self.simplices)))

    def empty(self):
        return Subcomplex(self, [])

    def __repr__(self):
        return "SampledSpace(points=%d, simplices=%d, dim=%d, mesh=%.4g)" % (
            self.n_points, len(self.simplices), self.dim, self.mesh_width)


class Subcomplex(object):
    """Closed subset of a SampledSpace, encoded as a face-closed set of its simplices."""
    def __init__(self, parent, simplex_ids):
        self.parent = parent
        self.simplex_ids = frozenset(int(i) for i in simplex_ids)
        for i in self.simplex_ids:
            for face in _faces(parent.simplices[i]):
                if face not in parent.index or parent.index[face] not in self.simplex_ids:
                    raise ValueError("subcomplex is not closed: face %s of %s missing"
                                     % (face, parent.simplices[i]))
        verts = sorted(parent.simplices[i][0] for i in self.simplex_ids if len(parent.simplices[i]) == 1)
        self.vertices = np.array(verts, dtype=np.int64)
        self._mask = None

    @property
    def mask(self):
        if self._mask is None:
            self._mask = np.zeros(self.parent.n_points, dtype=bool)
            self._mask[self.vertices] = True
        return self._mask

    def is_empty(self):
        return not self.simplex_ids

    def __contains__(self, x):
        return bool(self.mask[self.parent.check_point(x)])

    def __len__(self):
        return len(self.vertices)

    def _check_parent(self, other):
        if other.parent is not self.parent:
            raise ValueError("subcomplexes live in different spaces")

    def union(self, other):
        self._check_parent(other)
        return Subcomplex(self.parent, self.simplex_ids | other.simplex_ids)

    def intersection(self, other):
        self._check_parent(other)
        return Subcomplex(self.parent, self.simplex_ids & other.simplex_ids)

    def issubset(self, other):
        self._check_parent(other)
        return self.simplex_ids <= other.simplex_ids

    def simplices(self):
        return [self.parent.simplices[i] for i in sorted(self.simplex_ids)]

    def __repr__(self):
        return "Subcomplex(points=%d, simplices=%d)" % (len(self.vertices), len(self.simplex_ids))


def _chains(simplex, memo):
    """Strictly increasing face chains ending at ``simplex``."""
    if simplex in memo:
        return memo[simplex]
    chains = [(simplex,)]
    if len(simplex) > 1:
        for size in range(1, len(simplex)):
            for face in itertools.combinations(simplex, size):
                chains.extend(c + (simplex,) for c in _chains(face, memo))
    memo[simplex] = chains
    return chains


def _barycentric(K):
    # one new vertex per simplex; 0-simplices come first so original vertices keep their index
    coords = np.stack([K.vertices[list(s)].mean(axis=0) for s in K.simplices])
    carriers = [frozenset().union(*(K.carriers[v] for v in s)) for s in K.simplices]
    memo = {}
    simplices = set()
    for s in K.simplices:
        for chain in _chains(s, memo):
            simplices.add(tuple(sorted(K.index[c] for c in chain)))
    return SampledSpace(coords, simplices, carriers=carriers, root=K.root)


def subdivide(K, r):
    """r-fold barycentric subdivision of K."""
    if r < 0:
        raise ValueError("subdivision depth must be nonnegative, got %d" % r)
    for _ in range(int(r)):
        K = _barycentric(K)
    return K


def refine_subcomplex(S, K):
    """Carry a subcomplex of the unsubdivided complex onto its subdivision ``K``."""
    if S.parent is K:
        return S
    if S.parent is not K.root:
        raise ValueError("subcomplex does not belong to the complex that %r refines" % K)
    root_sets = set(frozenset(s) for s in S.simplices())
    inside = np.array([c in root_sets for c in K.carriers], dtype=bool)
    return K.full_subcomplex(np.flatnonzero(inside))


def distances_to(K, S, points=None):
    """dist_to for many points at once."""
    if S.is_empty():
        raise ValueError("distance to an empty subcomplex is undefined")
    points = K.sample_points if points is None else np.asarray(points, dtype=np.int64)
    return point_distances(K.vertices[points], K.vertices[S.vertices]).min(axis=1)


def dist_to(K, S, x):
    x = K.check_point(x)
    return float(distances_to(K, S, [x])[0])


def urysohn(K, A, B, points=None):
    """f = d(., A) / (d(., A) + d(., B)); 0 on A, 1 on B."""
    if A.is_empty() or B.is_empty():
        raise ValueError("urysohn needs two nonempty subcomplexes")
    common = np.intersect1d(A.vertices, B.vertices)
    if len(common):
        raise ValueError("subcomplexes intersect at sample point %d" % common[0])
    dA = distances_to(K, A, points)
    dB = distances_to(K, B, points)
    return dA / (dA + dB)
