import collections

import numpy as np

from matcalc import dagger, eigh, hermitize, op_norm
from utils.errors import MeshTooCoarseError, RankBoundError
from utils.tolerances import get_tolerances
from .field import ProjectionField


def polar(M):
    """Closest matrices with orthonormal columns, and the smallest singular value."""
    W, s, Vh = np.linalg.svd(M, full_matrices=False)
    smin = s[..., -1] if s.shape[-1] else np.ones(s.shape[:-1])
    return W @ Vh, smin


def _top_eigenvectors(M, r):
    _, U = eigh(hermitize(M))
    return U[..., ::-1][..., :r]


def _components(n_rows, edges):
    adj = [[] for _ in range(n_rows)]
    for i, j in edges:
        adj[i].append(int(j))
        adj[j].append(int(i))
    seen = np.zeros(n_rows, dtype=bool)
    orders = []
    for seed in range(n_rows):
        if seen[seed]:
            continue
        order, parent = [], {seed: None}
        queue = collections.deque([seed])
        seen[seed] = True
        while queue:
            x = queue.popleft()
            order.append(x)
            for y in sorted(adj[x]):
                if not seen[y]:
                    seen[y] = True
                    parent[y] = x
                    queue.append(y)
        orders.append((order, parent))
    return adj, orders


def _transport_frames(P, r, edges, relax_sweeps=10):
    """Parallel transport along a BFS tree, then least-squares alignment over all edges."""
    tol = get_tolerances()
    N = len(P)
    F = np.zeros((N,) + (P.shape[1], r), dtype=np.complex128)
    adj, orders = _components(N, edges)
    worst = np.inf
    for order, parent in orders:
        seed = order[0]
        F[seed] = _top_eigenvectors(P[seed], r)
        for x in order[1:]:
            F[x], smin = polar(P[x] @ F[parent[x]])
            worst = min(worst, float(smin))
            if smin < tol.frame_min_singular:
                raise MeshTooCoarseError("frame transport degenerates along an edge", point=x)
        for _ in range(relax_sweeps):
            for x in order:
                acc = F[x].copy()
                for z in adj[x]:
                    Q, _ = polar(dagger(F[z]) @ F[x])
                    acc += F[z] @ Q
                F[x], smin = polar(P[x] @ acc)
                if smin < tol.frame_min_singular:
                    raise MeshTooCoarseError("frame alignment degenerates", point=x)
    return F, worst


def find_trivial_subprojection(P, r):
    """Constant-rank r subprojection p <= P carried by a global orthonormal frame.

    First tries one reference frame for the whole field (top eigenvectors of the
    averaged projection, pushed into every fiber by polar decomposition); where that
    degenerates, falls back to transport along the mesh with alignment around loops.
    """
    tol = get_tolerances()
    r = int(r)
    N, n = len(P.support), P.n
    if r < 0 or r > n:
        raise ValueError("subprojection rank %d outside [0, %d]" % (r, n))
    if r == 0:
        return ProjectionField(P.space, np.zeros((N, n, 0)), P.support,
                               {'method': 'empty', 'max_jump': 0.0})
    short = np.flatnonzero(P.ranks < r)
    if len(short):
        x = int(P.support[short[0]])
        raise RankBoundError("projection has rank %d < %d at point %d"
                             % (P.ranks[short[0]], r, x), point=x)

    V = _top_eigenvectors(P.values.mean(axis=0), r)
    frame, smin = polar(P.values @ V)
    method, worst = 'reference', float(np.min(smin))
    if worst < tol.frame_min_singular:
        frame, worst = _transport_frames(P.values, r, P.local_edges)
        method = 'transport'

    p = ProjectionField(P.space, frame, P.support)
    e = P.local_edges
    jump = float(np.max(op_norm(p.values[e[:, 0]] - p.values[e[:, 1]]))) if len(e) else 0.0
    if jump > tol.frame_max_jump:
        x = int(P.support[e[np.argmax(op_norm(p.values[e[:, 0]] - p.values[e[:, 1]])), 0]])
        raise MeshTooCoarseError("subprojection jumps by %.3g across an edge" % jump, point=x)
    eye = np.eye(r)
    p.certificate.update({
        'method': method,
        'min_singular': worst,
        'max_jump': jump,
        'orthonormality': float(np.max(np.abs(dagger(frame) @ frame - eye))),
        'containment': float(np.max(np.linalg.norm(P.values @ p.values - p.values, ord=2, axis=(1, 2)))),
    })
    return p
