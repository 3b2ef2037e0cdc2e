import numpy as np

from matcalc import dagger, eigh, hermitize, op_norm, rank_threshold, unitary_log
from metrics import RankBandMetrics
from utils.errors import IllPosedCutError, RankBoundError
from utils.tolerances import get_tolerances
from .field import (FieldPath, MatrixField, ProjectionField, concat_paths, constant_path,
                    lift_path, reverse_path, scale_path)
from .frames import find_trivial_subprojection, polar
from .spectral import peel_trivial_summand
from .support import well_supported_approx


def check_band(path, l, k, metrics=None, tag=None):
    """Band membership l <= rank <= k on every sampled slice of ``path``."""
    metrics = RankBandMetrics() if metrics is None else metrics
    for t, step in zip(path.times, path.steps):
        metrics.update(step.ranks, l, k, step.support, tag=tag or '%s@t=%.4g' % (path.name, t))
    return metrics.get_results()


def _require_band(a, l, k, what='field'):
    ranks = a.ranks
    bad = np.flatnonzero((ranks < l) | (ranks > k))
    if len(bad):
        x = int(a.support[bad[0]])
        raise RankBoundError("%s has rank %d outside [%d, %d] at point %d"
                             % (what, ranks[bad[0]], l, k, x), point=x)


def check_slack(space, n, l, k):
    if k > n:
        raise ValueError("upper rank %d exceeds the fiber size %d" % (k, n))
    if l < 0 or l > k:
        raise ValueError("rank band [%d, %d] is empty" % (l, k))
    if 4 * space.dim > k - l:
        raise ValueError("band [%d, %d] is too narrow: need k - l >= 4*dim = %d"
                         % (l, k, 4 * space.dim))


def _identity_minus(p):
    eye = np.eye(p.n, dtype=np.complex128)
    return MatrixField(p.space, hermitize(eye - p.values), p.support)


def sublevel_strata(a):
    """Rank strata of ``a`` with the sublevel sets {rank <= n_i} as their closures."""
    ranks = a.ranks
    mask = np.zeros(a.space.n_points, dtype=bool)
    strata = []
    for r in np.unique(ranks):
        mask[:] = False
        mask[a.support[ranks <= r]] = True
        strata.append((a.space.full_subcomplex(np.flatnonzero(mask)), int(r)))
    return strata


def raise_min_rank(a, l, k, T=None):
    """Homotopy in the band [l, k] ending at a field of rank >= l + dim everywhere.

    First move a onto a well supported b <= a along the straight line, then add a
    trivial projection: orthogonal to every support projection when all ranks stay
    at most l + 2 dim, below the high-rank support projections otherwise.
    """
    dim = a.space.dim
    check_slack(a.space, a.n, l, k)
    if l > dim:
        raise ValueError("raise_min_rank needs l <= dim (%d > %d); peel a trivial summand first"
                         % (l, dim))
    _require_band(a, l, k)
    ranks = a.ranks
    if not len(ranks) or np.all(ranks >= l + dim):
        return constant_path(a, T, 'raise_min_rank')

    lam = a.eig[0]
    positive = lam[lam > rank_threshold(lam)[:, None]]
    eta = 0.5 * float(positive.min()) if positive.size else 0.5
    ws = well_supported_approx(a, eta, sublevel_strata(a))
    b = ws.base
    A, B = a.values, b.values
    to_b = FieldPath(a, lambda t, rows: (1.0 - t) * A[rows] + t * B[rows], T, 'well_supported')

    if np.all(ranks <= l + 2 * dim):
        phi, _ = ws.join()
        p = find_trivial_subprojection(_identity_minus(phi), dim)
    else:
        first = next(i for i, (_, r) in enumerate(ws.strata) if r > l + 2 * dim)
        psi, _ = ws.meet(first)
        p = find_trivial_subprojection(psi, l + dim)
    P = p.values
    add = FieldPath(b, lambda t, rows: hermitize(B[rows] + t * P[rows]), T, 'add_projection')
    return concat_paths([to_b, add], 'raise_min_rank')


def _zero_projection(a):
    return ProjectionField(a.space, np.zeros((len(a.support), a.n, 0)), a.support,
                           {'method': 'empty', 'max_jump': 0.0})


def _normalize(cur, paths, T):
    if cur.norm > 1.0:
        path = scale_path(cur, cur.norm, T, 'normalize')
        paths.append(path)
        return path.end
    return cur


def _split_off(x, l, k, T):
    """Paths from x inside [l, k] to tilde + q with q a trivial rank-l projection
    orthogonal to tilde and tilde of rank >= dim."""
    dim = x.space.dim
    paths = []
    cur = _normalize(x, paths, T)

    if l <= dim:
        path = raise_min_rank(cur, l, k, T)
    else:
        path_p, p = peel_trivial_summand(cur, l, T)
        paths.append(path_p)
        cur = path_p.end
        r = p.rank
        rest = cur.values - p.values
        G = find_trivial_subprojection(_identity_minus(p), x.n - r).frame
        compressed = MatrixField(x.space, hermitize(dagger(G) @ rest @ G), x.support)
        inner = raise_min_rank(compressed, dim, k - r, T)
        path = lift_path(inner, G, p, 'lift(raise_min_rank)')
    paths.append(path)
    cur = _normalize(path.end, paths, T)

    if l == 0:
        q = _zero_projection(cur)
    else:
        path_q, q = peel_trivial_summand(cur, l + dim, T)
        paths.append(path_q)
        cur = path_q.end
    tilde = cur.values - q.values
    return paths, cur, hermitize(tilde), q


def _aligning_unitary(qa, qb):
    """Unitary field W with W ran(qa) = ran(qb).

    The direct rotation polar(Qb Qa + (1 - Qb)(1 - Qa)) when qa and qb are close
    enough, so its spectrum stays in the right half plane; otherwise built from
    global frames of the two projections and their complements.
    """
    Qa, Qb = qa.values, qb.values
    eye = np.eye(qa.n)
    U, smin = polar(Qb @ Qa + (eye - Qb) @ (eye - Qa))
    if not len(smin) or smin.min() >= get_tolerances().frame_min_singular:
        return U
    n, l = qa.n, qa.rank
    Ga = find_trivial_subprojection(_identity_minus(qa), n - l).frame
    Gb = find_trivial_subprojection(_identity_minus(qb), n - l).frame
    Fa = np.concatenate([qa.frame, Ga], axis=2)
    Fb = np.concatenate([qb.frame, Gb], axis=2)
    return Fb @ dagger(Fa)


def rotation_path(start, W, T=None):
    """t -> u(t) a u(t)* with u(t) = exp(itH), u(1) = W.

    H = unitary_log(W) on one branch for the whole field, so every slice is as
    continuous in x as W is; a branch cut crossed between neighbours raises.
    """
    if len(W) != len(start):
        raise ValueError("%d unitaries for %d support points" % (len(W), len(start)))
    H = unitary_log(W)
    e = start.local_edges
    if len(e):
        jumps = op_norm(H[e[:, 0]] - H[e[:, 1]])
        worst = int(np.argmax(jumps))
        if jumps[worst] > np.pi:
            x = int(start.support[e[worst, 0]])
            raise IllPosedCutError("the unitary field has no continuous logarithm: an eigenvalue "
                                   "winds across the branch cut next to point %d" % x,
                                   eigenvalue=float(jumps[worst]))
    lam, V = eigh(H)
    A = start.values

    def formula(t, rows):
        u = (V[rows] * np.exp(1j * t * lam[rows])[:, None, :]) @ dagger(V[rows])
        return hermitize(u @ A[rows] @ dagger(u))
    return FieldPath(start, formula, T, 'rotate')


def connect_in_band(a, b, l, k, T=None):
    """Path from a to b whose every slice has l <= rank <= k."""
    if not a.same_domain(b):
        raise ValueError("fields must share space, support and fiber size")
    check_slack(a.space, a.n, l, k)
    _require_band(a, l, k, 'start field')
    _require_band(b, l, k, 'end field')
    if np.array_equal(a.values, b.values):
        return constant_path(a, T, 'connect_in_band')

    paths_a, end_a, tilde_a, qa = _split_off(a, l, k, T)
    paths_b, end_b, tilde_b, qb = _split_off(b, l, k, T)
    Qb = qb.values

    middle = []
    if l > 0:
        rotate = rotation_path(end_a, _aligning_unitary(qa, qb), T)
        middle.append(rotate)
        cur = rotate.end
    else:
        cur = end_a
    C = hermitize(cur.values - Qb)
    middle.append(FieldPath(cur, lambda t, rows: hermitize((1.0 - t) * C[rows] + Qb[rows]),
                            T, 'contract'))
    pivot = middle[-1].end
    middle.append(FieldPath(pivot, lambda t, rows: hermitize(t * tilde_b[rows] + Qb[rows]),
                            T, 'expand'))
    back = [reverse_path(p) for p in reversed(paths_b)]
    return concat_paths(paths_a + middle + back, 'connect_in_band')
