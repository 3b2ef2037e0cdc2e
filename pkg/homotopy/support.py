import numpy as np

from matcalc import dagger, hermitize, min_eig, op_norm, rank_threshold
from utils.errors import RankBoundError
from utils.tolerances import get_tolerances
from .field import MatrixField


class WellSupportedField(object):
    """Positive field with nested constant-rank support projections on its rank strata.

    Arguments:
        base (MatrixField): the field b.
        strata (list): (closure Subcomplex, rank) pairs, ranks increasing.
        projections (list): MatrixField p_i supported on the points of each closure.
    """
    def __init__(self, base, strata, projections):
        self.base = base
        self.strata = list(strata)
        self.projections = list(projections)

    def check(self):
        """Nesting, support, rank and continuity checks; returns the worst defects found."""
        tol = get_tolerances()
        b = self.base
        worst_order, worst_support, worst_jump, bad_rank = np.inf, 0.0, 0.0, []
        lam, U = b.eig
        supp = hermitize((U * (lam > rank_threshold(lam)[:, None])[:, None, :]) @ dagger(U))
        for i, ((closure, rank), p) in enumerate(zip(self.strata, self.projections)):
            if np.any(p.ranks != rank):
                bad_rank.append(i)
            on_stratum = np.flatnonzero(b.ranks[b.positions[p.support]] == rank)
            if len(on_stratum):
                rows = b.positions[p.support[on_stratum]]
                worst_support = max(worst_support, float(np.max(np.abs(p.values[on_stratum] - supp[rows]))))
            # p_i must be continuous on its closure
            e = b.space.edges_within(p.support)
            if len(e):
                jumps = op_norm(p.values[p.positions[e[:, 0]]] - p.values[p.positions[e[:, 1]]])
                worst_jump = max(worst_jump, float(jumps.max()))
            for (closure_j, rank_j), q in zip(self.strata[i + 1:], self.projections[i + 1:]):
                common = np.intersect1d(p.support, q.support)
                if len(common):
                    diff = q.values[q.positions[common]] - p.values[p.positions[common]]
                    worst_order = min(worst_order, float(np.min(min_eig(diff))))
        return {
            'monotone_min_eig': worst_order if np.isfinite(worst_order) else 0.0,
            'support_defect': worst_support,
            'max_edge_jump': worst_jump,
            'constant_rank': not bad_rank,
            'passed': (not bad_rank and worst_support <= 1e3 * tol.herm
                       and worst_jump <= tol.frame_max_jump
                       and (not np.isfinite(worst_order) or worst_order >= -1e3 * tol.herm)),
        }

    def join(self):
        """Pointwise join of the p_i whose closure contains the point (0 where none)."""
        return self._extreme(largest=True)

    def meet(self, first):
        """Pointwise meet of p_i, i >= first, over closures containing the point (1 where none)."""
        return self._extreme(largest=False, first=first)

    def _extreme(self, largest, first=0):
        b = self.base
        N, n = len(b.support), b.n
        out = np.zeros((N, n, n), dtype=np.complex128) if largest else \
            np.broadcast_to(np.eye(n, dtype=np.complex128), (N, n, n)).copy()
        chosen = np.full(N, -1)
        order = range(first, len(self.projections))
        for i in order:
            p = self.projections[i]
            rows = b.positions[p.support]
            if largest:
                take = np.ones(len(rows), dtype=bool)
            else:
                take = chosen[rows] < 0
            out[rows[take]] = p.values[take]
            chosen[rows[take]] = i
        # the p_i are nested, so the join is the last one and the meet the first one
        return MatrixField(b.space, out, b.support), chosen


def _flags(a, b_lam, b_U, ranks):
    """Per-point orthonormal flag: support eigenvectors of b first, then the
    directions that neighbouring fibres of a add, strongest first."""
    N, n = len(a.support), a.n
    flags = np.empty((N, n, n), dtype=np.complex128)
    adj = a.space.adjacency
    pos = a.positions
    for row, x in enumerate(a.support):
        m = int(ranks[row])
        top = b_U[row][:, ::-1][:, :m]
        rest = b_U[row][:, ::-1][:, m:]
        nbrs = [pos[y] for y in adj[x] if pos[y] >= 0]
        local = a.values[[row] + nbrs].mean(axis=0)
        w_lam, w = np.linalg.eigh(hermitize(dagger(rest) @ local @ rest))
        flags[row, :, :m] = top
        flags[row, :, m:] = rest @ w[:, ::-1]
    return flags


def well_supported_approx(a, eta, declared_strata):
    """Well supported b <= a with ||b - a|| < eta on declared strata.

    ``declared_strata`` lists (closure Subcomplex, rank) pairs; every point must carry
    one of the declared ranks and lie in the closure of its stratum, and points of a
    closure may not exceed its rank.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    strata = sorted(((c, int(r)) for c, r in declared_strata), key=lambda s: s[1])
    ranks_declared = [r for _, r in strata]
    if len(set(ranks_declared)) != len(ranks_declared):
        raise ValueError("declared strata repeat a rank value")
    ranks = a.ranks
    for row, x in enumerate(a.support):
        r = int(ranks[row])
        if r not in ranks_declared:
            raise RankBoundError("rank %d at point %d is not a declared stratum" % (r, x), point=int(x))
        closure = strata[ranks_declared.index(r)][0]
        if not closure.mask[x]:
            raise RankBoundError("point %d has rank %d but lies outside that stratum's closure"
                                 % (x, r), point=int(x))
    for closure, r in strata:
        inside = closure.mask[a.support]
        over = np.flatnonzero(inside & (ranks > r))
        if len(over):
            x = int(a.support[over[0]])
            raise RankBoundError("closure of the rank-%d stratum contains point %d of rank %d"
                                 % (r, x, ranks[over[0]]), point=x)

    lam, U = a.eig
    keep = lam > rank_threshold(lam)[:, None]
    snapped = np.where(keep, lam, 0.0)
    b = MatrixField(a.space, hermitize((U * snapped[:, None, :]) @ dagger(U)), a.support)
    gap = float(np.max(np.abs(lam - snapped))) if lam.size else 0.0
    if gap >= eta:
        raise ValueError("eta %.3g is below the numerical noise floor %.3g" % (eta, gap))

    flags = _flags(a, lam, U, ranks)
    projections = []
    for closure, r in strata:
        points = a.support[closure.mask[a.support]]
        rows = a.positions[points]
        F = flags[rows][:, :, :r]
        projections.append(MatrixField(a.space, hermitize(F @ dagger(F)), points))
    return WellSupportedField(b, strata, projections)
