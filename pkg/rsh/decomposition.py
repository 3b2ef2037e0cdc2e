import collections

import numpy as np

from matcalc import dagger
from utils.tolerances import get_tolerances

ClutchBlock = collections.namedtuple('ClutchBlock', ['stage', 'point', 'multiplicity'])


class Stage(object):
    """One building block M_{n}(C(X)) of the iterated pullback.

    Arguments:
        base (SampledSpace): X_k.
        size (int): n(k).
        boundary (Subcomplex, optional): X_k^(0); empty when omitted.
        clutch (dict, optional): boundary point -> list of ClutchBlock.
        unitaries (dict, optional): boundary point -> u(y); missing or None means identity.
    """
    def __init__(self, base, size, boundary=None, clutch=None, unitaries=None):
        if int(size) <= 0:
            raise ValueError("stage size must be positive, got %r" % size)
        self.base = base
        self.size = int(size)
        self.boundary = base.empty() if boundary is None else boundary
        if self.boundary.parent is not base:
            raise ValueError("boundary is not a subcomplex of the stage base")
        self.clutch = {int(y): [ClutchBlock(int(b[0]), int(b[1]), int(b[2])) for b in blocks]
                       for y, blocks in (clutch or {}).items()}
        self.unitaries = {int(y): (None if u is None else np.asarray(u, dtype=np.complex128))
                          for y, u in (unitaries or {}).items()}

    def unitary(self, y):
        u = self.unitaries.get(int(y), None)
        return np.eye(self.size, dtype=np.complex128) if u is None else u

    def __repr__(self):
        return "Stage(size=%d, points=%d, boundary=%d)" % (
            self.size, self.base.n_points, len(self.boundary))


class RshDecomposition(object):
    """Iterated pullback of stage algebras along clutching maps in block-diagonal form."""
    def __init__(self, stages):
        self.stages = list(stages)
        if not self.stages:
            raise ValueError("a decomposition needs at least one stage")

    def __len__(self):
        return len(self.stages)

    @property
    def length(self):
        """Index l of the last stage."""
        return len(self.stages) - 1

    def truncate(self, k):
        if not 0 <= k < len(self.stages):
            raise ValueError("stage %d out of range [0, %d]" % (k, self.length))
        return RshDecomposition(self.stages[:k + 1])

    def size_function(self, k):
        stage = self.stages[k]
        return np.full(stage.base.n_points, stage.size, dtype=np.int64)

    def dimension_function(self, k):
        stage = self.stages[k]
        return np.full(stage.base.n_points, stage.base.dim, dtype=np.int64)

    def block_total(self, k, y):
        return sum(b.multiplicity * self.stages[b.stage].size for b in self.stages[k].clutch[y])

    def validate(self):
        """Check the decomposition; returns a report, never raises on failed checks."""
        tol = get_tolerances()
        checks = []

        def record(name, failures, margin=None):
            checks.append({'name': name, 'passed': not failures, 'margin': margin,
                           'witnesses': failures[:5]})

        record('stage0_boundary_empty',
               [] if self.stages[0].boundary.is_empty() else [{'stage': 0}])

        refs, fit, unit, cont = [], [], [], []
        worst_unit, worst_jump = 0.0, 0.0
        for k, stage in enumerate(self.stages):
            for y in stage.boundary.vertices:
                y = int(y)
                blocks = stage.clutch.get(y)
                if not blocks:
                    refs.append({'stage': k, 'point': y, 'reason': 'no clutch data'})
                    continue
                bad = [b for b in blocks if not (0 <= b.stage < k and b.multiplicity > 0
                                                 and 0 <= b.point < self.stages[b.stage].base.n_points)]
                if bad:
                    refs.append({'stage': k, 'point': y, 'reason': 'bad reference %s' % (tuple(bad[0]),)})
                    continue
                total = self.block_total(k, y)
                if total != stage.size:
                    fit.append({'stage': k, 'point': y, 'blocks': total, 'size': stage.size})
                u = stage.unitary(y)
                if u.shape != (stage.size, stage.size):
                    unit.append({'stage': k, 'point': y, 'shape': list(u.shape)})
                    continue
                defect = float(np.linalg.norm(u @ dagger(u) - np.eye(stage.size), ord=2))
                worst_unit = max(worst_unit, defect)
                if defect > 10 * tol.herm:
                    unit.append({'stage': k, 'point': y, 'defect': defect})
            for k_edge in stage.base.edges_within(stage.boundary.vertices):
                y, z = (int(v) for v in k_edge)
                by, bz = stage.clutch.get(y, []), stage.clutch.get(z, [])
                if [(b.stage, b.multiplicity) for b in by] != [(b.stage, b.multiplicity) for b in bz]:
                    cont.append({'stage': k, 'edge': [y, z], 'reason': 'block pattern changes'})
                    continue
                for b, c in zip(by, bz):
                    base = self.stages[b.stage].base
                    if b.point != c.point and c.point not in base.adjacency[b.point]:
                        cont.append({'stage': k, 'edge': [y, z], 'reason': 'referenced points jump'})
                        break
                uy, uz = stage.unitary(y), stage.unitary(z)
                if uy.shape == uz.shape:
                    jump = float(np.linalg.norm(uy - uz, ord=2))
                    worst_jump = max(worst_jump, jump)
                    if jump > tol.frame_max_jump:
                        cont.append({'stage': k, 'edge': [y, z], 'reason': 'unitary jumps by %.3g' % jump})

        record('clutch_references', refs)
        record('block_fit', fit)
        record('unitarity', unit, worst_unit)
        record('continuity', cont, worst_jump)
        return {'passed': all(c['passed'] for c in checks), 'checks': checks}

    def amplify(self, m):
        """Structure of M_m(R): sizes times m, same clutch blocks, unitaries u (x) 1_m."""
        m = int(m)
        if m <= 0:
            raise ValueError("amplification factor must be positive")
        eye = np.eye(m)
        stages = []
        for stage in self.stages:
            unitaries = {y: (None if u is None else np.kron(u, eye)) for y, u in stage.unitaries.items()}
            stages.append(Stage(stage.base, stage.size * m, stage.boundary, stage.clutch, unitaries))
        return RshDecomposition(stages)

    def __repr__(self):
        return "RshDecomposition(sizes=%s)" % [s.size for s in self.stages]


def sdg_ratio(system):
    """Dimension-to-size ratios max_j dim(X_j) / n(j) along a finite system.

    Returns a dict with the ratios, their tail maxima and the last tail maximum as the
    finite-length stand-in for the limit superior.
    """
    system = list(system)
    if not system:
        raise ValueError("sdg_ratio needs a nonempty list of decompositions")
    ratios = [max(s.base.dim / float(s.size) for s in R.stages) for R in system]
    tail = list(np.maximum.accumulate(ratios[::-1])[::-1])
    return {'ratios': [float(r) for r in ratios], 'tail_max': [float(t) for t in tail],
            'value': float(tail[-1])}
