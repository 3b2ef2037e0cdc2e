import numpy as np
import scipy.linalg

from homotopy import MatrixField
from matcalc import dagger, hermitize
from utils.tolerances import get_tolerances


class RshElement(object):
    """Positive element of an RSH model: one matrix field per stage."""
    def __init__(self, decomposition, fields):
        fields = list(fields)
        if len(fields) != len(decomposition):
            raise ValueError("%d fields for %d stages" % (len(fields), len(decomposition)))
        for k, (stage, a) in enumerate(zip(decomposition.stages, fields)):
            if a.space is not stage.base or a.n != stage.size:
                raise ValueError("field %d does not live on stage %d (size %d)" % (k, k, stage.size))
            if len(a.support) != stage.base.n_points:
                raise ValueError("field %d must be defined at every point of X_%d" % (k, k))
        self.decomposition = decomposition
        self.fields = fields

    def compatibility(self):
        """Largest pullback defect per stage at the boundary points."""
        defects = []
        for k in range(len(self.fields)):
            boundary = self.decomposition.stages[k].boundary.vertices
            if not len(boundary):
                defects.append(0.0)
                continue
            pushed = clutch_pushforward(self.decomposition, self, k)
            diff = self.fields[k].values[boundary] - pushed.values
            defects.append(float(np.max(np.linalg.norm(diff, ord=2, axis=(1, 2)))))
        return defects

    def is_valid(self):
        limit = 10 * get_tolerances().herm
        return all(d <= limit * max(1.0, f.norm) for d, f in zip(self.compatibility(), self.fields))

    def __len__(self):
        return len(self.fields)

    def __repr__(self):
        return "RshElement(stages=%d)" % len(self.fields)


def eval_at(a, k, x):
    if not 0 <= k < len(a.fields):
        raise ValueError("stage %d out of range [0, %d]" % (k, len(a.fields) - 1))
    return a.fields[k].value(x)


def restrict(a, k):
    """Image under the canonical surjection onto the first k + 1 stages."""
    return RshElement(a.decomposition.truncate(k), a.fields[:k + 1])


def clutch_pushforward(R, partial, stage):
    """Boundary field y -> u(y) blockdiag(evaluations, with multiplicity) u(y)* of ``stage``.

    ``partial`` needs fields for every stage the clutch of ``stage`` refers to.
    """
    if not 0 <= stage < len(R):
        raise ValueError("stage %d out of range [0, %d]" % (stage, R.length))
    target = R.stages[stage]
    fields = partial.fields if isinstance(partial, RshElement) else list(partial)
    boundary = target.boundary.vertices
    values = np.empty((len(boundary), target.size, target.size), dtype=np.complex128)
    for row, y in enumerate(boundary):
        blocks = target.clutch.get(int(y), [])
        for b in blocks:
            if b.stage >= stage or b.stage >= len(fields):
                raise ValueError("clutch of stage %d at point %d refers to stage %d, which is not "
                                 "available" % (stage, y, b.stage))
        mats = [fields[b.stage].value(b.point) for b in blocks for _ in range(b.multiplicity)]
        M = scipy.linalg.block_diag(*mats) if mats else np.zeros((0, 0))
        if M.shape != (target.size, target.size):
            raise ValueError("clutch blocks at point %d of stage %d fill %d of %d rows"
                             % (y, stage, M.shape[0], target.size))
        u = target.unitary(y)
        values[row] = hermitize(u @ M @ dagger(u))
    return MatrixField(target.base, values, boundary)


def identity_element(R):
    return RshElement(R, [MatrixField.constant(s.base, np.eye(s.size)) for s in R.stages])


def zero_element(R):
    return RshElement(R, [MatrixField.constant(s.base, np.zeros((s.size, s.size))) for s in R.stages])


def amplify_element(a, m, amplified=None):
    """a (x) 1_m in the amplified decomposition."""
    R = a.decomposition.amplify(m) if amplified is None else amplified
    eye = np.eye(int(m))
    fields = [MatrixField(f.space, np.stack([np.kron(v, eye) for v in f.values]), f.support)
              for f in a.fields]
    return RshElement(R, fields)
