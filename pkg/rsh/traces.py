import collections

import numpy as np

from matcalc import check_hermitian, eigvalsh, rank_threshold
from utils.tolerances import get_tolerances

TraceSamplePoint = collections.namedtuple('TraceSamplePoint', ['stage', 'point'])


def trace_samples(R):
    """Extreme trace samples: every sample point off the boundary, stage by stage."""
    samples = []
    for k, stage in enumerate(R.stages):
        on_boundary = stage.boundary.mask
        samples.extend(TraceSamplePoint(k, int(x)) for x in stage.base.sample_points if not on_boundary[x])
    return samples


def _snapped_spectrum(A):
    A = check_hermitian(A)
    lam = eigvalsh(A)
    scale = max(1.0, float(np.max(np.abs(lam)))) if lam.size else 1.0
    if lam.size and lam[0] < -get_tolerances().psd * scale:
        raise ValueError("d_tau needs a positive matrix (smallest eigenvalue %.3g)" % lam[0])
    return np.where(lam > rank_threshold(lam), lam, 0.0)


def d_tau_limit(A, halvings=12):
    """lim tr(A^(1/2^m)) / n from iterated square roots, Richardson-extrapolated in 2^-m."""
    lam = _snapped_spectrum(A)
    n = len(lam)
    traces = []
    root = lam.copy()
    for _ in range(halvings):
        root = np.sqrt(root)
        traces.append(root.sum() / n)
    # error terms are powers of 2^-m; eliminate the first two
    t0, t1, t2 = traces[-3:]
    r1, r2 = 2 * t1 - t0, 2 * t2 - t1
    return float((4 * r2 - r1) / 3), traces


def d_tau(a, tau, cross_check=True):
    """rank(a_k(x)) / n(k), cross-checked against the iterated square root limit."""
    A = a.fields[tau.stage].value(tau.point)
    lam = _snapped_spectrum(A)
    value = float(np.count_nonzero(lam)) / len(lam)
    if cross_check:
        limit, _ = d_tau_limit(A)
        if abs(limit - value) > 2 * get_tolerances().rank_rel:
            raise ValueError("d_tau at stage %d point %d: rank ratio %.8g and trace limit %.8g disagree"
                             % (tau.stage, tau.point, value, limit))
    return value
