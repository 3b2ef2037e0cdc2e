import csv
import os

import numpy as np
from tqdm import tqdm

from bounds import discretize_to_chain
from extension import extend_envelopes
from metrics import MarginMeter, RankBandMetrics
from rsh import RshElement, TraceSamplePoint, clutch_pushforward, d_tau, trace_samples
from utils.errors import StageError
from utils.utils import mkdir
from .target import check_dimbound


def _bracket(ranks, n, h, eta):
    """Margins of (h - eta) <= rank / n <= h."""
    ratio = ranks / float(n)
    return ratio - (h - eta), h - ratio


def realize_rank(R, target, shells=None, rng=None, T=None, progress=False):
    """Element b of R with (h_k - eta_l) <= rank(b_k(x)) / n(k) <= h_k(x) everywhere.

    Stage 0 is built from scratch between the grid envelopes of h_0; every later stage
    takes its boundary values from the clutch and is extended over the rest of its
    base between the envelopes of h_j - eta_j and h_j.
    """
    dimbound = check_dimbound(R, target.eps)
    if not dimbound['passed']:
        bad = next(s for s in dimbound['stages'] if not s['passed'])
        raise ValueError("stage %d fails the dimension bound: %.6g <= %d"
                         % (bad['stage'], bad['lhs'], bad['rhs']))
    target.check(R)

    fields = []
    stages = tqdm(R.stages, desc='stages', leave=False) if progress else R.stages
    for j, stage in enumerate(stages):
        K, n = stage.base, stage.size
        lower, upper = target.bounds(j, n)
        g = discretize_to_chain(lower, K)
        f = discretize_to_chain(upper, K)
        boundary = clutch_pushforward(R, fields, j)
        ranks = boundary.ranks
        lo, hi = g.evaluate()[boundary.support], f.evaluate()[boundary.support]
        off = np.flatnonzero((ranks < lo) | (ranks > hi))
        if len(off):
            i = off[0]
            raise StageError("boundary rank %d at point %d of stage %d is outside [%d, %d]"
                             % (ranks[i], boundary.support[i], j, lo[i], hi[i]),
                             stage=j, point=int(boundary.support[i]))
        try:
            b = extend_envelopes(boundary, f, g, shells, rng, T)
        except (ValueError, RuntimeError) as e:
            raise StageError("stage %d: %s" % (j, e), stage=j, point=getattr(e, 'point', None))
        low, up = _bracket(b.ranks, n, target.values[j], target.etas[j])
        worst = np.flatnonzero((low < -1e-12) | (up < -1e-12))
        if len(worst):
            x = int(worst[0])
            raise StageError("stage %d misses its rank bracket at point %d (rank %d)"
                             % (j, x, b.ranks[x]), stage=j, point=x)
        fields.append(b)
    return RshElement(R, fields)


def verify_realization(R, b, target):
    """Pointwise check of |h - d_tau(b)| < eps and the final bracket; report only."""
    eta = target.eta
    meter = MarginMeter()
    band = RankBandMetrics()
    rows = []
    samples = set(trace_samples(R))
    stages = []
    d_tau_checks = 0
    for k, (stage, field) in enumerate(zip(R.stages, b.fields)):
        n, h = stage.size, target.values[k]
        ranks = field.ranks
        ratio = ranks / float(n)
        trace_margin = target.eps - np.abs(h - ratio)
        low, up = _bracket(ranks, n, h, eta)
        points = stage.base.sample_points
        on_trace = np.array([(k, int(x)) in samples for x in points], dtype=bool)
        if on_trace.any():
            meter.update('trace_%d' % k, trace_margin[on_trace], points[on_trace], tag='stage %d' % k)
        meter.update('lower_%d' % k, low, points, tag='stage %d' % k)
        meter.update('upper_%d' % k, up, points, tag='stage %d' % k)
        band.update(ranks, np.ceil(n * (h - eta) - 1e-9), np.floor(n * h + 1e-9), points, tag='stage %d' % k)
        mismatches = []
        for x in points[on_trace]:
            try:
                d_tau(b, TraceSamplePoint(k, int(x)))
            except ValueError:
                mismatches.append(int(x))
        d_tau_checks += int(on_trace.sum())
        entry = {'stage': k, 'n': n,
                 'lower_margin': meter.get_results('lower_%d' % k)['margin'],
                 'upper_margin': meter.get_results('upper_%d' % k)['margin'],
                 'd_tau_mismatches': mismatches}
        if on_trace.any():
            entry['trace_margin'] = meter.get_results('trace_%d' % k)['margin']
            entry['trace_witness'] = meter.get_results('trace_%d' % k)['point']
        entry['passed'] = bool(entry['lower_margin'] >= -1e-12 and entry['upper_margin'] >= -1e-12
                               and entry.get('trace_margin', 1.0) > 0 and not mismatches)
        stages.append(entry)
        for x in points:
            rows.append({'stage': k, 'coordinates': [float(c) for c in stage.base.vertices[x]],
                         'n': n, 'rank': int(ranks[x]), 'rank_over_n': float(ratio[x]),
                         'h': float(h[x]), 'margin': float(trace_margin[x])})
    return {'passed': all(s['passed'] for s in stages), 'eps': target.eps, 'eta': eta,
            'stages': stages, 'band': band.get_results(), 'd_tau_checks': d_tau_checks, 'rows': rows}


def write_rank_profile(report, csv_dir, name='rank_profile'):
    """One CSV per stage: stage, x0.., n, rank, rank_over_n, h, margin."""
    mkdir(csv_dir)
    by_stage = {}
    for row in report['rows']:
        by_stage.setdefault(row['stage'], []).append(row)
    paths = []
    for k, rows in sorted(by_stage.items()):
        coords = ['x%d' % i for i in range(len(rows[0]['coordinates']))]
        fieldnames = ['stage'] + coords + ['n', 'rank', 'rank_over_n', 'h', 'margin']
        path = os.path.join(csv_dir, '%s_stage%d.csv' % (name, k))
        with open(path, 'w', newline='') as file:
            writer = csv.DictWriter(file, fieldnames=fieldnames)
            writer.writeheader()
            for row in rows:
                out = {c: '%.12g' % v for c, v in zip(coords, row['coordinates'])}
                out.update({'stage': row['stage'], 'n': row['n'], 'rank': row['rank'],
                            'rank_over_n': '%.12g' % row['rank_over_n'], 'h': '%.12g' % row['h'],
                            'margin': '%.12g' % row['margin']})
                writer.writerow(out)
        paths.append(path)
    return paths
