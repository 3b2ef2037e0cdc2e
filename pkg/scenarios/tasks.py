"""Scenario operations.

Every op takes the Scenario as its first argument followed by the task's ``args``
and returns a result dict: passed, values, margins (name -> float) and witnesses.
Ops registered with ``stores=True`` also return the built object under 'element'.
"""
import inspect
import os
from fractions import Fraction

import numpy as np

import bounds
import extension
import homotopy
import matcalc
import metrics
import realize
import rsh as models
import space as spaces
from utils.tolerances import get_tolerances

TASKS = {}


def _task(anchor, refs=None, stores=False):
    def register(fn):
        fn.anchor = anchor
        fn.refs = dict(refs or {})
        fn.stores = stores
        fn.signature = inspect.signature(fn)
        TASKS[fn.__name__] = fn
        return fn
    return register


def _result(passed=True, values=None, margins=None, witnesses=None, **extra):
    out = {'passed': bool(passed), 'values': dict(values or {}), 'margins': dict(margins or {}),
           'witnesses': list(witnesses or [])}
    out.update(extra)
    return out


def _matrix_summary(A):
    lam = matcalc.eigvalsh(A)
    return {'rank': matcalc.ranks_from_eigenvalues(lam), 'norm': float(np.max(np.abs(lam))) if lam.size else 0.0,
            'eigenvalues': [float(v) for v in lam[::-1]]}


def _band_result(band, values=None, witnesses=None):
    margins = {'lower': band['lower_margin'], 'upper': band['upper_margin']}
    return _result(band['passed'], dict(values or {}, checked=band['checked'],
                                        min_rank=band['min_rank'], max_rank=band['max_rank']),
                   margins, list(witnesses or []) + band['witnesses'])


def _restriction_defect(a, b):
    """Largest entry change of b against a on the support of a."""
    if not len(a.support):
        return 0.0
    return float(np.max(np.abs(b.values[b.positions[a.support]] - a.values)))


def _start_defect(path, a):
    return float(np.max(np.abs(path.start.values - a.values))) if len(a.support) else 0.0


# space

@_task('Lemma 2.7 proof: barycentric subdivision of the sampled space', refs={'space': 'spaces'})
def subdivide(sc, space, r=1):
    K = sc.space(space)
    L = spaces.subdivide(K, int(r))
    return _result(L.mesh_width <= K.mesh_width or not len(K.edges),
                   {'n_points': L.n_points, 'dim': L.dim, 'mesh_width': L.mesh_width,
                    'mesh_ratio': L.mesh_width / K.mesh_width if K.mesh_width else 0.0})


@_task('Lemma 2.7 proof: distance from a sample point to a closed subset',
       refs={'space': 'spaces', 'subcomplex': 'subcomplexes'})
def dist_to(sc, space, subcomplex, point):
    K = sc.space(space)
    S = sc.subcomplex(subcomplex, K)
    d = spaces.dist_to(K, S, point)
    return _result(True, {'distance': d, 'inside': bool(S.mask[point])})


@_task('Prop. 2.8 proof: Urysohn function separating two disjoint closed subsets',
       refs={'space': 'spaces', 'A': 'subcomplexes', 'B': 'subcomplexes'})
def urysohn(sc, space, A, B):
    K = sc.space(space)
    SA, SB = sc.subcomplex(A, K), sc.subcomplex(B, K)
    u = spaces.urysohn(K, SA, SB)
    margins = {'zero_on_A': -float(np.max(np.abs(u[SA.vertices]))),
               'one_on_B': -float(np.max(np.abs(u[SB.vertices] - 1.0))),
               'range': float(min(u.min(), 1.0 - u.max()))}
    passed = margins['zero_on_A'] == 0.0 and margins['one_on_B'] == 0.0 and margins['range'] >= 0.0
    return _result(passed, {'min': float(u.min()), 'max': float(u.max())}, margins)


# matcalc

@_task('Lemma 2.2 proof: continuous functional calculus t -> max(t, 0)^power', refs={'field': 'fields'})
def func_calc(sc, field, point, power=0.5):
    A = sc.field(field).value(point)
    power = float(power)
    B = matcalc.func_calc(lambda lam: np.maximum(lam, 0.0) ** power, A)
    summary = _matrix_summary(B)
    return _result(matcalc.is_psd(B), summary)


@_task('Lemma 2.7 proof: positive-part cutdown (a - t)_+', refs={'field': 'fields'})
def cutdown(sc, field, point, t):
    A = sc.field(field).value(point)
    B = matcalc.cutdown(A, float(t))
    before, after = _matrix_summary(A), _matrix_summary(B)
    expected = int(np.sum(np.asarray(before['eigenvalues']) > float(t) + get_tolerances().gap))
    return _result(after['rank'] <= before['rank'] and matcalc.is_psd(B),
                   dict(after, expected_rank=expected))


@_task('Lemma 2.1: spectral projection onto eigenvalues above a cut', refs={'field': 'fields'})
def spectral_proj(sc, field, point, eta):
    P = matcalc.spectral_proj(sc.field(field).value(point), float(eta))
    defect = float(np.max(np.abs(P @ P - P))) if P.size else 0.0
    return _result(defect <= 1e3 * get_tolerances().herm,
                   {'rank': matcalc.rank_tol(P), 'idempotence_defect': defect})


@_task('Section 2: numerical rank under the tolerance policy', refs={'field': 'fields'})
def rank_tol(sc, field, point=None, tol_rank=None):
    a = sc.field(field)
    if point is not None:
        return _result(True, {'rank': matcalc.rank_tol(a.value(point), tol_rank)})
    ranks = matcalc.rank_tol(a.values, tol_rank)
    return _result(True, {'min_rank': int(np.min(ranks)), 'max_rank': int(np.max(ranks)),
                          'ranks': [int(r) for r in ranks]})


@_task('Lemma 2.2 proof: rank-preserving ramp f_s', refs={'field': 'fields'})
def ramp_apply(sc, field, point, s):
    A = sc.field(field).value(point)
    B = matcalc.ramp_apply(A, float(s))
    before, after = matcalc.rank_tol(A), matcalc.rank_tol(B)
    return _result(before == after, {'rank_before': before, 'rank_after': after,
                                     'norm': _matrix_summary(B)['norm']})


# bounds

@_task('Prop. 2.9: value of a semicontinuous rank bound', refs={'bound': 'bounds'})
def eval_bound(sc, bound, point):
    B = sc.bound(bound)
    return _result(True, {'value': bounds.eval_bound(B, point), 'kind': B.kind})


def _envelope(sc, space, polynomial, n, shift):
    K = sc.space(space)
    coef = np.atleast_1d(np.asarray(polynomial, dtype=np.float64))
    alpha = np.polynomial.polynomial.polyval(K.vertices[:, 0], coef) + float(shift)
    return K, alpha


@_task('Lemma 3.3: grid-valued lower semicontinuous minorant', refs={'space': 'spaces'})
def floor_env(sc, space, polynomial, n, shift=0.0):
    K, alpha = _envelope(sc, space, polynomial, n, shift)
    G = bounds.floor_env(alpha, n)
    gaps = [Fraction(float(a)) - G.fraction(x) for x, a in enumerate(alpha)]
    worst = int(np.argmax([float(g) for g in gaps]))
    passed = all(0 < g <= Fraction(1, n) for g in gaps)
    return _result(passed, {'min_numerator': int(G.numerators.min()), 'max_numerator': int(G.numerators.max())},
                   {'strict_below': float(min(gaps)), 'within_step': float(Fraction(1, n) - max(gaps))},
                   [] if passed else [{'point': worst}])


@_task('Lemma 3.3: grid-valued upper semicontinuous majorant', refs={'space': 'spaces'})
def ceil_env(sc, space, polynomial, n, shift=0.0):
    K, alpha = _envelope(sc, space, polynomial, n, shift)
    G = bounds.ceil_env(alpha, n)
    gaps = [G.fraction(x) - Fraction(float(a)) for x, a in enumerate(alpha)]
    worst = int(np.argmax([float(g) for g in gaps]))
    passed = all(0 < g <= Fraction(1, n) for g in gaps)
    return _result(passed, {'min_numerator': int(G.numerators.min()), 'max_numerator': int(G.numerators.max())},
                   {'strict_above': float(min(gaps)), 'within_step': float(Fraction(1, n) - max(gaps))},
                   [] if passed else [{'point': worst}])


@_task('Prop. 2.9 proof: grid function as a chain of closed level sets', refs={'space': 'spaces'})
def discretize_to_chain(sc, space, polynomial, n, envelope='floor', shift=0.0):
    K, alpha = _envelope(sc, space, polynomial, n, shift)
    G = {'floor': bounds.floor_env, 'ceil': bounds.ceil_env}[envelope](alpha, n)
    chain = bounds.discretize_to_chain(G, K)
    return _result(bool(np.array_equal(chain.evaluate(), G.numerators)),
                   {'kind': chain.kind, 'values': list(chain.values),
                    'level_sizes': [len(level) for level in chain.levels]})


# homotopy

@_task('Lemma 2.1: uniform spectral gap below a lower rank bound',
       refs={'field': 'fields', 'bound': 'bounds'})
def find_uniform_gap(sc, field, bound):
    a, g = sc.field(field), sc.bound(bound)
    eta = homotopy.find_uniform_gap(a, g)
    need = g.evaluate()[a.support]
    lam = a.eig[0]
    worst, witness = np.inf, None
    for cut in (eta, eta / 2.0, eta / 10.0):
        counts = np.sum(lam > cut, axis=-1)
        i = int(np.argmin(counts - need))
        if counts[i] - need[i] < worst:
            worst, witness = int(counts[i] - need[i]), {'point': int(a.support[i]), 'cut': cut}
    return _result(worst >= 0, {'eta': eta}, {'rank_above_cut': worst},
                   [] if worst >= 0 else [witness])


def _path_T(T):
    return None if T is None else int(T)


@_task('Lemma 2.2: spectrum flattening keeping every rank', refs={'field': 'fields'})
def flatten_spectrum(sc, field, eta=None, T=None):
    a = sc.field(field)
    if eta is None:
        eta = homotopy.find_uniform_gap(a, bounds.BoundChain.constant(a.space, bounds.USC_LOWER, 0))
    path = homotopy.flatten_spectrum(a, float(eta), _path_T(T))
    band = metrics.RankBandMetrics()
    for t, step in zip(path.times, path.steps):
        band.update(step.ranks, a.ranks, a.ranks, step.support, tag='t=%.4g' % t)
    out = _band_result(band.get_results(), {'eta': float(eta), 'slices': len(path.times),
                                            'step_gap': path.step_gap})
    out['margins']['start'] = -_start_defect(path, a)
    out['passed'] = out['passed'] and out['margins']['start'] == 0.0
    return out


@_task('Lemma 2.2 proof: trivial subprojection of a spectral projection', refs={'field': 'fields'})
def find_trivial_subprojection(sc, field, eta, rank):
    a = sc.field(field)
    P = homotopy.MatrixField(a.space, matcalc.spectral_proj(a.values, float(eta)), a.support)
    p = homotopy.find_trivial_subprojection(P, int(rank))
    cert = p.certificate
    values = {k: cert[k] for k in ('method', 'min_singular', 'max_jump', 'orthonormality', 'containment')
              if k in cert}
    passed = bool(np.all(p.ranks == int(rank))) and cert.get('containment', 0.0) <= 1e-8
    return _result(passed, values, {'containment': -cert.get('containment', 0.0)})


@_task('Lemma 2.2: trivial summand split off by spectral flattening', refs={'field': 'fields'})
def peel_trivial_summand(sc, field, k, T=None):
    a = sc.field(field)
    path, p = homotopy.peel_trivial_summand(a, int(k), _path_T(T))
    need = max(int(k) - a.space.dim, 0)
    cert = p.certificate
    passed = (cert['summand_defect'] <= 1e-8 and bool(np.all(p.ranks >= need))
              and _start_defect(path, a) == 0.0)
    return _result(passed, {'rank': int(p.ranks.min()) if len(p.ranks) else 0, 'eta': cert['eta'],
                            'method': cert['method']},
                   {'summand': 1e-8 - cert['summand_defect'],
                    'rank': (int(p.ranks.min()) if len(p.ranks) else need) - need})


@_task('Definition 2.3: well supported approximation on declared rank strata',
       refs={'field': 'fields'})
def well_supported_approx(sc, field, eta, strata=None):
    a = sc.field(field)
    if strata is None:
        declared = homotopy.sublevel_strata(a)
    else:
        declared = [(sc.subcomplex(s['subcomplex'], a.space), int(s['rank'])) for s in strata]
    ws = homotopy.well_supported_approx(a, float(eta), declared)
    report = ws.check()
    distance = float(np.max(matcalc.op_norm(ws.base.values - a.values))) if len(a.support) else 0.0
    return _result(report['passed'] and distance < float(eta),
                   {'strata': [int(r) for _, r in ws.strata], 'distance': distance,
                    'max_edge_jump': report['max_edge_jump']},
                   {'monotone_min_eig': report['monotone_min_eig'],
                    'support_defect': -report['support_defect'],
                    'edge_jump': get_tolerances().frame_max_jump - report['max_edge_jump'],
                    'distance': float(eta) - distance})


@_task('Lemma 2.4: homotopy in the rank band raising the minimum rank', refs={'field': 'fields'})
def raise_min_rank(sc, field, l, k, T=None):
    a = sc.field(field)
    path = homotopy.raise_min_rank(a, int(l), int(k), _path_T(T))
    band = homotopy.check_band(path, int(l), int(k))
    floor = int(l) + a.space.dim
    end_min = int(path.end.ranks.min()) if len(path.support) else floor
    out = _band_result(band, {'end_min_rank': end_min, 'slices': len(path.times)})
    out['margins'].update({'end_rank': end_min - floor, 'start': -_start_defect(path, a)})
    out['passed'] = out['passed'] and end_min >= floor and out['margins']['start'] == 0.0
    return out


@_task('Prop. 2.5: path between two fields inside the rank band', refs={'field': 'fields', 'other': 'fields'})
def connect_in_band(sc, field, other, l, k, T=None):
    a, b = sc.field(field), sc.field(other)
    path = homotopy.connect_in_band(a, b, int(l), int(k), _path_T(T))
    band = homotopy.check_band(path, int(l), int(k))
    end = float(np.max(matcalc.op_norm(path.end.values - b.values))) if len(b.support) else 0.0
    out = _band_result(band, {'slices': len(path.times), 'end_defect': end})
    out['margins'].update({'start': -_start_defect(path, a), 'end': -end})
    out['passed'] = out['passed'] and out['margins']['start'] == 0.0 and end <= 1e3 * get_tolerances().herm
    return out


# extension

@_task('Lemma 2.7 proof: nearest-point extension from a closed subset', refs={'field': 'fields'})
def extend_nearest(sc, field):
    a = sc.field(field)
    b = extension.extend_nearest(a)
    defect = _restriction_defect(a, b)
    return _result(defect == 0.0, {'n_points': len(b.support)}, {'restriction': -defect})


def _bounds_result(b, a, fv, gv, values=None):
    band = metrics.RankBandMetrics()
    band.update(b.ranks, gv[b.support], fv[b.support], b.support)
    out = _band_result(band.get_results(), values)
    defect = _restriction_defect(a, b)
    out['margins']['restriction'] = -defect
    out['passed'] = out['passed'] and defect == 0.0
    return out


@_task('Lemma 2.7: local extension to a neighbourhood within semicontinuous bounds',
       refs={'field': 'fields', 'f': 'bounds', 'g': 'bounds'})
def extend_local(sc, field, f, g, shells=None):
    a, F, G = sc.field(field), sc.bound(f), sc.bound(g)
    U, b = extension.extend_local(a, F, G, None if shells is None else int(shells))
    return _bounds_result(b, a, F.evaluate(), G.evaluate(),
                          {'neighbourhood': len(U), 'new_points': len(U) - len(a.support),
                           'omega': float(b.omega)})


@_task('Prop. 2.8: extension within a constant rank band', refs={'field': 'fields'})
def extend_band(sc, field, l, k, rotate=False, shells=None, T=None):
    a = sc.field(field)
    rng = sc.rng(10 ** 6) if rotate else None
    b = extension.extend_band(a, int(l), int(k), None if shells is None else int(shells),
                              rng=rng, T=_path_T(T))
    n_points = a.space.n_points
    return _bounds_result(b, a, np.full(n_points, int(k)), np.full(n_points, int(l)),
                          {'n_points': len(b.support), 'omega': float(b.omega)})


@_task('Prop. 2.9: extension between semicontinuous envelopes',
       refs={'field': 'fields', 'f': 'bounds', 'g': 'bounds'})
def extend_envelopes(sc, field, f, g, rotate=False, shells=None, T=None):
    a, F, G = sc.field(field), sc.bound(f), sc.bound(g)
    rng = sc.rng(10 ** 6) if rotate else None
    b = extension.extend_envelopes(a, F, G, None if shells is None else int(shells), rng, _path_T(T))
    return _bounds_result(b, a, F.evaluate(), G.evaluate(), {'n_points': len(b.support),
                                                             'omega': float(b.omega)})


# rsh

@_task('Section 3: consistency of an iterated pullback model', refs={'rsh': 'rsh'})
def validate(sc, rsh):
    R = sc.decomposition(rsh)
    report = R.validate()
    margins = {c['name']: c['margin'] for c in report['checks'] if c['margin'] is not None}
    witnesses = [dict(w, check=c['name']) for c in report['checks'] for w in c['witnesses']]
    return _result(report['passed'], {'checks': {c['name']: c['passed'] for c in report['checks']},
                                      'sizes': [int(R.size_function(k)[0]) for k in range(len(R))],
                                      'dims': [int(R.dimension_function(k)[0]) for k in range(len(R))]},
                   margins, witnesses)


@_task('Section 3 (vii): point evaluation of an element', refs={'element': 'elements'})
def eval_at(sc, element, stage, point):
    A = models.eval_at(sc.element(element), int(stage), int(point))
    return _result(matcalc.is_psd(A), dict(_matrix_summary(A), trace=float(np.trace(A).real)))


@_task('Remark 3.1: canonical surjection onto the first stages', refs={'element': 'elements'})
def restrict(sc, element, stage):
    b = models.restrict(sc.element(element), int(stage))
    return _result(b.is_valid(), {'stages': len(b)}, {'compatibility': -max(b.compatibility())})


@_task('Theorem 3.4 proof: boundary values prescribed by the clutching map', refs={'element': 'elements'})
def clutch_pushforward(sc, element, stage):
    a = sc.element(element)
    pushed = models.clutch_pushforward(a.decomposition, a, int(stage))
    own = a.fields[int(stage)]
    defect = float(np.max(matcalc.op_norm(own.values[pushed.support] - pushed.values))) \
        if len(pushed.support) else 0.0
    return _result(defect <= 10 * get_tolerances().herm * max(1.0, own.norm),
                   {'points': [int(y) for y in pushed.support], 'ranks': [int(r) for r in pushed.ranks]},
                   {'compatibility': -defect})


@_task('Theorem 3.4 proof: dimension function at an extreme trace', refs={'element': 'elements'})
def d_tau(sc, element, stage, point):
    a = sc.element(element)
    tau = models.TraceSamplePoint(int(stage), int(point))
    value = models.d_tau(a, tau, cross_check=False)
    limit, _ = models.d_tau_limit(a.fields[tau.stage].value(tau.point))
    gap = abs(limit - value)
    return _result(gap <= 2 * get_tolerances().rank_rel, {'value': value, 'trace_limit': limit},
                   {'agreement': 2 * get_tolerances().rank_rel - gap})


@_task('Definition 3.2: dimension growth ratio along a system of models', refs={'system': 'rsh'})
def sdg_ratio(sc, system):
    out = models.sdg_ratio([sc.decomposition(name) for name in system])
    return _result(True, {'ratios': out['ratios'], 'tail_max': out['tail_max'], 'value': out['value']})


@_task('Section 3 (vi): matrix amplification of a model and its elements',
       refs={'rsh': 'rsh', 'element': 'elements'}, stores=True)
def amplify(sc, rsh, m, element=None):
    R = sc.decomposition(rsh)
    Rm = R.amplify(int(m))
    report = Rm.validate()
    values = {'sizes': [s.size for s in Rm.stages], 'valid': report['passed']}
    if element is None:
        return _result(report['passed'], values, element=models.identity_element(Rm))
    a = sc.element(element)
    am = models.amplify_element(a, int(m), Rm)
    worst = 0.0
    for k, (f, g) in enumerate(zip(a.fields, am.fields)):
        if len(f.support):
            worst = max(worst, float(np.max(np.abs(f.ranks / float(f.n) - g.ranks / float(g.n)))))
    return _result(report['passed'] and am.is_valid() and worst == 0.0, values,
                   {'d_tau_change': -worst}, element=am)


@_task('Section 3: identity element of a model', refs={'rsh': 'rsh'}, stores=True)
def identity_element(sc, rsh):
    a = models.identity_element(sc.decomposition(rsh))
    return _result(a.is_valid(), {'stages': len(a)}, element=a)


@_task('Section 3: zero element of a model', refs={'rsh': 'rsh'}, stores=True)
def zero_element(sc, rsh):
    a = models.zero_element(sc.decomposition(rsh))
    return _result(a.is_valid(), {'stages': len(a)}, element=a)


# realize

def _stage_margins(report, key):
    return {'stage_%d' % s['stage']: s[key] for s in report['stages']}


@_task('Theorem 3.4 (dimbound): dimension bound (eps / 4) n > 4 dim + 4', refs={'rsh': 'rsh'})
def check_dimbound(sc, rsh, eps):
    report = realize.check_dimbound(sc.decomposition(rsh), float(eps))
    witnesses = [{'stage': s['stage'], 'lhs': s['lhs'], 'rhs': s['rhs']}
                 for s in report['stages'] if not s['passed']]
    return _result(report['passed'], {'margin': report['margin']},
                   _stage_margins(report, 'margin'), witnesses)


@_task('Theorem 3.4 proof: room between the target envelopes', refs={'target': 'targets'})
def envelope_slack(sc, target):
    T = sc.target(target)
    report = realize.envelope_slack(sc.decomposition(T.rsh), T)
    witnesses = [{'stage': s['stage'], 'point': s['point'], 'slack': s['min_slack'], 'needed': s['needed']}
                 for s in report['stages'] if not s['passed']]
    return _result(report['passed'], {'min_slack': [s['min_slack'] for s in report['stages']]},
                   _stage_margins(report, 'margin'), witnesses)


@_task('Theorem 3.4: element realizing a target rank profile', refs={'target': 'targets'}, stores=True)
def realize_rank(sc, target, rotate=False, shells=None, T=None):
    profile = sc.target(target)
    R = sc.decomposition(profile.rsh)
    rng = sc.rng(10 ** 6 + 1) if rotate else None
    b = realize.realize_rank(R, profile, None if shells is None else int(shells), rng, _path_T(T))
    ranks = [[int(f.ranks.min()), int(f.ranks.max())] for f in b.fields]
    return _result(b.is_valid(), {'stages': len(b), 'rank_range': ranks,
                                  'omega': [float(f.omega) for f in b.fields]},
                   {'compatibility': -max(b.compatibility())}, element=b)


@_task('Theorem 3.4 (toprove): pointwise accuracy of a realized rank profile',
       refs={'target': 'targets', 'element': 'elements'})
def verify_realization(sc, target, element, csv_name=None):
    profile = sc.target(target)
    R = sc.decomposition(profile.rsh)
    report = realize.verify_realization(R, sc.element(element), profile)
    margins = {}
    witnesses = list(report['band']['witnesses'])
    for s in report['stages']:
        margins['lower_%d' % s['stage']] = s['lower_margin']
        margins['upper_%d' % s['stage']] = s['upper_margin']
        if 'trace_margin' in s:
            margins['trace_%d' % s['stage']] = s['trace_margin']
            if s['trace_margin'] <= 0:
                witnesses.append({'stage': s['stage'], 'point': s['trace_witness']})
        witnesses.extend({'stage': s['stage'], 'point': x, 'reason': 'd_tau disagreement'}
                         for x in s['d_tau_mismatches'])
    values = {'eps': report['eps'], 'eta': report['eta'], 'rows': len(report['rows']),
              'd_tau_checks': report['d_tau_checks']}
    if sc.csv_dir:
        paths = realize.write_rank_profile(report, sc.csv_dir, csv_name or 'rank_profile')
        values['csv'] = [os.path.basename(p) for p in paths]
    return _result(report['passed'], values, margins, witnesses)
