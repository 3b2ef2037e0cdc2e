import time

import numpy as np

from .tasks import TASKS

FLOAT_TOL = 1e-9


def _matches(got, want):
    if isinstance(want, dict):
        if got is None or isinstance(got, (bool, str, list, dict)):
            return False
        got = float(got)
        if 'approx' in want:
            return abs(got - float(want['approx'])) <= float(want.get('tol', FLOAT_TOL)) * max(1.0, abs(float(want['approx'])))
        return float(want.get('min', -np.inf)) <= got <= float(want.get('max', np.inf))
    if isinstance(want, bool) or isinstance(got, bool) or want is None or isinstance(want, str):
        return got == want
    if isinstance(want, list):
        return isinstance(got, (list, tuple)) and len(got) == len(want) and \
            all(_matches(g, w) for g, w in zip(got, want))
    if got is None or isinstance(got, (str, list, dict)):
        return False
    return abs(float(got) - float(want)) <= FLOAT_TOL * max(1.0, abs(float(want)))


def check_expect(result, expect, error=None):
    """Mismatches between a task outcome and its ``expect`` mapping.

    ``error: Name`` asks for an exception whose class (or a base class) is Name; any
    other key is looked up in passed, values, then margins. Without ``passed`` in
    ``expect`` the task has to pass its own checks.
    """
    mismatches = []
    if 'error' in expect:
        names = [c.__name__ for c in type(error).__mro__] if error is not None else []
        if expect['error'] not in names:
            mismatches.append({'key': 'error', 'expected': expect['error'],
                               'got': type(error).__name__ if error is not None else None})
        return mismatches
    if error is not None:
        return [{'key': 'error', 'expected': None, 'got': type(error).__name__}]
    expect = dict(expect)
    expect.setdefault('passed', True)
    for key, want in expect.items():
        if key == 'passed':
            got = result['passed']
        elif key in result['values']:
            got = result['values'][key]
        elif key in result['margins']:
            got = result['margins'][key]
        else:
            mismatches.append({'key': key, 'expected': want, 'got': 'missing'})
            continue
        if not _matches(got, want):
            mismatches.append({'key': key, 'expected': want, 'got': got})
    return mismatches


def run_task(sc, task):
    """Run one validated task; never raises for failures of the operation itself."""
    fn = TASKS[task['op']]
    start = time.perf_counter()
    result, error = None, None
    try:
        result = fn(sc, **task['args'])
    except (ValueError, RuntimeError, ArithmeticError) as e:
        error = e
    elapsed = time.perf_counter() - start

    if result is not None and 'element' in result:
        element = result.pop('element')
        if task.get('store'):
            sc.elements[task['store']] = element
    mismatches = check_expect(result, task['expect'], error)
    entry = {'id': task['id'], 'op': task['op'], 'anchor': fn.anchor,
             'status': 'pass' if not mismatches else ('error' if error is not None and 'error' not in task['expect']
                                                      else 'fail')}
    if result is not None:
        entry['passed'] = result['passed']
        entry['margins'] = [{'name': k, 'value': v} for k, v in result['margins'].items()]
        entry['witnesses'] = result['witnesses']
        entry['values'] = result['values']
    else:
        entry['margins'] = []
        witness = {k: getattr(error, k) for k in ('stage', 'point', 'eigenvalue')
                   if getattr(error, k, None) is not None}
        entry['witnesses'] = [witness] if witness else []
    if error is not None:
        entry['error'] = '%s: %s' % (type(error).__name__, error)
    if mismatches:
        entry['mismatches'] = mismatches
    entry['elapsed'] = elapsed
    return entry
