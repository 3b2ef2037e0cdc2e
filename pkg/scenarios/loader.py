import os

import numpy as np
import scipy.linalg
import yaml
from scipy.stats import unitary_group

from bounds import BoundChain, LSC_UPPER, USC_LOWER, ceil_env, discretize_to_chain, floor_env
from homotopy import MatrixField
from matcalc import dagger, hermitize, matrix_from_record
from realize import TargetProfile
from rsh import RshDecomposition, Stage, identity_element, zero_element
from space import SampledSpace, refine_subcomplex, subdivide
from utils.errors import ScenarioError
from utils.tolerances import Tolerances, set_tolerances
from .tasks import TASKS
from .utils import file_digest

SECTIONS = ('seed', 'tolerances', 'spaces', 'fields', 'bounds', 'rsh', 'targets', 'elements', 'tasks')
TASK_KEYS = ('id', 'op', 'args', 'expect', 'store')
FIELD_GENERATORS = ('spectrum', 'random', 'constant', 'literal')
SINGULAR = {'spaces': 'space', 'subcomplexes': 'subcomplex', 'fields': 'field', 'bounds': 'bound',
            'rsh': 'rsh model', 'targets': 'target', 'elements': 'element'}


def _mapping(value, where):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ScenarioError("expected a mapping, got %s" % type(value).__name__, where)
    return value


def _require(spec, key, where):
    if key not in spec:
        raise ScenarioError("missing key '%s'" % key, where)
    return spec[key]


def _unknown(spec, allowed, where):
    extra = sorted(set(spec) - set(allowed))
    if extra:
        raise ScenarioError("unknown keys %s (allowed: %s)" % (extra, ', '.join(allowed)), where)


def parse_yaml(text, source='<string>'):
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        location = '%s:%d:%d' % (source, mark.line + 1, mark.column + 1) if mark else source
        raise ScenarioError(str(getattr(e, 'problem', None) or e), location)
    return _mapping(data, source)


class Scenario(object):
    """Named objects of a scenario file plus the ordered task list.

    Arguments:
        data (dict): parsed YAML document.
        source (str): file name used in error locations and the report header.
        sha256 (str, optional): digest of the scenario file.
        seed (int, optional): overrides the scenario's ``seed``.
        tolerances (list, optional): ``name=value`` overrides applied after the scenario's own.
    """
    def __init__(self, data, source='<string>', sha256=None, seed=None, tolerances=None):
        data = _mapping(data, source)
        _unknown(data, SECTIONS, source)
        self.source = source
        self.sha256 = sha256
        self.seed = int(seed if seed is not None else data.get('seed', 0) or 0)
        if self.seed < 0:
            raise ScenarioError("seed must be nonnegative, got %d" % self.seed, 'seed')

        overrides = dict(_mapping(data.get('tolerances'), 'tolerances'))
        for text in tolerances or []:
            try:
                name, value = Tolerances.parse_override(text)
            except ValueError as e:
                raise ScenarioError(str(e), '--tolerance')
            overrides[name] = value
        try:
            self.tolerances = set_tolerances(Tolerances(**overrides))
        except ValueError as e:
            raise ScenarioError(str(e), 'tolerances')

        self.spaces, self.subcomplexes = {}, {}
        for name, spec in _mapping(data.get('spaces'), 'spaces').items():
            self._build_space(name, _mapping(spec, 'spaces.%s' % name))
        self.fields = {}
        for i, (name, spec) in enumerate(_mapping(data.get('fields'), 'fields').items()):
            self.fields[name] = self._build_field(name, _mapping(spec, 'fields.%s' % name), i)
        self.bounds = {}
        for name, spec in _mapping(data.get('bounds'), 'bounds').items():
            self.bounds[name] = self._build_bound(name, _mapping(spec, 'bounds.%s' % name))
        self.rsh = {}
        for name, spec in _mapping(data.get('rsh'), 'rsh').items():
            self.rsh[name] = self._build_rsh(name, _mapping(spec, 'rsh.%s' % name))
        self.targets = {}
        for name, spec in _mapping(data.get('targets'), 'targets').items():
            self.targets[name] = self._build_target(name, _mapping(spec, 'targets.%s' % name))
        self.elements = {}
        for name, spec in _mapping(data.get('elements'), 'elements').items():
            self.elements[name] = self._build_element(name, _mapping(spec, 'elements.%s' % name))

        tasks = data.get('tasks') or []
        if not isinstance(tasks, list):
            raise ScenarioError("tasks must be a list", 'tasks')
        self.tasks = self._check_tasks(tasks)
        self.csv_dir = None

    def rng(self, *key):
        """Generator keyed by the seed and ``key``; independent of evaluation order."""
        return np.random.default_rng([self.seed] + [int(k) for k in key])

    # spaces

    def _build_space(self, name, spec):
        where = 'spaces.%s' % name
        _unknown(spec, ('vertices', 'simplices', 'subdivide', 'subcomplexes'), where)
        try:
            vertices = np.asarray(_require(spec, 'vertices', where), dtype=np.float64)
            if vertices.ndim == 1:
                vertices = vertices.reshape(-1, 1)
            root = SampledSpace.from_simplices(vertices, _require(spec, 'simplices', where))
            K = subdivide(root, int(spec.get('subdivide', 0)))
        except (TypeError, ValueError) as e:
            raise ScenarioError(str(e), where)
        self.spaces[name] = K
        for sub, sub_spec in _mapping(spec.get('subcomplexes'), where + '.subcomplexes').items():
            sub_where = '%s.subcomplexes.%s' % (where, sub)
            sub_spec = _mapping(sub_spec, sub_where)
            _unknown(sub_spec, ('simplices', 'vertices'), sub_where)
            if sub in self.subcomplexes:
                raise ScenarioError("subcomplex '%s' is defined twice" % sub, sub_where)
            try:
                if 'vertices' in sub_spec:
                    S = root.full_subcomplex(sub_spec['vertices'])
                else:
                    S = root.subcomplex(_require(sub_spec, 'simplices', sub_where))
                self.subcomplexes[sub] = refine_subcomplex(S, K)
            except (TypeError, ValueError) as e:
                raise ScenarioError(str(e), sub_where)

    def space(self, name, where='space'):
        if name not in self.spaces:
            raise ScenarioError("unknown space '%s'" % name, where)
        return self.spaces[name]

    def subcomplex(self, name, space=None, where='subcomplex'):
        if name not in self.subcomplexes:
            raise ScenarioError("unknown subcomplex '%s'" % name, where)
        S = self.subcomplexes[name]
        if space is not None and S.parent is not space:
            raise ScenarioError("subcomplex '%s' does not live on the expected space" % name, where)
        return S

    # fields

    def _build_field(self, name, spec, index):
        where = 'fields.%s' % name
        K = self.space(_require(spec, 'space', where), where + '.space')
        generator = spec.get('generator', 'spectrum')
        if generator not in FIELD_GENERATORS:
            raise ScenarioError("unknown generator '%s' (known: %s)" % (generator, ', '.join(FIELD_GENERATORS)),
                                where + '.generator')
        support = K.sample_points
        if spec.get('support') is not None:
            support = self.subcomplex(spec['support'], K, where + '.support').vertices
        rng = self.rng(index)
        try:
            values = getattr(self, '_%s_values' % generator)(K, support, spec, rng, where)
            return MatrixField(K, values, support)
        except ScenarioError:
            raise
        except (TypeError, ValueError) as e:
            raise ScenarioError(str(e), where)

    @staticmethod
    def _spectrum_values(K, support, spec, rng, where):
        """U0 expm(i twist sum_c x_c H_c) diag(max(p_i(x_0), 0)) (...)*"""
        _unknown(spec, ('space', 'generator', 'support', 'n', 'spectrum', 'twist', 'rotate'), where)
        n = int(_require(spec, 'n', where))
        spectrum = _require(spec, 'spectrum', where)
        if len(spectrum) > n:
            raise ScenarioError("%d eigenvalue profiles for n = %d" % (len(spectrum), n), where)
        x = K.vertices[support]
        lam = np.zeros((len(support), n))
        for i, coef in enumerate(spectrum):
            coef = np.atleast_1d(np.asarray(coef, dtype=np.float64))
            lam[:, i] = np.maximum(np.polynomial.polynomial.polyval(x[:, 0], coef), 0.0)
        U0 = unitary_group.rvs(n, random_state=rng) if spec.get('rotate') and n > 1 else np.eye(n)
        twist = float(spec.get('twist', 0.0))
        if twist:
            H = rng.standard_normal((x.shape[1], n, n)) + 1j * rng.standard_normal((x.shape[1], n, n))
            H = hermitize(H) / np.sqrt(2.0 * n)
            U = np.stack([U0 @ scipy.linalg.expm(1j * twist * np.tensordot(p, H, axes=1)) for p in x])
        else:
            U = np.broadcast_to(U0, (len(support), n, n))
        return hermitize((U * lam[:, None, :]) @ dagger(U))

    @staticmethod
    def _random_values(K, support, spec, rng, where):
        """Independent PSD matrices of fixed rank with spectrum in [low, 1]."""
        _unknown(spec, ('space', 'generator', 'support', 'n', 'rank', 'low'), where)
        n = int(_require(spec, 'n', where))
        r = int(spec.get('rank', n))
        low = float(spec.get('low', 0.1))
        if not 0 <= r <= n or not 0 < low <= 1:
            raise ScenarioError("need 0 <= rank <= n and 0 < low <= 1", where)
        values = np.zeros((len(support), n, n), dtype=np.complex128)
        for row in range(len(support)):
            u = unitary_group.rvs(n, random_state=rng) if n > 1 else np.ones((1, 1))
            lam = np.r_[rng.uniform(low, 1.0, r), np.zeros(n - r)]
            values[row] = (u * lam) @ dagger(u)
        return hermitize(values)

    @staticmethod
    def _constant_values(K, support, spec, rng, where):
        _unknown(spec, ('space', 'generator', 'support', 'diagonal'), where)
        d = np.asarray(_require(spec, 'diagonal', where), dtype=np.float64)
        return np.broadcast_to(np.diag(d).astype(np.complex128), (len(support), len(d), len(d)))

    @staticmethod
    def _literal_values(K, support, spec, rng, where):
        _unknown(spec, ('space', 'generator', 'support', 'values'), where)
        records = _require(spec, 'values', where)
        if len(records) != len(support):
            raise ScenarioError("%d matrices for %d support points" % (len(records), len(support)), where)
        return np.stack([matrix_from_record(r) for r in records])

    def field(self, name, where='field'):
        if name not in self.fields:
            raise ScenarioError("unknown field '%s'" % name, where)
        return self.fields[name]

    # bounds

    def _build_bound(self, name, spec):
        where = 'bounds.%s' % name
        K = self.space(_require(spec, 'space', where), where + '.space')
        try:
            if 'envelope' in spec:
                _unknown(spec, ('space', 'envelope', 'n', 'polynomial', 'shift', 'clamp'), where)
                coef = np.atleast_1d(np.asarray(_require(spec, 'polynomial', where), dtype=np.float64))
                alpha = np.polynomial.polynomial.polyval(K.vertices[:, 0], coef) + float(spec.get('shift', 0.0))
                n = int(_require(spec, 'n', where))
                envelope = {'floor': floor_env, 'ceil': ceil_env}.get(spec['envelope'])
                if envelope is None:
                    raise ScenarioError("envelope must be 'floor' or 'ceil'", where + '.envelope')
                G = envelope(alpha, n)
                if spec.get('clamp', True):
                    G = G.clamp(lo=0, hi=n)
                return discretize_to_chain(G, K)
            _unknown(spec, ('space', 'kind', 'constant', 'values', 'levels'), where)
            kind = _require(spec, 'kind', where)
            if kind not in (LSC_UPPER, USC_LOWER):
                raise ScenarioError("kind must be '%s' or '%s'" % (LSC_UPPER, USC_LOWER), where + '.kind')
            if 'constant' in spec:
                return BoundChain.constant(K, kind, int(spec['constant']))
            levels = [K.full() if lv == 'all' else self.subcomplex(lv, K, where + '.levels')
                      for lv in _require(spec, 'levels', where)]
            return BoundChain(kind, _require(spec, 'values', where), levels)
        except ScenarioError:
            raise
        except (TypeError, ValueError) as e:
            raise ScenarioError(str(e), where)

    def bound(self, name, where='bound'):
        if name not in self.bounds:
            raise ScenarioError("unknown bound '%s'" % name, where)
        return self.bounds[name]

    # rsh

    def _build_rsh(self, name, spec):
        where = 'rsh.%s' % name
        _unknown(spec, ('stages',), where)
        stages = []
        for j, stage in enumerate(_require(spec, 'stages', where) or []):
            sw = '%s.stages[%d]' % (where, j)
            stage = _mapping(stage, sw)
            _unknown(stage, ('space', 'size', 'boundary', 'clutch', 'unitaries'), sw)
            K = self.space(_require(stage, 'space', sw), sw + '.space')
            size = int(_require(stage, 'size', sw))
            boundary = None
            if stage.get('boundary') is not None:
                boundary = self.subcomplex(stage['boundary'], K, sw + '.boundary')
            unitaries = {}
            for y, u in _mapping(stage.get('unitaries'), sw + '.unitaries').items():
                if u == 'identity':
                    unitaries[y] = None
                elif u == 'random':
                    unitaries[y] = unitary_group.rvs(size, random_state=self.rng(1000 + j, int(y)))
                else:
                    unitaries[y] = matrix_from_record(u)
            try:
                stages.append(Stage(K, size, boundary, _mapping(stage.get('clutch'), sw + '.clutch'),
                                    unitaries))
            except (TypeError, ValueError, IndexError) as e:
                raise ScenarioError(str(e), sw)
        try:
            return RshDecomposition(stages)
        except ValueError as e:
            raise ScenarioError(str(e), where)

    def decomposition(self, name, where='rsh'):
        if name not in self.rsh:
            raise ScenarioError("unknown rsh model '%s'" % name, where)
        return self.rsh[name]

    # targets and elements

    def _build_target(self, name, spec):
        where = 'targets.%s' % name
        _unknown(spec, ('rsh', 'eps', 'polynomials', 'values', 'deltas'), where)
        R = self.decomposition(_require(spec, 'rsh', where), where + '.rsh')
        eps = float(_require(spec, 'eps', where))
        try:
            if 'values' in spec:
                target = TargetProfile(spec['values'], eps, spec.get('deltas'))
            else:
                target = TargetProfile.from_polynomials(R, _require(spec, 'polynomials', where), eps,
                                                        spec.get('deltas'))
        except (TypeError, ValueError) as e:
            raise ScenarioError(str(e), where)
        target.rsh = spec['rsh']
        return target

    def target(self, name, where='target'):
        if name not in self.targets:
            raise ScenarioError("unknown target '%s'" % name, where)
        return self.targets[name]

    def _build_element(self, name, spec):
        where = 'elements.%s' % name
        _unknown(spec, ('rsh', 'kind'), where)
        R = self.decomposition(_require(spec, 'rsh', where), where + '.rsh')
        kind = spec.get('kind', 'identity')
        if kind not in ('identity', 'zero'):
            raise ScenarioError("element kind must be 'identity' or 'zero'", where + '.kind')
        return identity_element(R) if kind == 'identity' else zero_element(R)

    def element(self, name, where='element'):
        if name not in self.elements:
            raise ScenarioError("unknown element '%s'" % name, where)
        return self.elements[name]

    # tasks

    def _check_tasks(self, tasks):
        lookup = {'spaces': self.spaces, 'subcomplexes': self.subcomplexes, 'fields': self.fields,
                  'bounds': self.bounds, 'rsh': self.rsh, 'targets': self.targets}
        stored = set(self.elements)
        seen = set()
        checked = []
        for i, task in enumerate(tasks):
            where = 'tasks[%d]' % i
            task = _mapping(task, where)
            _unknown(task, TASK_KEYS, where)
            tid = str(_require(task, 'id', where))
            if tid in seen:
                raise ScenarioError("duplicate task id '%s'" % tid, where)
            seen.add(tid)
            op = _require(task, 'op', where)
            if op not in TASKS:
                raise ScenarioError("unknown op '%s' (available: %s)" % (op, ', '.join(sorted(TASKS))),
                                    where + '.op')
            fn = TASKS[op]
            args = dict(_mapping(task.get('args'), where + '.args'))
            try:
                fn.signature.bind(self, **args)
            except TypeError as e:
                raise ScenarioError("arguments do not fit %s: %s" % (op, e), where + '.args')
            for arg, section in fn.refs.items():
                if arg not in args:
                    continue
                names = args[arg] if isinstance(args[arg], list) else [args[arg]]
                known = stored if section == 'elements' else lookup[section]
                for ref in names:
                    if ref not in known:
                        raise ScenarioError("unknown %s '%s'" % (SINGULAR[section], ref),
                                            '%s.args.%s' % (where, arg))
            if task.get('store') is not None:
                if not fn.stores:
                    raise ScenarioError("op '%s' produces nothing to store" % op, where + '.store')
                stored.add(task['store'])
            checked.append({'id': tid, 'op': op, 'args': args,
                            'expect': _mapping(task.get('expect'), where + '.expect'),
                            'store': task.get('store')})
        return checked


def load_scenario(path, seed=None, tolerances=None):
    """Parse and validate a scenario file; raises ScenarioError with a location."""
    if not os.path.isfile(path):
        raise ScenarioError("no such scenario file", path)
    with open(path, 'r') as f:
        text = f.read()
    data = parse_yaml(text, path)
    return Scenario(data, source=path, sha256=file_digest(path), seed=seed, tolerances=tolerances)
