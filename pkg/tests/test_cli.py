import csv
import os

import pytest
import yaml

from main import default_report_path, main
from scenarios import (TASKS, Scenario, check_expect, data_root, load_scenario, parse_yaml,
                       resolve_scenario, run_task, shipped_scenarios)
from utils.errors import ScenarioError
from utils.tolerances import get_tolerances


def _data(name):
    return os.path.join(data_root(), name)


def _run(tmp_path, scenario, *extra):
    report = str(tmp_path / 'report.yaml')
    code = main(['--scenario', scenario, '--report', report] + list(extra))
    text = ''
    if os.path.exists(report):
        with open(report) as f:
            text = f.read()
    return code, text


def _load_report(text):
    return yaml.safe_load(text)


def test_empty_scenario(tmp_path):
    code, text = _run(tmp_path, _data('empty.yaml'))
    assert code == 0
    report = _load_report(text)
    assert report['passed'] and report['tasks'] == 0 and report['entries'] == []
    assert report['scenario'] == 'empty.yaml'
    assert len(report['sha256']) == 64
    assert list(report)[:6] == ['scenario', 'sha256', 'seed', 'tolerances', 'passed', 'tasks']


@pytest.mark.parametrize("name", ['basics.yaml', 'rsh.yaml'])
def test_shipped_scenarios_pass(tmp_path, name):
    code, text = _run(tmp_path, _data(name))
    report = _load_report(text)
    failing = [e for e in report['entries'] if e['status'] != 'pass']
    assert code == 0, failing
    assert all(e['anchor'] for e in report['entries'])


def test_dimbound_failure_exit_code(tmp_path):
    code, text = _run(tmp_path, _data('dimbound_fail.yaml'))
    assert code == 1
    report = _load_report(text)
    assert not report['passed']
    entry = report['entries'][0]
    assert entry['status'] == 'fail' and entry['passed'] is False
    assert {'name': 'stage_0', 'value': -7.625} in entry['margins']
    assert entry['witnesses'] == [{'stage': 0, 'lhs': 0.375, 'rhs': 8}]


def test_invalid_scenarios_exit_two(tmp_path, capsys):
    bad = tmp_path / 'bad.yaml'
    bad.write_text("tasks: [\n")
    assert main(['--scenario', str(bad), '--report', str(tmp_path / 'r.yaml')]) == 2
    assert 'bad.yaml:' in capsys.readouterr().err
    bad.write_text("tasks:\n  - {id: a, op: no_such_op}\n")
    assert main(['--scenario', str(bad)]) == 2
    bad.write_text("widgets: {}\n")
    assert main(['--scenario', str(bad)]) == 2
    assert main(['--scenario', str(tmp_path / 'missing.yaml')]) == 2
    assert main(['--scenario', _data('empty.yaml'), '--tolerance', 'no_such=1']) == 2
    assert not os.path.exists(tmp_path / 'r.yaml')


def test_overrides_reach_the_report(tmp_path):
    code, text = _run(tmp_path, _data('empty.yaml'), '--seed', '7', '--tolerance', 'rank_rel=1e-7')
    assert code == 0
    report = _load_report(text)
    assert report['seed'] == 7
    assert report['tolerances']['rank_rel'] == 1e-7


def test_reports_are_deterministic(tmp_path):
    texts = []
    for i in range(2):
        report = str(tmp_path / ('run%d.yaml' % i))
        assert main(['--scenario', _data('rsh.yaml'), '--report', report]) == 0
        with open(report) as f:
            texts.append([line for line in f if not line.strip().startswith('elapsed:')])
    assert texts[0] == texts[1]


def test_default_report_path():
    assert default_report_path('scenarios/data/flagship.yaml') == os.path.join('results', 'flagship_report.yaml')


def test_shipped_scenarios_load():
    names = shipped_scenarios()
    assert {'basics', 'empty', 'flagship', 'homotopy', 'rsh'} <= set(names)
    for name in names:
        sc = load_scenario(resolve_scenario(name))
        assert sc.sha256 and sc.seed >= 0


def test_resolve_scenario_by_name(tmp_path):
    assert resolve_scenario('empty') == _data('empty.yaml')
    assert resolve_scenario('empty.yaml') == _data('empty.yaml')
    missing = str(tmp_path / 'nothing.yaml')
    assert resolve_scenario(missing) == missing
    assert resolve_scenario('no_such_scenario') == 'no_such_scenario'
    code, text = _run(tmp_path, 'empty')
    assert code == 0 and _load_report(text)['scenario'] == 'empty.yaml'


@pytest.mark.parametrize("op, anchor", [
    ('find_uniform_gap', 'Lemma 2.1'),
    ('flatten_spectrum', 'Lemma 2.2'),
    ('well_supported_approx', 'Definition 2.3'),
    ('raise_min_rank', 'Lemma 2.4'),
    ('connect_in_band', 'Prop. 2.5'),
    ('extend_local', 'Lemma 2.7'),
    ('extend_band', 'Prop. 2.8'),
    ('extend_envelopes', 'Prop. 2.9'),
    ('floor_env', 'Lemma 3.3'),
    ('sdg_ratio', 'Definition 3.2'),
    ('check_dimbound', 'Theorem 3.4 (dimbound)'),
    ('realize_rank', 'Theorem 3.4'),
    ('verify_realization', 'Theorem 3.4 (toprove)'),
])
def test_task_anchors(op, anchor):
    assert TASKS[op].anchor.split(':')[0] == anchor


def test_every_task_names_its_anchor():
    for op, fn in TASKS.items():
        head = fn.anchor.split(':')[0]
        assert head.startswith(('Lemma', 'Prop.', 'Definition', 'Theorem', 'Remark', 'Section')), op


def test_parse_yaml_location():
    with pytest.raises(ScenarioError) as info:
        parse_yaml("a: [1, 2\nb: 3\n", 'inline.yaml')
    assert info.value.location.startswith('inline.yaml:')
    with pytest.raises(ScenarioError):
        parse_yaml("- 1\n- 2\n")


def test_scenario_reference_errors():
    base = {'spaces': {'interval': {'vertices': [[0.0], [1.0]], 'simplices': [[0, 1]]}}}
    with pytest.raises(ScenarioError) as info:
        Scenario(dict(base, tasks=[{'id': 'a', 'op': 'subdivide', 'args': {'space': 'nowhere', 'r': 1}}]))
    assert info.value.location == 'tasks[0].args.space'
    with pytest.raises(ScenarioError):
        Scenario(dict(base, tasks=[{'id': 'a', 'op': 'subdivide', 'args': {'space': 'interval', 'depth': 1}}]))
    with pytest.raises(ScenarioError):
        Scenario(dict(base, tasks=[{'id': 'a', 'op': 'subdivide', 'args': {'space': 'interval', 'r': 1}},
                                   {'id': 'a', 'op': 'subdivide', 'args': {'space': 'interval', 'r': 2}}]))
    with pytest.raises(ScenarioError):
        Scenario(dict(base, seed=-1))


def test_scenario_tolerances_and_tasks():
    sc = Scenario({'tolerances': {'path': 0.1},
                   'spaces': {'interval': {'vertices': [[0.0], [1.0]], 'simplices': [[0, 1]]}},
                   'tasks': [{'id': 'sub', 'op': 'subdivide', 'args': {'space': 'interval', 'r': 3},
                              'expect': {'n_points': 9}}]},
                  tolerances=['path=0.2'])
    assert get_tolerances().path == 0.2
    entry = run_task(sc, sc.tasks[0])
    assert entry['status'] == 'pass', entry
    assert entry['values']['n_points'] == 9


def test_check_expect_semantics():
    result = {'passed': True, 'values': {'rank': 6, 'ratio': 0.25, 'ranks': [24, 24]},
              'margins': {'stage_0': 1.0}}
    assert check_expect(result, {}) == []
    assert check_expect(result, {'rank': 6, 'stage_0': 1.0 + 1e-12}) == []
    assert check_expect(result, {'ratio': {'min': 0.2, 'max': 0.3}}) == []
    assert check_expect(result, {'ratio': {'approx': 0.26, 'tol': 0.05}}) == []
    assert check_expect(result, {'ranks': [24, 24]}) == []
    assert [m['key'] for m in check_expect(result, {'ranks': [24], 'rank': 5, 'gone': 1})] == \
        ['ranks', 'rank', 'gone']
    assert check_expect(dict(result, passed=False), {})[0]['key'] == 'passed'
    assert check_expect(dict(result, passed=False), {'passed': False}) == []
    assert check_expect(None, {'error': 'ValueError'}, ScenarioError('x')) == []
    assert check_expect(None, {'error': 'RankBoundError'}, ValueError('x'))[0]['got'] == 'ValueError'
    assert check_expect(None, {}, ValueError('x'))[0]['key'] == 'error'


@pytest.mark.slow
def test_flagship_run(tmp_path):
    csv_dir = tmp_path / 'csv'
    code, text = _run(tmp_path, _data('flagship.yaml'), '--csv_dir', str(csv_dir))
    report = _load_report(text)
    assert code == 0, [e for e in report['entries'] if e['status'] != 'pass']
    verify = next(e for e in report['entries'] if e['id'] == 'verify')
    assert verify['values']['csv'] == ['rank_profile_stage0.csv', 'rank_profile_stage1.csv']
    with open(csv_dir / 'rank_profile_stage1.csv') as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 129
    assert all(abs(float(r['h']) - float(r['rank_over_n'])) < 0.5 for r in rows)
