import argparse
import os
import sys

from tqdm import tqdm

import utils
from scenarios import build_report, load_scenario, resolve_scenario, run_task, write_report
from utils.errors import ScenarioError


def get_argparser():
    parser = argparse.ArgumentParser(
        description="Run a rank-profile scenario and write a verification report")

    # Scenario Options
    parser.add_argument("--scenario", type=str, required=True,
                        help="scenario YAML file, or the name of a shipped scenario")
    parser.add_argument("--report", type=str, default=None,
                        help="report path (default: ./results/<scenario>_report.yaml)")
    parser.add_argument("--csv_dir", "--csv-dir", dest="csv_dir", type=str, default=None,
                        help="write per-stage rank profiles as CSV into this directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed (default: the scenario's seed, else 0)")
    parser.add_argument("--tolerance", action='append', default=[], metavar="NAME=VALUE",
                        help="override a numerical tolerance; may be repeated")
    parser.add_argument("--verbose", action='store_true', default=False,
                        help="print one line per task")
    return parser


def default_report_path(scenario):
    stem = os.path.splitext(os.path.basename(scenario))[0]
    return os.path.join('results', '%s_report.yaml' % stem)


def main(argv=None):
    parser = get_argparser()
    opts = parser.parse_args(argv)
    opts.scenario = resolve_scenario(opts.scenario)
    if opts.report is None:
        opts.report = default_report_path(opts.scenario)

    print("Options:")
    for k, v in vars(opts).items():
        print(f"{k}: {v}")

    try:
        sc = load_scenario(opts.scenario, seed=opts.seed, tolerances=opts.tolerance)
    except ScenarioError as e:
        print("Invalid scenario: %s" % e, file=sys.stderr)
        return 2
    utils.set_seed(sc.seed)
    sc.csv_dir = opts.csv_dir

    entries = []
    for task in tqdm(sc.tasks, desc="Tasks", leave=False, disable=not sc.tasks):
        entry = run_task(sc, task)
        entries.append(entry)
        if opts.verbose or entry['status'] != 'pass':
            line = "[%s] %s (%s): %s in %.2fs" % (entry['status'], entry['id'], entry['op'],
                                                   entry['anchor'], entry['elapsed'])
            if entry['status'] != 'pass':
                line += "\n    witnesses: %s" % entry['witnesses']
                if 'error' in entry:
                    line += "\n    error: %s" % entry['error']
                for m in entry.get('mismatches', []):
                    line += "\n    %s: expected %s, got %s" % (m['key'], m['expected'], m['got'])
            tqdm.write(line)

    report = build_report(sc, entries)
    write_report(report, opts.report)
    print("Report: %s (%d tasks, %s)" % (opts.report, len(entries), 'passed' if report['passed'] else 'FAILED'))
    return 0 if report['passed'] else 1


if __name__ == '__main__':
    sys.exit(main())
