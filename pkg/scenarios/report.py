import os

import numpy as np
import yaml

from utils.utils import fmt_margin, mkdir


def _plain(obj):
    """Report-safe copy: builtin types only, floats rounded by fmt_margin."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return fmt_margin(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def build_report(sc, entries):
    header = {
        'scenario': os.path.basename(sc.source),
        'sha256': sc.sha256,
        'seed': sc.seed,
        'tolerances': sc.tolerances.as_dict(),
        'passed': all(e['status'] == 'pass' for e in entries),
        'tasks': len(entries),
    }
    report = dict(header, entries=[dict(e, elapsed=round(e['elapsed'], 3)) for e in entries])
    return _plain(report)


def write_report(report, path):
    mkdir(os.path.dirname(path))
    with open(path, 'w') as f:
        yaml.safe_dump(report, f, sort_keys=False, default_flow_style=False)
    return path
