import os
import os.path
import hashlib

SCENARIO_SUFFIXES = ('.yaml', '.yml')


def file_digest(fpath, algorithm='sha256'):
    h = hashlib.new(algorithm)
    with open(fpath, 'rb') as f:
        # read in 1MB chunks
        for chunk in iter(lambda: f.read(1024 * 1024), b''):
            h.update(chunk)
    return h.hexdigest()


def data_root():
    """Directory of the scenarios shipped with the package."""
    return os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')


def shipped_scenarios():
    """Names of the shipped scenarios, sorted, without their suffix."""
    root = data_root()
    return sorted(os.path.splitext(p)[0] for p in os.listdir(root)
                  if p.endswith(SCENARIO_SUFFIXES) and os.path.isfile(os.path.join(root, p)))


def resolve_scenario(name):
    """Path of a scenario given either as a file or as the name of a shipped one.

    An existing file wins; unknown names come back unchanged so that loading
    reports them.
    """
    if os.path.isfile(name):
        return name
    stem = os.path.splitext(os.path.basename(name))[0]
    if os.path.dirname(name) or stem not in shipped_scenarios():
        return name
    for suffix in SCENARIO_SUFFIXES:
        path = os.path.join(data_root(), stem + suffix)
        if os.path.isfile(path):
            return path
    return name
