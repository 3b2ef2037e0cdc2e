import os
import random

import numpy as np


def set_seed(seed):
    random.seed(seed)
    np.random.seed(seed)
    return np.random.default_rng(seed)


def mkdir(path):
    if path and not os.path.exists(path):
        os.makedirs(path)


def fmt_margin(value):
    """Rounded float for reports; keeps reports byte-stable across platforms."""
    if value is None:
        return None
    value = float(value)
    if not np.isfinite(value):
        return str(value)
    return float('%.12g' % value)
