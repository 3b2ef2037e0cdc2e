import contextlib

_DEFAULTS = {
    'herm': 1e-10,              # ||A - A*|| allowed, relative to max(1, ||A||)
    'psd': 1e-9,                # min eigenvalue allowed below zero, relative
    'rank_rel': 1e-6,           # eigenvalues above rank_rel * ||A|| count towards the rank
    'rank_abs': 1e-12,          # floor of the rank threshold
    'gap': 1e-8,                # spectral cut must stay this far from every eigenvalue
    'eig': 1e-12,               # Jacobi off-diagonal stopping threshold, relative to ||A||_F
    'path': 0.05,               # path step gap allowed, relative to the endpoint norms
    'frame_min_singular': 0.1,  # frame transport fails below this singular value
    'frame_max_jump': 0.5,      # largest projection jump accepted across an edge
    'shells': 8,
    'time_steps': 32,
    'max_refine': 6,
    'eigensolver': 'lapack',
}


class Tolerances(object):
    """Numerical tolerance policy shared by every package.

    Values are read at call time, so overriding the active policy (scenario file,
    ``--tolerance name=value``) affects every later operation.
    """
    def __init__(self, **overrides):
        self._values = dict(_DEFAULTS)
        self.update(**overrides)

    def update(self, **overrides):
        for name, value in overrides.items():
            if name not in _DEFAULTS:
                raise ValueError("unknown tolerance '%s' (known: %s)"
                                 % (name, ', '.join(sorted(_DEFAULTS))))
            default = _DEFAULTS[name]
            if isinstance(default, str):
                value = str(value)
                if name == 'eigensolver' and value not in ('lapack', 'jacobi'):
                    raise ValueError("eigensolver must be 'lapack' or 'jacobi', got %r" % value)
            elif isinstance(default, int):
                value = int(value)
            else:
                value = float(value)
                if value <= 0:
                    raise ValueError("tolerance '%s' must be positive, got %r" % (name, value))
            self._values[name] = value

    def __getattr__(self, name):
        values = self.__dict__.get('_values')
        if values is not None and name in values:
            return values[name]
        raise AttributeError(name)

    def as_dict(self):
        return dict(self._values)

    @staticmethod
    def parse_override(text):
        """'rank_rel=1e-7' -> ('rank_rel', '1e-7')"""
        if '=' not in text:
            raise ValueError("tolerance override must look like name=value, got %r" % text)
        name, value = text.split('=', 1)
        return name.strip(), value.strip()


_active = Tolerances()


def get_tolerances():
    return _active


def set_tolerances(tolerances):
    global _active
    _active = tolerances
    return _active


def reset_tolerances():
    return set_tolerances(Tolerances())


@contextlib.contextmanager
def using_tolerances(**overrides):
    previous = _active
    set_tolerances(Tolerances(**dict(previous.as_dict(), **overrides)))
    try:
        yield _active
    finally:
        set_tolerances(previous)
