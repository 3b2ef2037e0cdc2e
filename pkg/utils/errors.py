class RankBoundError(ValueError):
    """A pointwise rank condition fails; ``point`` is the witness sample point."""
    def __init__(self, message, point=None):
        super(RankBoundError, self).__init__(message)
        self.point = point


class IllPosedCutError(ValueError):
    """A spectral cut falls inside a spectral cluster."""
    def __init__(self, message, eigenvalue=None):
        super(IllPosedCutError, self).__init__(message)
        self.eigenvalue = eigenvalue


class MeshTooCoarseError(RuntimeError):
    def __init__(self, message, point=None):
        super(MeshTooCoarseError, self).__init__(
            message + " (subdivide the complex and retry)")
        self.point = point


class StageError(RuntimeError):
    def __init__(self, message, stage=None, point=None):
        super(StageError, self).__init__(message)
        self.stage = stage
        self.point = point


class ScenarioError(ValueError):
    """Scenario file does not parse or validate; ``location`` is 'line:column' or a key path."""
    def __init__(self, message, location=None):
        super(ScenarioError, self).__init__(
            message if location is None else "%s: %s" % (location, message))
        self.location = location
