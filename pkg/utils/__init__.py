from .utils import *
from .tolerances import Tolerances, get_tolerances, set_tolerances, reset_tolerances, using_tolerances
from .errors import RankBoundError, IllPosedCutError, MeshTooCoarseError, StageError, ScenarioError
