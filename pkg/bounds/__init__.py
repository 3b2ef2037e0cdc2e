from .chain import BoundChain, eval_bound, LSC_UPPER, USC_LOWER
from .envelopes import GridFunction, floor_env, ceil_env, discretize_to_chain
