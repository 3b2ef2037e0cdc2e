from .decomposition import ClutchBlock, Stage, RshDecomposition, sdg_ratio
from .element import RshElement, eval_at, restrict, clutch_pushforward, identity_element, \
    zero_element, amplify_element
from .traces import TraceSamplePoint, trace_samples, d_tau, d_tau_limit
