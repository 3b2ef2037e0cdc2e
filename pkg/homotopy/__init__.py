from .field import MatrixField, ProjectionField, FieldPath, projection_from_frame, \
    constant_path, concat_paths, reverse_path, lift_path, scale_path
from .frames import find_trivial_subprojection, polar
from .spectral import find_uniform_gap, flatten_spectrum, peel_trivial_summand
from .support import WellSupportedField, well_supported_approx
from .band import raise_min_rank, connect_in_band, check_band, check_slack, sublevel_strata, \
    rotation_path
