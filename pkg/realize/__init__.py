from .target import TargetProfile, check_dimbound, envelope_slack
from .construct import realize_rank, verify_realization, write_rank_profile
