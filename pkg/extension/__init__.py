from .local import extend_nearest, extend_local
from .band import extend_band, midband_projection, soft_rank_field, transition_zones
from .envelopes import extend_envelopes
