"""Interference-cancellation space-time block codes for the MIMO multiple-access
channel, with low-complexity group decoding and Monte Carlo tooling."""

from .constellation import QamConstellation, make_qam, noise_variance_for_ebn0
from .stbc import (MultiUserScheme, RotationMatrix, algebraic_rotation, build_scheme,
                   three_user_scheme, two_user_scheme)
from .channel import build_equivalent, sample_channel, synthesize_rx
from .picgd import GroupDecoder, decode_all, decode_decoupled, decode_joint
from .sphere import LatticeProblem, exhaustive_search, sphere_search

__version__ = "0.1.0"
