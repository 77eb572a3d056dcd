"""Exact linear degrees-of-freedom lab for the MISO broadcast channel with hybrid CSIT."""

from .channel import ChannelRealization, CsitConfig, CsitState, CsitView, csit_view, sample_channel
from .exactlin import RationalMatrix, rank
from .region import build_region, closed_form_bounds, single_delayed_sumdof, sumdof, vertices
from .schemes import achieved_dof, kuser_d1_scheme, pdd_scheme, zero_forcing_scheme
from .strategy import LinearStrategy, Transcript, assemble, check_decodability, random_strategy

__all__ = [
    "ChannelRealization",
    "CsitConfig",
    "CsitState",
    "CsitView",
    "LinearStrategy",
    "RationalMatrix",
    "Transcript",
    "achieved_dof",
    "assemble",
    "build_region",
    "check_decodability",
    "closed_form_bounds",
    "csit_view",
    "kuser_d1_scheme",
    "pdd_scheme",
    "random_strategy",
    "rank",
    "sample_channel",
    "single_delayed_sumdof",
    "sumdof",
    "vertices",
    "zero_forcing_scheme",
]

__version__ = "0.1.0"
