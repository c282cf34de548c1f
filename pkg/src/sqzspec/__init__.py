"""Fluorescence spectra of a two-level atom in a multi-channel squeezed vacuum."""
from .channels import (
    AggregateSqueezing,
    ChannelSet,
    ChannelSqueezing,
    aggregate,
    linewidth_expansion,
    max_channel_weight,
    pure_channel,
    realize_target,
    validate_channel,
)
from .errors import DegenerateInputError, InfeasibleError, InvalidInputError
from .spectra import SpectrumDecomposition, channel_spectrum, observe, total_spectrum
from .transforms import DetuningGrid

__version__ = "0.1.0"

__all__ = [
    "AggregateSqueezing",
    "ChannelSet",
    "ChannelSqueezing",
    "DetuningGrid",
    "SpectrumDecomposition",
    "DegenerateInputError",
    "InfeasibleError",
    "InvalidInputError",
    "aggregate",
    "channel_spectrum",
    "linewidth_expansion",
    "max_channel_weight",
    "observe",
    "pure_channel",
    "realize_target",
    "total_spectrum",
    "validate_channel",
]
