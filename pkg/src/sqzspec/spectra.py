"""Closed-form stationary correlation functions and channel spectra.

All spectra are returned in the ``2*pi*S`` convention, i.e. the white-noise
background of a discrete channel is the constant ``N_alpha``.  Channels must
be expressed in the phase convention of the aggregate they belong to
(aggregate ``M`` real and non-negative), see :func:`observe`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import AggregateSqueezing, ChannelSet, ChannelSqueezing, aggregate
from .errors import InvalidInputError
from .transforms import (
    DEFAULT_GRID,
    CorrelationFunction,
    DetuningGrid,
    ExponentialSum,
    spectrum_from_correlation,
)

__all__ = [
    "SpectrumDecomposition",
    "DetuningGrid",
    "CorrelationFunction",
    "DEFAULT_GRID",
    "observe",
    "w_scattered",
    "w_interference",
    "scattered_correlation",
    "interference_correlation",
    "channel_spectrum",
    "total_spectrum",
    "spectrum_from_correlation",
]


@dataclass(frozen=True)
class SpectrumDecomposition:
    """Background, scattered and interference parts of a spectrum (2*pi*S convention).

    ``background_divergent`` marks continuum channels, where the white-noise
    background has no finite per-channel value.
    """

    grid: DetuningGrid
    background: np.ndarray
    scattered: np.ndarray
    interference: np.ndarray
    total: np.ndarray
    background_divergent: bool = False
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def detunings(self) -> np.ndarray:
        return self.grid.detunings

    def scaled(self, factor: float) -> "SpectrumDecomposition":
        return SpectrumDecomposition(self.grid, self.background * factor, self.scattered * factor,
                                     self.interference * factor, self.total * factor,
                                     self.background_divergent, dict(self.metadata))


def observe(channel_set: ChannelSet, index: int) -> tuple[AggregateSqueezing, ChannelSqueezing]:
    """Aggregate of ``channel_set`` and its channel ``index`` in the aggregate's phase convention."""
    if not -len(channel_set) <= index < len(channel_set):
        raise InvalidInputError(f"channel index {index} out of range")
    normalized = channel_set.in_phase_convention()
    return aggregate(normalized), normalized[index]


def _lorentz(d: np.ndarray, rate: float) -> np.ndarray:
    return rate / (d * d + rate * rate)


def scattered_correlation(agg: AggregateSqueezing, gamma_alpha: float) -> ExponentialSum:
    c = 0.5 * gamma_alpha * agg.big_n / (2 * agg.big_n + 1)
    return ExponentialSum([c, c], [agg.gamma_plus, agg.gamma_minus])


def interference_correlation(agg: AggregateSqueezing, channel: ChannelSqueezing) -> ExponentialSum:
    c = -0.5 * channel.gamma_alpha / (2 * agg.big_n + 1)
    return ExponentialSum([c * (channel.n_alpha + channel.m_alpha),
                           c * (channel.n_alpha - channel.m_alpha)],
                          [agg.gamma_plus, agg.gamma_minus])


def w_scattered(agg: AggregateSqueezing, gamma_alpha: float, tau):
    """gamma_alpha <sigma+(tau) sigma-(0)>_ss; real for tau >= 0."""
    out = scattered_correlation(agg, gamma_alpha)(tau)
    return out if np.ndim(out) else complex(out)


def w_interference(agg: AggregateSqueezing, channel: ChannelSqueezing, tau):
    """Interference correlation between the scattered light and the incoming channel.

    Complex whenever ``Im M_alpha != 0``.  Negative ``tau`` uses
    w(-tau) = conj(w(tau)).
    """
    out = interference_correlation(agg, channel)(tau)
    return out if np.ndim(out) else complex(out)


def _grid(grid) -> DetuningGrid:
    if isinstance(grid, DetuningGrid):
        return grid
    return DetuningGrid(np.asarray(grid, dtype=float))


def channel_spectrum(agg: AggregateSqueezing, channel: ChannelSqueezing,
                     grid: DetuningGrid | None = None, include_background: bool = True
                     ) -> SpectrumDecomposition:
    """Spectrum 2*pi*S_alpha of the light leaving through ``channel``.

    The total is evaluated from the closed form

        N_alpha + gamma_alpha/(2N+1) sum_+- L_+-(d) (N - N_alpha -+ Re M_alpha)
                + 2 M gamma_alpha gamma^2 d / [(d^2+gamma_+^2)(d^2+gamma_-^2)] Im M_alpha

    with L(d) = rate/(d^2 + rate^2).  The scattered part is the transform
    of the atomic correlation alone and the interference part is whatever
    remains after removing background and scattered light.
    """
    g = DEFAULT_GRID if grid is None else _grid(grid)
    d = g.detunings
    gp, gm = agg.gamma_plus, agg.gamma_minus
    n, m, gamma = agg.big_n, agg.big_m, agg.gamma
    lp, lm = _lorentz(d, gp), _lorentz(d, gm)
    ga, na, ma = channel.gamma_alpha, channel.n_alpha, channel.m_alpha

    background = np.full(d.shape, na if include_background else 0.0)
    even = ga / (2 * n + 1) * (lp * (n - na - ma.real) + lm * (n - na + ma.real))
    odd = 2 * m * ga * gamma ** 2 * d / ((d * d + gp * gp) * (d * d + gm * gm)) * ma.imag
    total = background + even + odd
    scattered = ga * n / (2 * n + 1) * (lp + lm)
    interference = total - background - scattered
    meta = {"gamma_alpha": ga, "n_alpha": na, "m_alpha": [ma.real, ma.imag]}
    return SpectrumDecomposition(g, background, scattered, interference, total,
                                 background_divergent=False, metadata=meta)


def total_spectrum(agg: AggregateSqueezing, grid: DetuningGrid | None = None) -> np.ndarray:
    """2*pi*S of all outgoing light: N + M gamma/(2N+1) [L_-(d) - L_+(d)]."""
    g = DEFAULT_GRID if grid is None else _grid(grid)
    d = g.detunings
    n = agg.big_n
    return n + agg.big_m * agg.gamma / (2 * n + 1) * (_lorentz(d, agg.gamma_minus)
                                                      - _lorentz(d, agg.gamma_plus))


def two_pi_spectrum_from_correlation(w, grid: DetuningGrid, method: str = "auto") -> np.ndarray:
    return 2 * math.pi * spectrum_from_correlation(w, grid, method=method)
