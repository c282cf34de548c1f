"""Operational shape descriptors of a spectrum.

* central peak / dip: sign of the interference part (S - background -
  scattered) at the line centre;
* central hole: the total spectrum has a local minimum at the line centre;
* pimple: a narrow secondary structure on top of the broad line, detected
  as more than two inflection points of the total spectrum;
* asymmetry: max |S(+d) - S(-d)| above 1e-9.

Extrema and inflections are located on a scan with step gamma/100.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .channels import AggregateSqueezing, ChannelSqueezing
from .errors import InvalidInputError
from .spectra import SpectrumDecomposition, channel_spectrum
from .transforms import DetuningGrid

__all__ = [
    "SpectrumFeatures",
    "ASYMMETRY_TOL",
    "even_odd",
    "local_extrema",
    "inflection_points",
    "scan_grid",
    "analyze",
    "channel_features",
]

ASYMMETRY_TOL = 1e-9
SCAN_STEP = 0.01  # in units of gamma


@dataclass(frozen=True)
class SpectrumFeatures:
    symmetric: bool
    asymmetry: float
    central_interference: float
    central_peak: bool
    central_dip: bool
    central_hole: bool
    pimple: bool
    maxima: tuple[float, ...]
    minima: tuple[float, ...]
    inflections: int
    symmetric_weight: float
    odd_weight: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["maxima"] = list(self.maxima)
        d["minima"] = list(self.minima)
        return d


def even_odd(detunings, values) -> tuple[np.ndarray, np.ndarray]:
    """Even and odd parts about d = 0; NaN where -d is not on the grid."""
    g = detunings if isinstance(detunings, DetuningGrid) else DetuningGrid(np.asarray(detunings, dtype=float))
    v = np.asarray(values, dtype=float)
    i, j = g.mirrored_pairs()
    even = np.full(v.shape, np.nan)
    odd = np.full(v.shape, np.nan)
    even[i] = 0.5 * (v[i] + v[j])
    odd[i] = 0.5 * (v[i] - v[j])
    return even, odd


def _signs(x: np.ndarray, tol: float) -> np.ndarray:
    s = np.sign(x)
    s[np.abs(x) <= tol] = 0
    return s


def local_extrema(detunings, values, rtol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Indices of strict local maxima and minima; plateaus count once at their first point."""
    v = np.asarray(values, dtype=float)
    if v.size < 3:
        return np.array([], dtype=int), np.array([], dtype=int)
    s = _signs(np.diff(v), rtol * max(1.0, float(np.max(np.abs(v)))))
    idx = np.nonzero(s)[0]
    maxima, minima = [], []
    for a, b in zip(idx[:-1], idx[1:]):
        if s[a] > 0 > s[b]:
            maxima.append(a + 1)
        elif s[a] < 0 < s[b]:
            minima.append(a + 1)
    return np.array(maxima, dtype=int), np.array(minima, dtype=int)


def inflection_points(detunings, values, rtol: float = 1e-9) -> int:
    """Number of sign changes of the discrete second derivative."""
    v = np.asarray(values, dtype=float)
    if v.size < 4:
        return 0
    dd = np.diff(v, 2)
    s = _signs(dd, rtol * float(np.max(np.abs(dd))) if dd.size else 0.0)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def scan_grid(lo: float = -8.0, hi: float = 8.0, step: float = SCAN_STEP) -> DetuningGrid:
    """Grid of spacing ``step`` that contains d = 0 and is mirror symmetric."""
    if step <= 0 or hi <= lo:
        raise InvalidInputError("scan needs step > 0 and hi > lo")
    k = int(np.floor(max(abs(lo), abs(hi)) / step + 1e-9))
    d = step * np.arange(-k, k + 1)
    d = d[(d >= lo - 1e-12) & (d <= hi + 1e-12)]
    return DetuningGrid(d)


def analyze(dec: SpectrumDecomposition) -> SpectrumFeatures:
    """Feature flags of a decomposition; the grid should contain d = 0 and be mirror symmetric."""
    d = dec.detunings
    total = dec.total
    centre = int(np.argmin(np.abs(d)))
    if abs(d[centre]) > 1e-12:
        raise InvalidInputError("feature analysis needs the line centre d = 0 on the grid")
    even_sb, odd_sb = even_odd(dec.grid, total - dec.background)
    _, odd_t = even_odd(dec.grid, total)
    asym = float(np.nanmax(np.abs(2 * odd_t))) if np.any(np.isfinite(odd_t)) else 0.0
    maxima, minima = local_extrema(d, total)
    c_int = float(dec.interference[centre])
    return SpectrumFeatures(
        symmetric=asym <= ASYMMETRY_TOL,
        asymmetry=asym,
        central_interference=c_int,
        central_peak=c_int > 0,
        central_dip=c_int < 0,
        central_hole=bool(np.any(np.abs(d[minima] - d[centre]) <= 1.5 * _spacing(d, centre))),
        pimple=inflection_points(d, total) > 2,
        maxima=tuple(float(x) for x in d[maxima]),
        minima=tuple(float(x) for x in d[minima]),
        inflections=inflection_points(d, total),
        symmetric_weight=float(np.nanmax(np.abs(even_sb))),
        odd_weight=float(np.nanmax(np.abs(odd_sb))),
    )


def _spacing(d: np.ndarray, i: int) -> float:
    if d.size < 2:
        return 0.0
    j = min(i + 1, d.size - 1)
    return float(d[j] - d[j - 1])


def channel_features(agg: AggregateSqueezing, channel: ChannelSqueezing,
                     lo: float = -8.0, hi: float = 8.0, step: float | None = None) -> SpectrumFeatures:
    """Features of the closed-form channel spectrum on a gamma/100 scan."""
    step = SCAN_STEP * agg.gamma if step is None else step
    return analyze(channel_spectrum(agg, channel, scan_grid(lo * agg.gamma, hi * agg.gamma, step)))
