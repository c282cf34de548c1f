"""Detuning grids, stationary correlation functions and their Fourier transforms.

The spectrum belonging to a stationary correlation function w(tau) is

    S(w) = (1/pi) Re int_0^inf exp(-i (w - w0) tau) w(tau) dtau,

using w(-tau) = conj(w(tau)) for the negative half-axis.  Two routes are
provided: an exact one for sums of decaying exponentials and a numerical
quadrature for arbitrary callables.  This module deliberately knows nothing
about the closed-form correlation functions in :mod:`sqzspec.spectra`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "DetuningGrid",
    "CorrelationFunction",
    "ExponentialSum",
    "spectrum_from_correlation",
    "fourier_spectra",
    "DEFAULT_GRID",
]

# e^{-rate * tau_max} below this value ends the quadrature range
TAIL_CUTOFF = 1e-12
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_CHUNK = 4096


@dataclass(frozen=True)
class DetuningGrid:
    """Strictly increasing detunings (w - w0) in units of gamma."""

    detunings: np.ndarray
    uniform: bool = False

    def __post_init__(self):
        d = np.asarray(self.detunings, dtype=float).ravel()
        if d.size == 0:
            raise InvalidInputError("detuning grid is empty")
        if not np.all(np.isfinite(d)):
            raise InvalidInputError("detuning grid has non-finite entries")
        if d.size > 1 and np.any(np.diff(d) <= 0):
            raise InvalidInputError("detuning grid must be strictly increasing")
        d.setflags(write=False)
        object.__setattr__(self, "detunings", d)

    @classmethod
    def linspace(cls, lo: float = -8.0, hi: float = 8.0, points: int = 2001) -> "DetuningGrid":
        if points < 1 or not (math.isfinite(lo) and math.isfinite(hi)):
            raise InvalidInputError("grid needs finite bounds and at least one point")
        if points > 1 and hi <= lo:
            raise InvalidInputError("grid upper bound must exceed the lower bound")
        d = np.linspace(lo, hi, int(points))
        if lo == -hi:
            d = 0.5 * (d - d[::-1])  # exact mirror symmetry about 0
        return cls(d, uniform=True)

    @classmethod
    def parse(cls, spec: str) -> "DetuningGrid":
        """Parse ``"MIN:MAX:POINTS"``."""
        try:
            lo, hi, pts = spec.split(":")
            return cls.linspace(float(lo), float(hi), int(pts))
        except ValueError as exc:
            if isinstance(exc, InvalidInputError):
                raise
            raise InvalidInputError(f"grid must look like MIN:MAX:POINTS, got {spec!r}") from exc

    def __len__(self) -> int:
        return self.detunings.size

    def mirrored_pairs(self, atol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
        """Index pairs (i, j) with detunings[i] == -detunings[j]."""
        d = self.detunings
        hi = np.clip(np.searchsorted(d, -d), 0, d.size - 1)
        lo = np.clip(hi - 1, 0, d.size - 1)
        j = np.where(np.abs(d[lo] + d) < np.abs(d[hi] + d), lo, hi)
        ok = np.abs(d[j] + d) <= atol
        return np.nonzero(ok)[0], j[ok]


DEFAULT_GRID = DetuningGrid.linspace(-8.0, 8.0, 2001)


@dataclass(frozen=True)
class ExponentialSum:
    """w(tau) = sum_k amplitudes[k] * exp(-rates[k] * tau) for tau >= 0."""

    amplitudes: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.amplitudes, dtype=complex))
        r = np.atleast_1d(np.asarray(self.rates, dtype=complex))
        if a.shape != r.shape:
            raise InvalidInputError("amplitudes and rates differ in length")
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "rates", r)

    def __call__(self, tau):
        t = np.asarray(tau, dtype=float)
        out = np.exp(-np.multiply.outer(np.abs(t), self.rates)) @ self.amplitudes
        return np.where(t < 0, np.conj(out), out)

    @property
    def decay_rate(self) -> float:
        live = np.abs(self.amplitudes) > 0
        return float(np.min(self.rates[live].real)) if np.any(live) else math.inf

    def transform(self, detunings: np.ndarray) -> np.ndarray:
        """Exact (1/pi) Re int_0^inf e^{-i d tau} w(tau) dtau, still complex-typed."""
        d = np.asarray(detunings, dtype=float)
        return (1.0 / math.pi) * (1.0 / (np.add.outer(1j * d, self.rates))) @ self.amplitudes


@dataclass(frozen=True)
class CorrelationFunction:
    """Stationary correlation function sampled on ``tau_grid`` (tau >= 0).

    ``evaluator`` (vectorised, tau >= 0) is needed for the quadrature
    transform; ``decay_rate`` is the slowest decay constant.  Values at
    negative tau follow w(-tau) = conj(w(tau)).
    """

    tau_grid: np.ndarray
    values: np.ndarray
    kind: str = "combined"
    evaluator: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    decay_rate: float | None = None

    def __post_init__(self):
        if self.kind not in ("scattered", "interference", "combined"):
            raise InvalidInputError(f"unknown correlation kind {self.kind!r}")
        t = np.asarray(self.tau_grid, dtype=float)
        if np.any(t < 0):
            raise InvalidInputError("tau grid must be non-negative")
        object.__setattr__(self, "tau_grid", t)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))

    @classmethod
    def from_callable(cls, f: Callable, tau_grid, kind: str = "combined",
                      decay_rate: float | None = None) -> "CorrelationFunction":
        t = np.asarray(tau_grid, dtype=float)
        if decay_rate is None and isinstance(f, ExponentialSum):
            decay_rate = f.decay_rate
        return cls(t, f(t), kind, evaluator=f, decay_rate=decay_rate)

    def at(self, tau) -> np.ndarray:
        if self.evaluator is None:
            raise InvalidInputError("correlation function has no evaluator")
        t = np.asarray(tau, dtype=float)
        v = np.asarray(self.evaluator(np.abs(t)), dtype=complex)
        return np.where(t < 0, np.conj(v), v)


def _panel_sums(f, a: np.ndarray, b: np.ndarray, d: np.ndarray) -> np.ndarray:
    """16-point Gauss-Legendre value of int_a^b Re[e^{-i d t} f(t)] dt per panel; shape (k, p, nd)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = f(nodes.ravel())
    k = vals.shape[0]
    wv = vals.reshape(k, *nodes.shape) * (half[:, None] * _GL_WEIGHTS[None, :])
    out = np.empty((k, a.size, d.size))
    step = max(1, _CHUNK // _GL_NODES.size)
    for s in range(0, a.size, step):
        ph = nodes[s:s + step, :, None] * d[None, None, :]
        out[:, s:s + step] = (np.einsum("kpq,pqd->kpd", wv[:, s:s + step].real, np.cos(ph))
                              + np.einsum("kpq,pqd->kpd", wv[:, s:s + step].imag, np.sin(ph)))
    return out


def fourier_spectra(f: Callable[[np.ndarray], np.ndarray], decay_rate: float,
                    detunings: np.ndarray, tol: float = 1e-10, max_depth: int = 30,
                    return_info: bool = False):
    """Numerical (1/pi) Re int_0^inf e^{-i d tau} f(tau) dtau for several functions at once.

    ``f`` maps an array of tau to an array of shape (k, len(tau)) (or
    (len(tau),) for a single function).  The range is cut at ``tau_max``
    with exp(-decay_rate * tau_max) < 1e-12; the remaining tail is bounded
    by |f(tau_max)| / decay_rate.  Panels are integrated with 16-point
    Gauss-Legendre and bisected until a panel and its two halves agree to
    tol * width / tau_max for every detuning.
    """
    if decay_rate is None or not decay_rate > 0 or not math.isfinite(decay_rate):
        raise InvalidInputError("correlation function must decay (decay rate > 0)")
    d = np.asarray(detunings, dtype=float)
    tau_max = math.log(1.0 / TAIL_CUTOFF) / decay_rate

    def evaluate(nodes):
        v = np.asarray(f(nodes), dtype=complex)
        return v[None, :] if v.ndim == 1 else v

    dmax = float(np.max(np.abs(d))) if d.size else 0.0
    h0 = min(1.0, 8.0 / max(dmax, 1e-3), tau_max)
    edges = np.linspace(0.0, tau_max, max(1, int(math.ceil(tau_max / h0))) + 1)
    a, b = edges[:-1], edges[1:]
    coarse = _panel_sums(evaluate, a, b, d)
    total = np.zeros((coarse.shape[0], d.size))
    err_sum, evaluated, depth = 0.0, a.size, 0
    while a.size:
        m = 0.5 * (a + b)
        left = _panel_sums(evaluate, a, m, d)
        right = _panel_sums(evaluate, m, b, d)
        fine = left + right
        evaluated += 2 * a.size
        err = np.max(np.abs(fine - coarse), axis=(0, 2))
        ok = err <= tol * (b - a) / tau_max
        if depth >= max_depth:
            ok[:] = True
        total += fine[:, ok].sum(axis=1)
        err_sum += float(err[ok].sum())
        bad = ~ok
        a, b = np.concatenate([a[bad], m[bad]]), np.concatenate([m[bad], b[bad]])
        coarse = np.concatenate([left[:, bad], right[:, bad]], axis=1)
        depth += 1
    tail = float(np.max(np.abs(evaluate(np.array([tau_max]))))) / decay_rate
    result = total / math.pi
    if result.shape[0] == 1:
        result = result[0]
    if return_info:
        return result, {"tau_max": tau_max, "panels": evaluated, "error_estimate": err_sum / math.pi,
                        "tail_bound": tail / math.pi}
    return result


def spectrum_from_correlation(w: CorrelationFunction | ExponentialSum, grid: DetuningGrid,
                              method: str = "auto", tol: float = 1e-10) -> np.ndarray:
    """Spectrum S(d) = (1/pi) Re int_0^inf e^{-i d tau} w(tau) dtau on ``grid``.

    ``method`` is ``"exact"`` (exponential sums only), ``"quadrature"``, or
    ``"auto"`` (exact when possible).
    """
    f = w if isinstance(w, ExponentialSum) else w.evaluator
    if f is None:
        raise InvalidInputError("correlation function needs an evaluator to be transformed")
    rate = f.decay_rate if isinstance(f, ExponentialSum) else w.decay_rate
    if rate is None or not rate > 0:
        raise InvalidInputError("correlation function does not decay")
    if method == "auto":
        method = "exact" if isinstance(f, ExponentialSum) else "quadrature"
    if method == "exact":
        if not isinstance(f, ExponentialSum):
            raise InvalidInputError("exact transform requires an exponential sum")
        return f.transform(grid.detunings).real
    if method != "quadrature":
        raise InvalidInputError(f"unknown transform method {method!r}")
    return fourier_spectra(f, rate, grid.detunings, tol=tol)
