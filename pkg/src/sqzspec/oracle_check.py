"""Closed form versus master-equation oracle: the cross-check harness behind ``oracle-check``."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .bloch_oracle import (
    MasterEquationGenerator,
    default_tau_grid,
    oracle_interference,
    oracle_scattered,
    oracle_spectrum,
)
from .channels import AggregateSqueezing, ChannelSet, random_pure_channel_set, realize_target
from .spectra import DEFAULT_GRID, channel_spectrum, observe, w_interference, w_scattered
from .transforms import DetuningGrid

__all__ = ["CheckResult", "CORRELATOR_TOL", "SPECTRUM_TOL", "check_channel", "figure3_set",
           "run_oracle_check"]

CORRELATOR_TOL = 1e-8  # times gamma_alpha
SPECTRUM_TOL = 1e-6


@dataclass(frozen=True)
class CheckResult:
    test: str
    max_dev: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.max_dev < self.tol)

    def to_dict(self) -> dict:
        return {"test": self.test, "max_dev": self.max_dev, "tol": self.tol, "pass": self.passed}


def check_channel(channel_set: ChannelSet, index: int = 0, label: str = "set",
                  grid: DetuningGrid | None = None, tau_grid=None, mutate: bool = False,
                  spectra: bool = True) -> list[CheckResult]:
    """Compare oracle correlators (and spectra) with the closed forms for one channel.

    ``mutate`` corrupts gamma_+ of the closed-form side by 1 % to show that
    the harness detects a wrong formula.
    """
    agg, channel = observe(channel_set, index)
    gen = MasterEquationGenerator.from_aggregate(agg)
    closed = replace(agg, gamma_plus=agg.gamma_plus * 1.01) if mutate else agg
    tau = default_tau_grid(agg.gamma) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    ga = channel.gamma_alpha
    tol_c = CORRELATOR_TOL * ga if ga > 0 else CORRELATOR_TOL
    out = [
        CheckResult(f"{label}/correlator_scattered",
                    float(np.max(np.abs(oracle_scattered(gen, ga, tau).values - w_scattered(closed, ga, tau)))),
                    tol_c),
        CheckResult(f"{label}/correlator_interference",
                    float(np.max(np.abs(oracle_interference(gen, channel, tau).values
                                        - w_interference(closed, channel, tau)))),
                    tol_c),
    ]
    if spectra:
        g = DEFAULT_GRID if grid is None else grid
        ref = channel_spectrum(closed, channel, g)
        orc = oracle_spectrum(gen, channel, g)
        out.append(CheckResult(f"{label}/spectrum", float(np.max(np.abs(orc.total - ref.total))),
                               SPECTRUM_TOL))
    return out


def figure3_set(zeta: float = 1.0) -> ChannelSet:
    """Two-channel realisation of the N = 5, M^2 = 0.98 N(N+1), arg M_alpha = pi configuration."""
    target = AggregateSqueezing.from_ratio(5.0, 0.98)
    n_alpha = (1 + zeta / 1000) * 25.0 / 11.0
    cs, _ = realize_target(target, n_alpha, math.pi)
    return cs


def run_oracle_check(n_random: int = 20, seed: int = 0, include_fig3: bool = True,
                     mutate: bool = False, spectra: bool = True,
                     grid: DetuningGrid | None = None) -> dict:
    """Run all comparisons; returns {"tests": [...], "pass": bool, "runtime_s": float}."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    results: list[CheckResult] = []
    for i in range(n_random):
        cs = random_pure_channel_set(rng)
        idx = int(rng.integers(len(cs)))
        results += check_channel(cs, idx, f"random{i:02d}", grid=grid, mutate=mutate, spectra=spectra)
    if include_fig3:
        results += check_channel(figure3_set(), 0, "fig3", grid=grid, mutate=mutate, spectra=spectra)
    return {"tests": [r.to_dict() for r in results],
            "pass": all(r.passed for r in results),
            "seed": seed,
            "mutated": mutate,
            "runtime_s": time.perf_counter() - start}
