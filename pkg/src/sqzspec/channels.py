"""Parameter algebra for multi-channel squeezed white noise.

Each channel ``alpha`` carries a mean photon number ``N_alpha``, a complex
squeezing moment ``M_alpha`` and a coupling rate ``gamma_alpha``.  The atom
only sees the rate-weighted aggregates

    gamma = sum gamma_alpha
    M     = sum (gamma_alpha / gamma) M_alpha
    N     = sum (gamma_alpha / gamma) N_alpha

which obey |M|^2 <= N(N+1).  By convention a common phase is removed from
all channel moments so that the aggregate ``M`` is real and non-negative;
the removed phase is kept as ``phase_rotation``.
"""
from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InfeasibleError, InvalidInputError

__all__ = [
    "ChannelSqueezing",
    "AggregateSqueezing",
    "ChannelSet",
    "ValidationReport",
    "aggregate",
    "validate_channel",
    "max_channel_weight",
    "realize_target",
    "linewidth_expansion",
    "pure_channel",
    "random_pure_channel_set",
    "channel_set_from_json",
    "channel_set_to_json",
    "aggregate_to_dict",
]

# Relative slack allowed on |M|^2 <= N(N+1) before a state is declared unphysical.
MOMENT_TOL = 1e-9
BISECTION_TOL = 1e-12


@dataclass(frozen=True)
class ChannelSqueezing:
    """Squeezed-reservoir moments of one channel."""

    n_alpha: float
    m_alpha: complex
    gamma_alpha: float

    def __post_init__(self):
        n, g = float(self.n_alpha), float(self.gamma_alpha)
        if not (math.isfinite(n) and math.isfinite(g) and cmath.isfinite(complex(self.m_alpha))):
            raise InvalidInputError("channel parameters must be finite")
        if n < 0:
            raise InvalidInputError(f"n_alpha must be >= 0, got {n}")
        if g < 0:
            raise InvalidInputError(f"gamma_alpha must be >= 0, got {g}")
        object.__setattr__(self, "n_alpha", n)
        object.__setattr__(self, "gamma_alpha", g)
        object.__setattr__(self, "m_alpha", complex(self.m_alpha))

    @property
    def phase(self) -> float:
        return cmath.phase(self.m_alpha)

    def rotated(self, angle: float) -> "ChannelSqueezing":
        """Return the channel with ``M_alpha`` multiplied by exp(-i angle)."""
        return replace(self, m_alpha=self.m_alpha * cmath.exp(-1j * angle))


def pure_channel(n_alpha: float, phase: float, gamma_alpha: float) -> ChannelSqueezing:
    """Pure-state channel: |M_alpha| = sqrt(N_alpha (N_alpha + 1)), arg M_alpha = phase."""
    modulus = math.sqrt(n_alpha * (n_alpha + 1.0)) if n_alpha > 0 else 0.0
    return ChannelSqueezing(n_alpha, modulus * cmath.exp(1j * phase), gamma_alpha)


@dataclass(frozen=True)
class AggregateSqueezing:
    """Effective reservoir parameters entering the atomic master equation.

    ``gamma_plus`` and ``gamma_minus`` are the decay rates (N +/- M + 1/2) gamma
    of the two quadratures of the atomic dipole.
    """

    gamma: float
    big_m: float
    big_n: float
    gamma_plus: float
    gamma_minus: float
    phase_rotation: float = 0.0
    metadata: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_moments(cls, big_n: float, big_m: float, gamma: float = 1.0,
                     phase_rotation: float = 0.0) -> "AggregateSqueezing":
        big_n, big_m, gamma = float(big_n), float(big_m), float(gamma)
        if gamma <= 0:
            raise InvalidInputError(f"gamma must be > 0, got {gamma}")
        if big_n < 0 or big_m < 0:
            raise InvalidInputError("aggregate N and M must be >= 0 (M real by convention)")
        bound = big_n * (big_n + 1.0)
        if big_m * big_m > bound + MOMENT_TOL * max(1.0, bound):
            raise InfeasibleError(
                f"|M|^2 = {big_m * big_m:.6g} exceeds N(N+1) = {bound:.6g}")
        return cls(gamma=gamma, big_m=big_m, big_n=big_n,
                   gamma_plus=(big_n + big_m + 0.5) * gamma,
                   gamma_minus=(big_n - big_m + 0.5) * gamma,
                   phase_rotation=phase_rotation)

    @classmethod
    def from_ratio(cls, big_n: float, m_squared_ratio: float, gamma: float = 1.0) -> "AggregateSqueezing":
        """Aggregate with M^2 = ratio * N(N+1), the parametrisation used for the figures."""
        if not 0.0 <= m_squared_ratio <= 1.0:
            raise InfeasibleError(f"M^2/[N(N+1)] must lie in [0, 1], got {m_squared_ratio}")
        return cls.from_moments(big_n, math.sqrt(m_squared_ratio * big_n * (big_n + 1.0)), gamma)

    @property
    def m_ratio(self) -> float:
        """M / sqrt(N(N+1)), zero for the plain vacuum."""
        bound = self.big_n * (self.big_n + 1.0)
        return self.big_m / math.sqrt(bound) if bound > 0 else 0.0


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    pure: bool
    excess: float
    tol: float
    message: str = ""


@dataclass(frozen=True)
class ChannelSet:
    """Ordered, non-empty collection of channels.

    ``phase_rotation`` records the common phase already removed from the
    stored moments (zero for sets as supplied by the user).
    """

    channels: tuple[ChannelSqueezing, ...]
    phase_rotation: float = 0.0
    allow_mixed: bool = False
    tol: float = field(default=MOMENT_TOL, compare=False)

    def __post_init__(self):
        chans = tuple(self.channels)
        object.__setattr__(self, "channels", chans)
        if not chans:
            raise InvalidInputError("channel set is empty")
        if not any(c.gamma_alpha > 0 for c in chans):
            raise InvalidInputError("at least one channel needs gamma_alpha > 0")
        for i, c in enumerate(chans):
            report = validate_channel(c, pure=not self.allow_mixed, tol=self.tol)
            if not report.passed:
                raise InvalidInputError(f"channel {i}: {report.message}")

    def __len__(self) -> int:
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    def __getitem__(self, i) -> ChannelSqueezing:
        return self.channels[i]

    @property
    def gamma(self) -> float:
        return math.fsum(c.gamma_alpha for c in self.channels)

    def _weighted_m(self) -> complex:
        re = math.fsum(c.gamma_alpha * c.m_alpha.real for c in self.channels)
        im = math.fsum(c.gamma_alpha * c.m_alpha.imag for c in self.channels)
        return complex(re, im) / self.gamma

    def in_phase_convention(self) -> "ChannelSet":
        """Rotate every ``M_alpha`` by a common phase so the aggregate ``M`` is real and >= 0."""
        m = self._weighted_m()
        angle = cmath.phase(m) if m != 0 else 0.0
        return ChannelSet(tuple(c.rotated(angle) for c in self.channels),
                          phase_rotation=self.phase_rotation + angle,
                          allow_mixed=self.allow_mixed, tol=self.tol)


def validate_channel(c: ChannelSqueezing, pure: bool = True, tol: float = MOMENT_TOL) -> ValidationReport:
    """Check the moment constraint of a single channel.

    Pure channels need |M|^2 = N(N+1), mixed ones |M|^2 <= N(N+1); both
    within ``tol`` relative to max(1, N(N+1)).
    """
    if tol <= 0:
        raise InvalidInputError("tol must be > 0")
    if c.n_alpha < 0 or c.gamma_alpha < 0:
        raise InvalidInputError("negative n_alpha or gamma_alpha")
    bound = c.n_alpha * (c.n_alpha + 1.0)
    excess = abs(c.m_alpha) ** 2 - bound
    scale = tol * max(1.0, bound)
    if pure:
        ok = abs(excess) <= scale
        msg = "" if ok else f"pure state needs |M|^2 = N(N+1); off by {excess:.3g}"
    else:
        ok = excess <= scale
        msg = "" if ok else f"|M|^2 exceeds N(N+1) by {excess:.3g}"
    return ValidationReport(passed=ok, pure=pure, excess=excess, tol=tol, message=msg)


def aggregate(channel_set: ChannelSet) -> AggregateSqueezing:
    """Rate-weighted aggregate (gamma, M, N, gamma_+, gamma_-) of a channel set.

    The returned ``phase_rotation`` is the total phase that has to be
    removed from the channel moments (on top of any rotation the set
    already carries) to make ``M`` real and non-negative.
    """
    if not isinstance(channel_set, ChannelSet):
        channel_set = ChannelSet(tuple(channel_set))
    gamma = channel_set.gamma
    if gamma <= 0:
        raise InvalidInputError("total gamma must be > 0")
    m = channel_set._weighted_m()
    n = math.fsum(c.gamma_alpha * c.n_alpha for c in channel_set.channels) / gamma
    angle = cmath.phase(m) if m != 0 else 0.0
    big_m = abs(m)
    return AggregateSqueezing(
        gamma=gamma, big_m=big_m, big_n=n,
        gamma_plus=(n + big_m + 0.5) * gamma,
        gamma_minus=(n - big_m + 0.5) * gamma,
        phase_rotation=channel_set.phase_rotation + angle,
    )


def _remainder_slack(w: float, big_n: float, big_m: float, n_a: float, m_a: complex) -> float:
    n_rest = big_n - w * n_a
    return n_rest * (n_rest + 1.0 - w) - abs(big_m - w * m_a) ** 2


def max_channel_weight(target: AggregateSqueezing, channel_n: float, channel_phase: float,
                       tol: float = BISECTION_TOL) -> float:
    """Largest ``gamma_alpha / gamma`` a pure channel can take inside ``target``.

    The rest of the channel set is treated as a single effective reservoir of
    weight ``1 - w`` which must itself satisfy |M_r|^2 <= N_r(N_r + 1).  In
    terms of ``w`` that reads

        |M - w M_a|^2 <= (N - w N_a)(N - w N_a + 1 - w),   N - w N_a >= 0,

    which is solved by bisection on [0, 1] to absolute tolerance ``tol``.
    At ``w = 1`` nothing is left over, so the channel has to coincide with
    the target.
    """
    if channel_n < 0:
        raise InvalidInputError("channel_n must be >= 0")
    big_n, big_m = target.big_n, target.big_m
    m_a = pure_channel(channel_n, channel_phase, 1.0).m_alpha
    scale = max(1.0, big_n * (big_n + 1.0), channel_n * (channel_n + 1.0))
    # the target itself is accepted with the usual moment tolerance, the
    # root in w is located with a rounding-level one
    target_tol = MOMENT_TOL * max(1.0, big_n * (big_n + 1.0))
    slack_tol = max(64 * np.finfo(float).eps * scale, -min(0.0, _remainder_slack(0.0, big_n, big_m, 0.0, 0j)))

    def feasible(w: float) -> bool:
        if w >= 1.0:
            return abs(big_n - channel_n) <= target_tol and abs(big_m - m_a) <= target_tol
        if big_n - w * channel_n < -slack_tol:
            return False
        return _remainder_slack(w, big_n, big_m, channel_n, m_a) >= -slack_tol

    if _remainder_slack(0.0, big_n, big_m, channel_n, m_a) < -target_tol:
        raise InfeasibleError(
            f"target violates |M|^2 <= N(N+1): M^2 = {big_m ** 2:.6g}, "
            f"N(N+1) = {big_n * (big_n + 1):.6g}")
    if feasible(1.0):
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def realize_target(target: AggregateSqueezing, channel_n: float, channel_phase: float,
                   weight: float | None = None) -> tuple[ChannelSet, float]:
    """Build a two-channel set with the given observed channel and aggregate ``target``.

    The observed pure channel gets weight ``w`` (the maximal one by default);
    the remainder is a single effective channel carrying the rest of N and M.
    Returns the set (observed channel first, in the target's phase
    convention) and ``w``.
    """
    w = max_channel_weight(target, channel_n, channel_phase) if weight is None else float(weight)
    if not 0.0 <= w <= 1.0:
        raise InvalidInputError(f"channel weight must lie in [0, 1], got {w}")
    gamma = target.gamma
    observed = pure_channel(channel_n, channel_phase, w * gamma)
    chans = [observed]
    rest = 1.0 - w
    if rest > 1e-12:
        n_r = (target.big_n - w * channel_n) / rest
        m_r = (target.big_m - w * observed.m_alpha) / rest
        slack = MOMENT_TOL * max(1.0, target.big_n * (target.big_n + 1.0))
        if target.big_n - w * channel_n < -slack:
            raise InfeasibleError(f"weight {w:.6g} leaves N - w N_alpha < 0 for the remainder")
        n_r = max(n_r, 0.0)
        bound = n_r * (n_r + 1.0)
        if _remainder_slack(w, target.big_n, target.big_m, channel_n, observed.m_alpha) < -slack:
            raise InfeasibleError(
                f"weight {w:.6g} violates |M - w M_alpha|^2 <= (N - w N_alpha)(N - w N_alpha + 1 - w)")
        if abs(m_r) ** 2 > bound:
            # boundary case: clip rounding excess onto the pure-state surface
            m_r *= math.sqrt(bound) / abs(m_r) if abs(m_r) > 0 else 0.0
        chans.append(ChannelSqueezing(n_r, m_r, rest * gamma))
    elif abs(target.big_n - channel_n) + abs(target.big_m - observed.m_alpha) > MOMENT_TOL:
        raise InfeasibleError("weight 1 requires the channel to reproduce the target N and M")
    return ChannelSet(tuple(chans), allow_mixed=True), w


def linewidth_expansion(n: float, m_ratio: float, gamma: float = 1.0) -> tuple[float, float]:
    """Exact narrow linewidth and its two-term large-N expansion.

    For M = m sqrt(N(N+1)) the exact rate is (N - M + 1/2) gamma; the
    expansion is [(N + 1/2)(1 - m) + m/(8N)] gamma.  The exact value is
    evaluated in a cancellation-free form.
    """
    if n <= 0:
        raise InvalidInputError("n must be > 0")
    if not 0.0 <= m_ratio <= 1.0:
        raise InvalidInputError("m_ratio must lie in [0, 1]")
    if m_ratio == 0.0:
        return (n + 0.5) * gamma, (n + 0.5) * gamma
    nn1 = n * (n + 1.0)
    exact = (nn1 * (1.0 - m_ratio * m_ratio) + 0.25) / (n + 0.5 + m_ratio * math.sqrt(nn1))
    asymptotic = (n + 0.5) * (1.0 - m_ratio) + m_ratio / (8.0 * n)
    return exact * gamma, asymptotic * gamma


def random_pure_channel_set(rng: np.random.Generator, n_channels: int | None = None,
                            n_max: float = 8.0, max_channels: int = 4) -> ChannelSet:
    """Random pure channel set with sum gamma_alpha = 1, N_alpha ~ U[0, n_max], uniform phases."""
    k = int(rng.integers(1, max_channels + 1)) if n_channels is None else int(n_channels)
    weights = rng.uniform(0.05, 1.0, size=k)
    weights /= weights.sum()
    ns = rng.uniform(0.0, n_max, size=k)
    phases = rng.uniform(0.0, 2 * np.pi, size=k)
    return ChannelSet(tuple(pure_channel(float(n), float(p), float(w))
                            for n, p, w in zip(ns, phases, weights)))


# --- JSON interchange -------------------------------------------------------

def _channel_from_obj(obj: dict) -> ChannelSqueezing:
    try:
        re, im = obj["m_alpha"]
        return ChannelSqueezing(float(obj["n_alpha"]), complex(float(re), float(im)),
                                float(obj["gamma_alpha"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed channel entry {obj!r}") from exc


def channel_set_from_json(data: str | Sequence[dict] | dict, allow_mixed: bool = False,
                          tol: float = MOMENT_TOL) -> ChannelSet:
    """Parse ``[{n_alpha, m_alpha: [re, im], gamma_alpha}, ...]`` (or ``{"channels": [...]}``)."""
    if isinstance(data, str):
        data = json.loads(data)
    if isinstance(data, dict):
        allow_mixed = bool(data.get("allow_mixed", allow_mixed))
        data = data.get("channels", [])
    return ChannelSet(tuple(_channel_from_obj(o) for o in data), allow_mixed=allow_mixed, tol=tol)


def channel_set_to_json(channel_set: Iterable[ChannelSqueezing], indent: int | None = None) -> str:
    rows = [{"n_alpha": c.n_alpha, "m_alpha": [c.m_alpha.real, c.m_alpha.imag],
             "gamma_alpha": c.gamma_alpha} for c in channel_set]
    return json.dumps(rows, indent=indent)


def aggregate_to_dict(agg: AggregateSqueezing) -> dict:
    return {"gamma": agg.gamma, "big_m": agg.big_m, "big_n": agg.big_n,
            "gamma_plus": agg.gamma_plus, "gamma_minus": agg.gamma_minus,
            "phase_rotation_rad": agg.phase_rotation}
