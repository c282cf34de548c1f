"""Plane-wave model: an atom in free space under direction-dependent squeezing.

Field modes are labelled by a propagation direction k (unit vector) and a
polarization index lambda in {1, 2}.  The coupling of mode (k, lambda) is
proportional to |eps_{k,lambda} . d|^2, so the aggregate moments are sphere
integrals

    N = 3/(8 pi) int d^2k sum_lambda |eps . d|^2 N_{k,lambda}     (likewise M)

and the spectrum seen by a small detector of oriented area A at r0 has a
flat background (net incoming flux of the squeezed vacuum), a scattered part
with the dipole pattern 1 - |d . r0|^2 and an interference part that only
involves the squeezing of the modes travelling towards the detector.

Detunings are in the same units as the rates (units of gamma when gamma = 1).
All spectra use the 2*pi*S convention of :mod:`sqzspec.spectra`, multiplied
by hbar*omega0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import constants as sc
from scipy.interpolate import RegularGridInterpolator

from .channels import AggregateSqueezing
from .errors import InvalidInputError
from .spectra import DEFAULT_GRID, SpectrumDecomposition
from .transforms import DetuningGrid

__all__ = [
    "AtomDipole",
    "DirectionalSqueezing",
    "DetectorGeometry",
    "AnalyzerCone",
    "SphereRule",
    "polarization_basis",
    "sphere_rule",
    "aggregate_from_sphere",
    "direction_spectrum",
    "fixed_polarization_spectrum",
    "cone_aligned_reference",
    "scene_from_dict",
]

PROFILE_KINDS = ("uniform", "cone", "custom-grid")
_POLE_EPS = 1e-8


def _unit(v, what: str) -> np.ndarray:
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{what} has non-finite components")
    n = float(np.linalg.norm(a))
    if n == 0.0:
        raise InvalidInputError(f"{what} must be non-zero")
    return a / n


def polarization_basis(k_hat) -> tuple[np.ndarray, np.ndarray]:
    """Transverse polarization vectors (eps1, eps2) with (eps1, eps2, k) right-handed.

    eps1 = normalize(z x k), falling back to normalize(x x k) within 1e-8 of
    the poles; eps2 = k x eps1.  Accepts a single vector or an (n, 3) array.
    """
    k = np.asarray(k_hat, dtype=float)
    single = k.ndim == 1
    k = np.atleast_2d(k)
    norms = np.linalg.norm(k, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(k)):
        raise InvalidInputError("polarization basis needs a non-zero finite direction")
    k = k / norms[:, None]
    e1 = np.cross([0.0, 0.0, 1.0], k)
    n1 = np.linalg.norm(e1, axis=1)
    pole = n1 < _POLE_EPS
    if np.any(pole):
        e1[pole] = np.cross([1.0, 0.0, 0.0], k[pole])
        n1[pole] = np.linalg.norm(e1[pole], axis=1)
    e1 /= n1[:, None]
    e2 = np.cross(k, e1)
    return (e1[0], e2[0]) if single else (e1, e2)


@dataclass(frozen=True)
class AtomDipole:
    """Dipole orientation plus the scales entering the Poynting spectrum.

    ``hbar_omega0`` and ``wavelength`` only set prefactors; both default to
    1 (dimensionless mode).
    """

    d_hat: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    gamma_total: float = 1.0
    omega0: float = 1.0
    hbar_omega0: float = 1.0
    wavelength: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "d_hat", _unit(self.d_hat, "dipole orientation"))
        for name in ("gamma_total", "omega0", "hbar_omega0", "wavelength"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_si(cls, d_hat, omega0: float, dipole_moment: float,
                constants: dict | None = None) -> "AtomDipole":
        """Dipole with gamma from the Einstein A coefficient omega0^3 |d|^2 / (3 pi eps0 hbar c^3).

        ``constants`` may supply ``hbar``, ``epsilon_0`` and ``c``; missing
        entries are taken from CODATA via :mod:`scipy.constants`.
        """
        const = {"hbar": sc.hbar, "epsilon_0": sc.epsilon_0, "c": sc.c}
        const.update(constants or {})
        hbar, eps0, c = const["hbar"], const["epsilon_0"], const["c"]
        gamma = omega0 ** 3 * dipole_moment ** 2 / (3 * math.pi * eps0 * hbar * c ** 3)
        return cls(d_hat, gamma_total=gamma, omega0=omega0, hbar_omega0=hbar * omega0,
                   wavelength=2 * math.pi * c / omega0)


@dataclass(frozen=True)
class DirectionalSqueezing:
    """Direction- and polarization-resolved squeezing of the incoming vacuum.

    Every mode is in a pure squeezed state, so only N and arg M are given and
    |M| = sqrt(N(N+1)).

    * ``uniform``: N = n0, arg M = phase0 for every direction.
    * ``cone``: as uniform inside the cone of half-angle ``half_angle`` about
      ``axis`` and vacuum outside.  ``smoothing`` > 0 replaces the hard edge
      by a tanh ramp of that angular width.
    * ``custom-grid``: tabulated N and arg M on a (theta, phi) grid in the
      global frame (theta from +z, phi from +x), shape (2, n_theta, n_phi),
      interpolated bilinearly.

    ``polarizations`` lists the squeezed polarization indices.
    """

    kind: str = "uniform"
    n0: float = 0.0
    phase0: float = 0.0
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    half_angle: float = math.pi
    smoothing: float = 0.0
    polarizations: tuple[int, ...] = (1, 2)
    theta: np.ndarray | None = None
    phi: np.ndarray | None = None
    n_table: np.ndarray | None = None
    phase_table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise InvalidInputError(f"profile kind must be one of {PROFILE_KINDS}, got {self.kind!r}")
        if not (math.isfinite(self.n0) and self.n0 >= 0):
            raise InvalidInputError("n0 must be finite and >= 0")
        if not math.isfinite(self.phase0):
            raise InvalidInputError("phase0 must be finite")
        object.__setattr__(self, "axis", _unit(self.axis, "cone axis"))
        if not 0 <= self.half_angle <= math.pi:
            raise InvalidInputError("cone half-angle must lie in [0, pi]")
        if self.smoothing < 0:
            raise InvalidInputError("smoothing width must be >= 0")
        pols = tuple(int(p) for p in self.polarizations)
        if any(p not in (1, 2) for p in pols):
            raise InvalidInputError("polarization indices must be 1 or 2")
        object.__setattr__(self, "polarizations", pols)
        if self.kind == "custom-grid":
            self._check_table()

    def _check_table(self):
        if any(x is None for x in (self.theta, self.phi, self.n_table, self.phase_table)):
            raise InvalidInputError("custom-grid profile needs theta, phi, n and phase tables")
        th = np.asarray(self.theta, dtype=float)
        ph = np.asarray(self.phi, dtype=float)
        n = np.asarray(self.n_table, dtype=float)
        p = np.asarray(self.phase_table, dtype=float)
        shape = (2, th.size, ph.size)
        if n.shape != shape or p.shape != shape:
            raise InvalidInputError(f"custom-grid tables must have shape {shape}")
        if th.size < 2 or ph.size < 2 or np.any(np.diff(th) <= 0) or np.any(np.diff(ph) <= 0):
            raise InvalidInputError("theta and phi grids must be increasing with >= 2 points")
        if th[0] < 0 or th[-1] > math.pi or ph[-1] - ph[0] >= 2 * math.pi:
            raise InvalidInputError("theta must lie in [0, pi] and phi span less than 2 pi")
        if np.any(n < 0) or not (np.all(np.isfinite(n)) and np.all(np.isfinite(p))):
            raise InvalidInputError("custom-grid N must be finite and >= 0")
        for name, v in (("theta", th), ("phi", ph), ("n_table", n), ("phase_table", p)):
            object.__setattr__(self, name, v)

    @property
    def hard_edge(self) -> bool:
        return self.kind == "cone" and self.smoothing == 0 and 0 < self.half_angle < math.pi

    def _weight(self, k: np.ndarray) -> np.ndarray:
        if self.kind == "uniform":
            return np.ones(k.shape[0])
        angle = np.arccos(np.clip(k @ self.axis, -1.0, 1.0))
        if self.smoothing > 0:
            return 0.5 * (1.0 - np.tanh((angle - self.half_angle) / self.smoothing))
        return (angle <= self.half_angle).astype(float)

    def _table(self, k: np.ndarray, lam: int) -> tuple[np.ndarray, np.ndarray]:
        theta = np.arccos(np.clip(k[:, 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(k[:, 1], k[:, 0]) - self.phi[0], 2 * math.pi) + self.phi[0]
        ph_ext = np.append(self.phi, self.phi[0] + 2 * math.pi)
        pts = np.column_stack([np.clip(theta, self.theta[0], self.theta[-1]), phi])

        def interp(values):
            ext = np.concatenate([values, values[:, :1]], axis=1)
            return RegularGridInterpolator((self.theta, ph_ext), ext)(pts)

        n = np.maximum(interp(self.n_table[lam - 1]), 0.0)
        ph = self.phase_table[lam - 1]
        # interpolate the unit phasor so that 2 pi wraps are harmless
        phase = np.angle(interp(np.cos(ph)) + 1j * interp(np.sin(ph)))
        return n, phase

    def profile(self, k_hat, lam: int) -> tuple[np.ndarray, np.ndarray]:
        """(N, M) of the modes (k_hat, lam); k_hat may be one vector or an (n, 3) array."""
        if lam not in (1, 2):
            raise InvalidInputError(f"polarization index must be 1 or 2, got {lam}")
        k = np.atleast_2d(np.asarray(k_hat, dtype=float))
        k = k / np.linalg.norm(k, axis=1)[:, None]
        if lam not in self.polarizations:
            z = np.zeros(k.shape[0])
            return z, z.astype(complex)
        if self.kind == "custom-grid":
            n, phase = self._table(k, lam)
        else:
            n = self.n0 * self._weight(k)
            phase = np.full(k.shape[0], self.phase0)
        m = np.sqrt(n * (n + 1.0)) * np.exp(1j * phase)
        return n, m


@dataclass(frozen=True)
class DetectorGeometry:
    """Small flat detector of oriented area ``area_vector`` centred at ``r0``."""

    r0: np.ndarray
    area_vector: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r0, dtype=float).reshape(3)
        a = np.asarray(self.area_vector, dtype=float).reshape(3)
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(a))):
            raise InvalidInputError("detector position and area must be finite")
        if np.linalg.norm(r) == 0:
            raise InvalidInputError("detector cannot sit at the atom (r0 = 0)")
        object.__setattr__(self, "r0", r)
        object.__setattr__(self, "area_vector", a)

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.r0))

    @property
    def direction(self) -> np.ndarray:
        return self.r0 / self.distance

    @property
    def projected_area(self) -> float:
        """A . r0_hat; positive when the detector faces the atom."""
        return float(self.area_vector @ self.direction)


@dataclass(frozen=True)
class AnalyzerCone:
    """Direction-sensitive analyzer accepting incoming light with k within ``half_angle`` of ``axis``."""

    axis: np.ndarray
    half_angle: float

    def __post_init__(self):
        object.__setattr__(self, "axis", _unit(self.axis, "analyzer axis"))
        if not 0 < self.half_angle <= math.pi:
            raise InvalidInputError("analyzer half-angle must lie in (0, pi]")


@dataclass(frozen=True)
class SphereRule:
    """Product quadrature on (part of) the unit sphere: nodes (n, 3) and weights (n,)."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int


def sphere_rule(order: int, pole=(0.0, 0.0, 1.0), breaks: Sequence[float] = (),
                cos_min: float = -1.0) -> SphereRule:
    """Gauss-Legendre in u = cos(theta) about ``pole`` times a uniform trapezoid in phi.

    The u-range [cos_min, 1] is split at ``breaks`` (cosines of cone edges)
    with ``order`` Gauss nodes per piece; phi uses 2*order equispaced nodes.
    Integrands that are polynomial in u and trigonometric in phi on each
    piece are integrated exactly at modest order.
    """
    if order < 2:
        raise InvalidInputError(f"quadrature order must be >= 2, got {order}")
    a = _unit(pole, "quadrature pole")
    e1, e2 = polarization_basis(a)
    cuts = sorted({float(np.clip(b, cos_min, 1.0)) for b in breaks} | {cos_min, 1.0})
    x, w = np.polynomial.legendre.leggauss(order)
    us, wus = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0:
            continue
        us.append(0.5 * (hi + lo) + 0.5 * (hi - lo) * x)
        wus.append(0.5 * (hi - lo) * w)
    u, wu = np.concatenate(us), np.concatenate(wus)
    n_phi = 2 * order
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    s = np.sqrt(np.maximum(0.0, 1.0 - u * u))
    nodes = (u[:, None, None] * a
             + s[:, None, None] * (np.cos(phi)[None, :, None] * e1 + np.sin(phi)[None, :, None] * e2))
    weights = wu[:, None] * np.full(n_phi, 2 * math.pi / n_phi)[None, :]
    return SphereRule(nodes.reshape(-1, 3), weights.ravel(), order)


def _rule_for(sq: DirectionalSqueezing, order: int, analyzer: AnalyzerCone | None = None) -> SphereRule:
    if analyzer is not None and analyzer.half_angle < math.pi:
        breaks = []
        if sq.hard_edge and np.allclose(sq.axis, analyzer.axis, atol=1e-14):
            breaks.append(math.cos(sq.half_angle))
        return sphere_rule(order, analyzer.axis, breaks, cos_min=math.cos(analyzer.half_angle))
    if sq.kind == "cone":
        edge = [math.cos(sq.half_angle)] if 0 < sq.half_angle < math.pi else []
        return sphere_rule(order, sq.axis, edge)
    return sphere_rule(order)


def _dipole_weights(k: np.ndarray, d_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    e1, e2 = polarization_basis(k)
    return (e1 @ d_hat) ** 2, (e2 @ d_hat) ** 2


def _sphere_moments(dipole: AtomDipole, sq: DirectionalSqueezing, order: int) -> tuple[float, complex]:
    rule = _rule_for(sq, order)
    p1, p2 = _dipole_weights(rule.nodes, dipole.d_hat)
    n_tot, m_tot = 0.0, 0.0j
    for lam, p in ((1, p1), (2, p2)):
        n, m = sq.profile(rule.nodes, lam)
        n_tot += math.fsum(rule.weights * p * n)
        m_tot += complex(np.sum(rule.weights * p * m))
    scale = 3.0 / (8.0 * math.pi)
    return scale * n_tot, scale * m_tot


def aggregate_from_sphere(dipole: AtomDipole, sq: DirectionalSqueezing, order: int = 64
                          ) -> AggregateSqueezing:
    """Aggregate (gamma, M, N) seen by the dipole, by sphere quadrature.

    The complex sphere integral of M is rotated to the real axis and the
    rotation stored in ``phase_rotation``.  ``metadata`` reports the change
    against a half-order rule as an error estimate; orders below 4 are
    flagged there rather than rejected.
    """
    big_n, m_c = _sphere_moments(dipole, sq, order)
    coarse_n, coarse_m = _sphere_moments(dipole, sq, max(2, order // 2))
    agg = AggregateSqueezing.from_moments(big_n, abs(m_c), dipole.gamma_total,
                                          phase_rotation=float(np.angle(m_c)) if m_c != 0 else 0.0)
    meta = {"order": order, "nodes": 2 * order * order * (2 if sq.kind == "cone" else 1),
            "error_estimate": max(abs(big_n - coarse_n), abs(m_c - coarse_m)),
            "order_below_recommended": order < 4, "profile": sq.kind}
    return replace(agg, metadata=meta)


def cone_aligned_reference(n0: float, half_angle: float) -> float:
    """Aggregate N for a cone about d_hat: (3/4) n0 int_0^theta_c (1 - cos^2) sin = (3/4) n0 [(1-c) - (1-c^3)/3]."""
    c = math.cos(half_angle)
    return 0.75 * n0 * ((1.0 - c) - (1.0 - c ** 3) / 3.0)


def _lorentz(d, rate):
    return rate / (d * d + rate * rate)


def _background(dipole: AtomDipole, sq: DirectionalSqueezing, det: DetectorGeometry,
                analyzer: AnalyzerCone | None, order: int, lams: Sequence[int]) -> float:
    rule = _rule_for(sq, order, analyzer)
    flux = np.zeros(3)
    for lam in lams:
        n, _ = sq.profile(rule.nodes, lam)
        flux += (rule.weights * n) @ rule.nodes
    return dipole.hbar_omega0 * float(det.area_vector @ flux) / dipole.wavelength ** 2


def _parts(dipole, sq, det, agg, grid, analyzer, order, lams):
    g = DEFAULT_GRID if grid is None else (grid if isinstance(grid, DetuningGrid)
                                          else DetuningGrid(np.asarray(grid, dtype=float)))
    d = g.detunings
    r_hat = det.direction
    geometric = dipole.hbar_omega0 * 3.0 * det.projected_area / (8.0 * math.pi * det.distance ** 2)
    n, m, gamma = agg.big_n, agg.big_m, agg.gamma
    lp, lm = _lorentz(d, agg.gamma_plus), _lorentz(d, agg.gamma_minus)
    odd_shape = 2 * m * gamma ** 3 * d / ((d * d + agg.gamma_plus ** 2) * (d * d + agg.gamma_minus ** 2))
    e = polarization_basis(r_hat)
    rotation = np.exp(-1j * agg.phase_rotation)
    scattered = np.zeros_like(d)
    interference = np.zeros_like(d)
    per_pol = {}
    for lam in lams:
        p = float(e[lam - 1] @ dipole.d_hat) ** 2
        n_r, m_r = sq.profile(r_hat, lam)
        n_r, m_r = float(n_r[0]), complex(m_r[0]) * rotation
        scattered += geometric * n * gamma / (2 * n + 1) * p * (lp + lm)
        interference += geometric * p * (gamma / (2 * n + 1) * (lp * (-n_r - m_r.real) + lm * (-n_r + m_r.real))
                                         + odd_shape * m_r.imag)
        per_pol[lam] = {"weight": p, "n": n_r, "m": [m_r.real, m_r.imag]}
    background = np.full(d.shape, _background(dipole, sq, det, analyzer, order, lams))
    total = background + scattered + interference
    meta = {"geometric_prefactor": geometric, "distance": det.distance,
            "direction": r_hat.tolist(), "projected_area": det.projected_area,
            "faces_atom": det.projected_area > 0, "polarizations": per_pol,
            "quadrature_order": order,
            "analyzer": None if analyzer is None else {"axis": analyzer.axis.tolist(),
                                                       "half_angle": analyzer.half_angle}}
    return SpectrumDecomposition(g, background, scattered, interference, total,
                                 background_divergent=False, metadata=meta)


def direction_spectrum(dipole: AtomDipole, sq: DirectionalSqueezing, det: DetectorGeometry,
                       agg: AggregateSqueezing, grid: DetuningGrid | None = None,
                       analyzer: AnalyzerCone | None = None, order: int = 64
                       ) -> SpectrumDecomposition:
    """Poynting spectrum at the detector, split into background, scattered and interference.

    ``agg`` must come from :func:`aggregate_from_sphere` for the same dipole
    and profile.  The background is the net flux of incoming squeezed
    vacuum through the detector, restricted to ``analyzer`` if given.
    ``metadata['geometric_prefactor']`` is hbar*omega0 * 3 (A . r0_hat) / (8 pi r0^2).
    """
    return _parts(dipole, sq, det, agg, grid, analyzer, order, (1, 2))


def fixed_polarization_spectrum(dipole: AtomDipole, sq: DirectionalSqueezing, det: DetectorGeometry,
                                agg: AggregateSqueezing, grid: DetuningGrid | None = None,
                                lam: int = 1, analyzer: AnalyzerCone | None = None,
                                order: int = 64) -> SpectrumDecomposition:
    """Spectrum of polarization ``lam`` of the direction ``r0_hat`` only.

    The dipole factor 1 - |d . r0|^2 becomes |eps_lam . d|^2, so the two
    polarizations add up to :func:`direction_spectrum`.
    """
    if lam not in (1, 2):
        raise InvalidInputError(f"polarization index must be 1 or 2, got {lam}")
    return _parts(dipole, sq, det, agg, grid, analyzer, order, (lam,))


def _vec(obj, key, default=None):
    v = obj.get(key, default)
    if v is None:
        raise InvalidInputError(f"scene config is missing {key!r}")
    return np.asarray(v, dtype=float)


def _phase(obj: dict, default: float = 0.0) -> float:
    if "phase_pi" in obj:
        return float(obj["phase_pi"]) * math.pi
    return float(obj.get("phase", default))


def scene_from_dict(cfg: dict) -> tuple[AtomDipole, DirectionalSqueezing, DetectorGeometry,
                                        AnalyzerCone | None, int]:
    """Build (dipole, profile, detector, analyzer, order) from a scene config mapping.

    Angles are in radians; ``phase_pi`` may replace ``phase`` to give a phase
    in units of pi.
    """
    try:
        dip = cfg.get("dipole", {})
        if "si" in dip:
            si = dip["si"]
            dipole = AtomDipole.from_si(_vec(dip, "d_hat", [0, 0, 1]), float(si["omega0"]),
                                        float(si["dipole_moment"]), si.get("constants"))
        else:
            dipole = AtomDipole(_vec(dip, "d_hat", [0, 0, 1]), float(dip.get("gamma", 1.0)),
                                float(dip.get("omega0", 1.0)), float(dip.get("hbar_omega0", 1.0)),
                                float(dip.get("wavelength", 1.0)))
        prof = cfg.get("profile", {"kind": "uniform"})
        kind = prof.get("kind", "uniform")
        kwargs = dict(kind=kind, n0=float(prof.get("n0", 0.0)), phase0=_phase(prof),
                      polarizations=tuple(prof.get("polarizations", (1, 2))))
        if kind == "cone":
            kwargs.update(axis=_vec(prof, "axis", [0, 0, 1]), half_angle=float(prof["half_angle"]),
                          smoothing=float(prof.get("smoothing", 0.0)))
        elif kind == "custom-grid":
            kwargs.update(theta=_vec(prof, "theta"), phi=_vec(prof, "phi"),
                          n_table=_vec(prof, "n"), phase_table=_vec(prof, "phase"))
        sq = DirectionalSqueezing(**kwargs)
        d = cfg.get("detector", {})
        det = DetectorGeometry(_vec(d, "r0"), _vec(d, "area"))
        an = cfg.get("analyzer")
        analyzer = None if an is None else AnalyzerCone(_vec(an, "axis"), float(an["half_angle"]))
        order = int(cfg.get("order", 64))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"bad scene config: {exc}") from exc
    return dipole, sq, det, analyzer, order
