"""Master-equation oracle for the closed-form correlation functions.

Everything here is built from the atomic master equation

    d rho/dt = gamma (N+1) D[sigma-] rho + gamma N D[sigma+] rho
               - gamma M sigma+ rho sigma+ - gamma M* sigma- rho sigma-

with D[c] rho = c rho c^+ - {c^+ c, rho}/2.  Two-time correlators follow
from the quantum regression theorem: <A(tau) B(0)>_ss = Tr[A e^{L tau}(B rho_ss)].
The density operator is propagated numerically (adaptive Dormand-Prince RK45);
nothing in this module uses the closed-form correlation functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .channels import AggregateSqueezing, ChannelSqueezing
from .errors import DegenerateInputError, InvalidInputError
from .spectra import SpectrumDecomposition
from .transforms import DEFAULT_GRID, CorrelationFunction, DetuningGrid, fourier_spectra

__all__ = [
    "MasterEquationGenerator",
    "BlochState",
    "stationary_state",
    "evolve",
    "regression_correlator",
    "commutator_correlator",
    "oracle_scattered",
    "oracle_interference",
    "oracle_spectrum",
    "default_tau_grid",
]

RTOL = 1e-10
ATOL = 1e-12

# basis (|+>, |->): excited state first
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = SIGMA_PLUS.T.copy()
_OPS = {"sigma_plus": SIGMA_PLUS, "sigma_minus": SIGMA_MINUS}
_ALIASES = {"+": "sigma_plus", "sigma+": "sigma_plus", "σ⁺": "sigma_plus", "sp": "sigma_plus",
            "-": "sigma_minus", "sigma-": "sigma_minus", "σ⁻": "sigma_minus", "sm": "sigma_minus"}


def _op(tag: str) -> np.ndarray:
    key = _ALIASES.get(tag, tag)
    if key not in _OPS:
        raise InvalidInputError(f"unknown atomic operator tag {tag!r}")
    return _OPS[key]


def _vec(rho: np.ndarray) -> np.ndarray:
    return rho.reshape(-1, order="F")


def _unvec(v: np.ndarray) -> np.ndarray:
    return v.reshape(2, 2, order="F")


def _sandwich(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> a rho b for column-stacked rho."""
    return np.kron(b.T, a)


def _dissipator(c: np.ndarray) -> np.ndarray:
    eye = np.eye(2)
    cdc = c.conj().T @ c
    return _sandwich(c, c.conj().T) - 0.5 * (_sandwich(cdc, eye) + _sandwich(eye, cdc))


def default_tau_grid(gamma: float = 1.0, points: int = 400, tau_max: float = 15.0) -> np.ndarray:
    """tau = 0 plus ``points`` log-spaced values on [1e-3, tau_max] / gamma."""
    return np.concatenate([[0.0], np.logspace(-3, math.log10(tau_max), points)]) / gamma


@dataclass(frozen=True)
class MasterEquationGenerator:
    """Liouvillian of the squeezed-vacuum master equation (no coherent drive)."""

    gamma: float
    big_n: float
    big_m: complex

    @classmethod
    def from_aggregate(cls, agg: AggregateSqueezing) -> "MasterEquationGenerator":
        return cls(agg.gamma, agg.big_n, complex(agg.big_m))

    @cached_property
    def liouvillian(self) -> np.ndarray:
        g, n, m = self.gamma, self.big_n, self.big_m
        return (g * (n + 1) * _dissipator(SIGMA_MINUS)
                + g * n * _dissipator(SIGMA_PLUS)
                - g * m * _sandwich(SIGMA_PLUS, SIGMA_PLUS)
                - g * np.conj(m) * _sandwich(SIGMA_MINUS, SIGMA_MINUS))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return _unvec(self.liouvillian @ _vec(rho))

    def bloch_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Affine flow dv/dt = A v + b of v = (<sigma->, <sigma+>, <sigma+ sigma->).

        Derived from the Liouvillian using Tr rho = 1.
        """
        readout = np.array([_readout(o) for o in (SIGMA_MINUS, SIGMA_PLUS, SIGMA_PLUS @ SIGMA_MINUS)])
        # rho rebuilt from v with rho_-- = 1 - rho_++
        basis = np.zeros((4, 3), dtype=complex)
        basis[:, 0] = _vec(SIGMA_PLUS)   # <sigma-> = rho_{+-}
        basis[:, 1] = _vec(SIGMA_MINUS)  # <sigma+> = rho_{-+}
        basis[:, 2] = _vec(np.diag([1.0, -1.0]).astype(complex))
        offset = _vec(np.diag([0.0, 1.0]).astype(complex))
        lv = self.liouvillian
        return readout @ lv @ basis, readout @ lv @ offset

    def decay_constants(self) -> np.ndarray:
        """Decay constants of the dipole (sigma-+) sector of the flow, ascending."""
        a, _ = self.bloch_matrix()
        return np.sort(-np.linalg.eigvals(a[:2, :2]).real)

    @cached_property
    def slowest_decay(self) -> float:
        ev = np.linalg.eigvals(self.liouvillian)
        rates = -ev.real
        rates = rates[rates > 1e-12 * self.gamma]
        if rates.size == 0:
            raise DegenerateInputError("generator has no decaying modes")
        return float(rates.min())


@dataclass(frozen=True)
class BlochState:
    v: np.ndarray
    time: float
    rho: np.ndarray | None = None

    @property
    def sigma_minus(self) -> complex:
        return complex(self.v[0])

    @property
    def sigma_plus(self) -> complex:
        return complex(self.v[1])

    @property
    def excited_population(self) -> float:
        return float(self.v[2].real)


def _bloch_vector(rho: np.ndarray) -> np.ndarray:
    return np.array([np.trace(SIGMA_MINUS @ rho), np.trace(SIGMA_PLUS @ rho),
                     np.trace(SIGMA_PLUS @ SIGMA_MINUS @ rho)])


def stationary_state(gen: MasterEquationGenerator) -> BlochState:
    """Unique fixed point of the master equation."""
    lv = gen.liouvillian
    _, s, vh = np.linalg.svd(lv)
    if s[-2] <= 1e-12 * max(gen.gamma, 1.0) * max(1.0, gen.big_n + 1):
        raise DegenerateInputError("stationary state is not unique (narrow quadrature does not decay)")
    rho = _unvec(vh[-1].conj())
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)
    return BlochState(_bloch_vector(rho), math.inf, rho)


def _propagate(gen: MasterEquationGenerator, rho0: np.ndarray, t_max: float, method: str = "ode"):
    """Return a callable t -> stacked vec(rho(t)) for initial operators ``rho0`` (k, 2, 2)."""
    stack = np.array([_vec(r) for r in np.asarray(rho0).reshape(-1, 2, 2)]).T  # (4, k)
    lv = gen.liouvillian
    k = stack.shape[1]
    if method == "expm":
        def at(t):
            t = np.atleast_1d(np.asarray(t, dtype=float))
            return np.stack([expm(lv * ti) @ stack for ti in t], axis=-1)  # (4, k, n)
        return at
    if method != "ode":
        raise InvalidInputError(f"unknown propagation method {method!r}")
    big = np.kron(np.eye(k), lv)

    def rhs(_t, y):
        return big @ y

    sol = solve_ivp(rhs, (0.0, max(t_max, 1e-12)), stack.T.ravel(), method="RK45",
                    rtol=RTOL, atol=ATOL, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"master-equation integration failed: {sol.message}")

    def at(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        y = sol.sol(t)  # (4k, n)
        return y.reshape(k, 4, -1).transpose(1, 0, 2)

    return at


def evolve(gen: MasterEquationGenerator, rho0: np.ndarray, times, method: str = "ode") -> np.ndarray:
    """Density matrices rho(t) for each t in ``times`` (shape (n, 2, 2))."""
    times = np.asarray(times, dtype=float)
    at = _propagate(gen, np.asarray(rho0, dtype=complex), float(times.max()), method)
    vecs = at(times)[:, 0, :]
    return np.array([_unvec(vecs[:, i]) for i in range(times.size)])


def _readout(op: np.ndarray) -> np.ndarray:
    # Tr[op X] = sum_ij op_ji X_ij = vec(op^T) . vec(X)
    return _vec(op.T)


def _full_range(gen: MasterEquationGenerator) -> float:
    return math.log(1e12) / gen.slowest_decay


def _correlator(gen, inserts, left, tau_grid, method, t_end=None):
    """Tr[left e^{L tau} X] for each inserted operator X; returns (k, n) values and an evaluator."""
    tau = np.asarray(tau_grid, dtype=float)
    if np.any(tau < 0):
        raise InvalidInputError("tau grid must be non-negative")
    t_end = max(float(tau.max()) if tau.size else 0.0, t_end or 0.0)
    at = _propagate(gen, np.array(inserts), t_end, method)
    r = _readout(_op(left))

    def evaluator(t):
        return np.einsum("i,ikn->kn", r, at(t))

    return evaluator(tau), evaluator


def regression_correlator(gen: MasterEquationGenerator, left: str, right: str, tau_grid,
                          reverse: bool = False, method: str = "ode") -> CorrelationFunction:
    """Stationary correlator <A(tau) B(0)> (or <B(0) A(tau)> with ``reverse``).

    ``left`` names A and ``right`` names B, both from {"sigma_plus", "sigma_minus"}.
    """
    rho = stationary_state(gen).rho
    b = _op(right)
    x0 = rho @ b if reverse else b @ rho
    values, ev = _correlator(gen, [x0], left, tau_grid, method, _full_range(gen))
    return CorrelationFunction(tau_grid, values[0], "combined",
                               evaluator=lambda t: ev(t)[0], decay_rate=gen.slowest_decay)


def commutator_correlator(gen: MasterEquationGenerator, left: str, right: str, tau_grid,
                          method: str = "ode") -> CorrelationFunction:
    """<[A(tau), B(0)]>_ss = Tr[A e^{L tau}(B rho_ss - rho_ss B)]."""
    rho = stationary_state(gen).rho
    b = _op(right)
    values, ev = _correlator(gen, [b @ rho - rho @ b], left, tau_grid, method, _full_range(gen))
    return CorrelationFunction(tau_grid, values[0], "combined",
                               evaluator=lambda t: ev(t)[0], decay_rate=gen.slowest_decay)


def _channel_correlators(gen, channel, t_end, method):
    """Evaluator for (w_S, w_I) of ``channel`` built from three regression inserts."""
    rho = stationary_state(gen).rho
    inserts = [SIGMA_MINUS @ rho,                       # <sigma+(tau) sigma-(0)>
               SIGMA_MINUS @ rho - rho @ SIGMA_MINUS,   # <[sigma+(tau), sigma-(0)]>
               SIGMA_PLUS @ rho - rho @ SIGMA_PLUS]     # <[sigma+(tau), sigma+(0)]>
    _, ev = _correlator(gen, inserts, "sigma_plus", np.zeros(1), method, t_end)
    ga, na, ma = channel.gamma_alpha, channel.n_alpha, channel.m_alpha

    def both(t):
        c = ev(t)
        # only the sigma+(t1) b(t2) term survives for t1 >= t2
        return np.stack([ga * c[0], ga * (na * c[1] - ma * c[2])])

    return both


def oracle_scattered(gen: MasterEquationGenerator, gamma_alpha: float, tau_grid,
                     method: str = "ode") -> CorrelationFunction:
    """gamma_alpha <sigma+(tau) sigma-(0)>_ss from the regression theorem."""
    c = regression_correlator(gen, "sigma_plus", "sigma_minus", tau_grid, method=method)
    return CorrelationFunction(c.tau_grid, gamma_alpha * c.values, "scattered",
                               evaluator=lambda t: gamma_alpha * c.evaluator(t),
                               decay_rate=c.decay_rate)


def oracle_interference(gen: MasterEquationGenerator, channel: ChannelSqueezing, tau_grid,
                        method: str = "ode") -> CorrelationFunction:
    """Interference correlation from commutator correlators and (N_alpha, M_alpha).

    For tau = t1 - t2 >= 0 only <sigma+(t1) b(t2)> contributes, giving
    gamma_alpha <N_alpha [sigma+(tau), sigma-(0)] - M_alpha [sigma+(tau), sigma+(0)]>.
    """
    tau = np.asarray(tau_grid, dtype=float)
    both = _channel_correlators(gen, channel, float(tau.max()) if tau.size else 0.0, method)
    return CorrelationFunction(tau, both(tau)[1], "interference",
                               evaluator=lambda t: both(t)[1], decay_rate=gen.slowest_decay)


def oracle_spectrum(gen: MasterEquationGenerator, channel: ChannelSqueezing,
                    grid: DetuningGrid | None = None, include_background: bool = True,
                    method: str = "ode", tol: float = 1e-10) -> SpectrumDecomposition:
    """Channel spectrum (2*pi*S convention) by numerical Fourier transform of oracle correlators."""
    g = DEFAULT_GRID if grid is None else grid
    both = _channel_correlators(gen, channel, _full_range(gen), method)
    (s_part, i_part), info = fourier_spectra(both, gen.slowest_decay, g.detunings, tol=tol,
                                             return_info=True)
    scattered = 2 * math.pi * s_part
    interference = 2 * math.pi * i_part
    background = np.full(g.detunings.shape, channel.n_alpha if include_background else 0.0)
    total = background + scattered + interference
    return SpectrumDecomposition(g, background, scattered, interference, total,
                                 metadata={"quadrature": info, "method": method})
