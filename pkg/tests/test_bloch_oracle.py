import ast
import math
from pathlib import Path

import numpy as np
import pytest

import sqzspec.bloch_oracle as bo
from sqzspec.bloch_oracle import (
    MasterEquationGenerator,
    commutator_correlator,
    default_tau_grid,
    evolve,
    oracle_interference,
    oracle_scattered,
    oracle_spectrum,
    regression_correlator,
    stationary_state,
)
from sqzspec.channels import AggregateSqueezing, ChannelSqueezing, pure_channel, realize_target
from sqzspec.errors import DegenerateInputError, InvalidInputError
from sqzspec.features import analyze, scan_grid
from sqzspec.spectra import channel_spectrum, observe, w_interference, w_scattered


def generator(n, ratio=0.0, phase=0.0):
    m = math.sqrt(ratio * n * (n + 1))
    return MasterEquationGenerator(1.0, n, m * np.exp(1j * phase))


def test_oracle_does_not_use_closed_forms():
    tree = ast.parse(Path(bo.__file__).read_text())
    imported = {(node.module, a.name) for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)
                for a in node.names}
    from_spectra = {name for mod, name in imported if mod == "spectra"}
    assert from_spectra <= {"SpectrumDecomposition"}
    src = Path(bo.__file__).read_text()
    for name in ("w_scattered", "w_interference", "channel_spectrum", "scattered_correlation"):
        assert name not in src


class TestGenerator:
    def test_trace_preserved(self):
        lv = generator(1.3, 0.6, 0.4).liouvillian
        trace_row = bo._vec(np.eye(2))
        np.testing.assert_allclose(trace_row @ lv, 0, atol=1e-14)

    def test_hermiticity_and_trace_along_flow(self):
        gen = generator(0.8, 0.9, 1.1)
        rho0 = np.array([[0.3, 0.2 - 0.1j], [0.2 + 0.1j, 0.7]])
        times = np.linspace(0, 20, 41)
        rhos = evolve(gen, rho0, times)
        np.testing.assert_allclose(np.trace(rhos, axis1=1, axis2=2), 1, atol=1e-10)
        np.testing.assert_allclose(rhos, np.conj(np.transpose(rhos, (0, 2, 1))), atol=1e-10)
        pops = rhos[:, 0, 0].real
        assert np.all((pops >= -1e-12) & (pops <= 1 + 1e-12))

    @pytest.mark.parametrize("n,ratio", [(0.25, 0.75), (5.0, 0.98), (2.0, 0.0), (0.0, 0.0), (3.0, 1.0)])
    def test_decay_constants(self, n, ratio):
        agg = AggregateSqueezing.from_ratio(n, ratio)
        got = MasterEquationGenerator.from_aggregate(agg).decay_constants()
        np.testing.assert_allclose(got, [agg.gamma_minus, agg.gamma_plus], atol=1e-10)

    def test_bloch_matrix_structure(self):
        gen = generator(0.25, 0.75)
        a, b = gen.bloch_matrix()
        m = gen.big_m
        np.testing.assert_allclose(a[:2, :2], [[-0.75, -m], [-np.conj(m), -0.75]], atol=1e-14)
        assert a[2, 2].real == pytest.approx(-1.5)
        assert b[2].real == pytest.approx(0.25)

    def test_population_relaxation_rate(self):
        n = 0.7
        gen = generator(n, 0.5, 0.3)
        times = np.linspace(0.2, 3, 40)
        pops = evolve(gen, np.diag([0.0, 1.0]), times)[:, 0, 0].real
        y = np.log(np.abs(pops - n / (2 * n + 1)))
        slope, icpt = np.polyfit(times, y, 1)
        assert slope == pytest.approx(-(2 * n + 1), abs=1e-6)
        assert np.max(np.abs(y - (slope * times + icpt))) < 1e-6

    def test_ode_and_expm_agree(self):
        gen = generator(1.5, 0.9, 0.2)
        times = np.linspace(0, 8, 9)
        rho0 = np.diag([1.0, 0.0]).astype(complex)
        np.testing.assert_allclose(evolve(gen, rho0, times), evolve(gen, rho0, times, method="expm"),
                                   atol=1e-10)


class TestStationaryState:
    def test_vacuum(self):
        st = stationary_state(generator(0.0))
        assert st.excited_population == pytest.approx(0.0, abs=1e-15)

    def test_figure1(self):
        assert stationary_state(generator(0.25, 0.75)).excited_population == pytest.approx(1 / 6, abs=1e-14)

    def test_independent_of_m(self):
        pops = [stationary_state(generator(5.0, r, 0.3)).excited_population for r in (0, 0.5, 0.98)]
        np.testing.assert_allclose(pops, 5 / 11, atol=1e-12)

    def test_coherences_vanish(self):
        st = stationary_state(generator(2.0, 0.9, 1.0))
        assert abs(st.sigma_minus) < 1e-14 and abs(st.sigma_plus) < 1e-14

    def test_degenerate_generator(self):
        # gamma_- = N - M + 1/2 = 0 lies beyond the physical boundary
        with pytest.raises(DegenerateInputError):
            stationary_state(MasterEquationGenerator(1.0, 0.0, 0.5))


class TestRegression:
    def test_normal_order_correlator(self, fig1_target):
        gen = MasterEquationGenerator.from_aggregate(fig1_target)
        tau = np.linspace(0, 10, 101)
        c = regression_correlator(gen, "sigma_plus", "sigma_minus", tau)
        np.testing.assert_allclose(c.values, w_scattered(fig1_target, 1.0, tau), atol=1e-8)
        assert c.values[0] == pytest.approx(1 / 6, abs=1e-12)

    def test_anomalous_correlator_needs_squeezing(self):
        c = regression_correlator(generator(0.8), "sigma_minus", "sigma_minus", np.linspace(0, 5, 11))
        np.testing.assert_allclose(c.values, 0, atol=1e-15)
        c = regression_correlator(generator(0.8, 0.5), "sigma_minus", "sigma_minus", np.linspace(0, 5, 11))
        assert np.max(np.abs(c.values)) > 1e-3

    def test_reverse_order(self, fig1_target):
        gen = MasterEquationGenerator.from_aggregate(fig1_target)
        c = regression_correlator(gen, "sigma_plus", "sigma_minus", [0.0], reverse=True)
        # <sigma-(0) sigma+(0)> = 1 - population
        assert c.values[0] == pytest.approx(5 / 6, abs=1e-12)

    def test_commutator_at_zero(self, fig1_target):
        gen = MasterEquationGenerator.from_aggregate(fig1_target)
        c = commutator_correlator(gen, "sigma_plus", "sigma_minus", [0.0])
        # <[sigma+, sigma-]> = 2 p - 1
        assert c.values[0] == pytest.approx(2 / 6 - 1, abs=1e-12)

    def test_unknown_tag(self, fig1_target):
        gen = MasterEquationGenerator.from_aggregate(fig1_target)
        with pytest.raises(InvalidInputError):
            regression_correlator(gen, "sigma_z", "sigma_minus", [0.0])
        with pytest.raises(InvalidInputError):
            regression_correlator(gen, "sigma_plus", "sigma_minus", [-1.0])


class TestOracleCorrelations:
    def test_default_tau_grid(self):
        tau = default_tau_grid()
        assert tau.size == 401 and tau[0] == 0 and tau[1] == pytest.approx(1e-3) and tau[-1] == pytest.approx(15)

    def test_unsqueezed_channel(self, fig1_target):
        gen = MasterEquationGenerator.from_aggregate(fig1_target)
        c = oracle_interference(gen, ChannelSqueezing(0, 0, 0.5), default_tau_grid())
        np.testing.assert_array_equal(c.values, 0)

    @pytest.mark.parametrize("n_alpha", [0.25, 2.0])
    def test_matches_closed_form(self, fig1_target, n_alpha):
        cs, _ = realize_target(fig1_target, n_alpha, 0.0)
        agg, ch = observe(cs, 0)
        gen = MasterEquationGenerator.from_aggregate(agg)
        tau = default_tau_grid()
        ws = oracle_scattered(gen, ch.gamma_alpha, tau).values
        wi = oracle_interference(gen, ch, tau).values
        np.testing.assert_allclose(ws, w_scattered(agg, ch.gamma_alpha, tau), atol=1e-8 * ch.gamma_alpha)
        np.testing.assert_allclose(wi, w_interference(agg, ch, tau), atol=1e-8 * ch.gamma_alpha)
        if n_alpha > agg.big_n:
            assert abs(wi[0]) > abs(ws[0])

    def test_complex_channel_phase(self, fig1_target):
        cs, _ = realize_target(fig1_target, 0.25, 0.5 * math.pi)
        agg, ch = observe(cs, 0)
        gen = MasterEquationGenerator.from_aggregate(agg)
        tau = np.linspace(0, 10, 51)
        wi = oracle_interference(gen, ch, tau, method="expm").values
        np.testing.assert_allclose(wi, w_interference(agg, ch, tau), atol=1e-12)
        assert np.max(np.abs(wi.imag)) > 1e-3


class TestOracleSpectrum:
    def test_unsqueezed_symmetric(self):
        agg = AggregateSqueezing.from_moments(0.5, 0.0)
        ch = pure_channel(0.5, 0.0, 0.5)
        grid = scan_grid(-4, 4, 0.05)
        s = oracle_spectrum(MasterEquationGenerator.from_aggregate(agg), ch, grid)
        np.testing.assert_allclose(s.total, s.total[::-1], atol=1e-10)
        np.testing.assert_allclose(s.total, channel_spectrum(agg, ch, grid).total, atol=1e-9)

    def test_figure3_extremum_structure(self, fig3_target):
        grid = scan_grid(-2, 2, 0.01)
        for zeta in (0.0, 2.0):
            cs, _ = realize_target(fig3_target, (1 + zeta / 1000) * 25 / 11, math.pi)
            agg, ch = observe(cs, 0)
            orc = analyze(oracle_spectrum(MasterEquationGenerator.from_aggregate(agg), ch, grid))
            ref = analyze(channel_spectrum(agg, ch, grid))
            assert orc.maxima == ref.maxima and orc.minima == ref.minima
            assert orc.central_hole == (zeta > 0)

    def test_quadrature_metadata(self, fig1_target):
        ch = pure_channel(0.25, 0.0, 0.9)
        s = oracle_spectrum(MasterEquationGenerator.from_aggregate(fig1_target), ch, scan_grid(-1, 1, 0.1))
        info = s.metadata["quadrature"]
        assert info["error_estimate"] < 1e-9 and info["tail_bound"] < 1e-10
