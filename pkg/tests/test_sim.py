import math

import numpy as np
import pytest

from phasegate.design import entangling_phase, solve_rabi
from phasegate.model import GateConfig, Mode, ModeSpectrum, Sinusoid, StaticOffset
from phasegate.noise import _rescaled
from phasegate.sequence import base, construct
from phasegate.sim import (ENTANGLING_PHASE_CONSTANT, MAX_MODE_STATES, TruncationError,
                           analytic_observables, fock_oracle, parity_curve, parity_scan,
                           reduced_density, single_ion_p1)
from phasegate.trajectory import mode_endpoints_and_areas

from conftest import khz

PI = math.pi
PHASES = np.linspace(0, 2 * PI, 32, endpoint=False)


def single_loop(nbar=0.0, tau=100e-6, couplings=(1.0, 1.0)):
    spec = ModeSpectrum(2, (Mode(2 * PI / tau, couplings, nbar),))
    seq = base(tau)
    return GateConfig(solve_rabi(seq, spec), tau, "x", seq), spec


def overlap_max_over_phase(rho):
    chis = np.linspace(0, 2 * PI, 4001)
    vals = 0.5 * (rho[0, 0] + rho[3, 3]).real + np.real(np.exp(-1j * chis) * rho[3, 0])
    return float(vals.max())


class TestIdeal:
    @pytest.mark.parametrize("basis", ["x", "y"])
    def test_perfect_bell_state(self, basis, tilt_pair):
        spec = tilt_pair(khz(-3.3))
        seq = construct(list(spec.detunings), 300e-6)
        cfg = GateConfig(solve_rabi(seq, spec), 300e-6, basis, seq)
        obs = analytic_observables(cfg, spec)
        assert obs.p0 == pytest.approx(0.5, abs=1e-12)
        assert obs.p2 == pytest.approx(0.5, abs=1e-12)
        assert obs.p1 == pytest.approx(0.0, abs=1e-12)
        assert obs.parity_contrast == pytest.approx(1.0, abs=1e-12)
        assert obs.bell_fidelity == pytest.approx(1.0, abs=1e-12)
        assert obs.overlap_fidelity == pytest.approx(1.0, abs=1e-12)

    def test_identity_gate(self):
        cfg, spec = single_loop()
        obs = analytic_observables(cfg.with_rabi(0.0), spec)
        assert obs.p0 == pytest.approx(1.0) and obs.bell_fidelity == pytest.approx(0.5)
        contrast, _, _ = parity_scan(cfg.with_rabi(0.0), spec, PHASES)
        assert contrast == pytest.approx(0.0, abs=1e-12)

    def test_probabilities_sum(self, tilt_pair):
        spec = tilt_pair(khz(-2), nbar=0.4)
        cfg = GateConfig(3e4, 300e-6, "x", base(300e-6))
        for noise in (None, StaticOffset(khz(0.5)), Sinusoid(khz(0.3), khz(4), 1.0)):
            obs = analytic_observables(cfg, spec, noise)
            assert sum(obs.populations) == pytest.approx(1.0, abs=1e-10)
            assert 0 <= obs.bell_fidelity <= 1


class TestConventionConstant:
    def test_frozen_value(self):
        assert ENTANGLING_PHASE_CONSTANT == 2.0

    def test_oracle_produces_bell_state(self):
        cfg, spec = single_loop()
        assert abs(entangling_phase(cfg, spec)) == pytest.approx(PI / 4, rel=1e-12)
        obs = fock_oracle(cfg, spec, cutoff=12)
        assert obs.diagnostics["reliable"]
        assert obs.bell_fidelity == pytest.approx(1.0, abs=1e-6)
        assert obs.overlap_fidelity == pytest.approx(1.0, abs=1e-6)

    def test_other_constants_fail(self):
        # with c0 = 1 the drive would be sqrt(2) larger, with c0 = 4 sqrt(2) smaller
        cfg, spec = single_loop()
        for scale in (math.sqrt(2), 1 / math.sqrt(2)):
            obs = fock_oracle(cfg.with_rabi(cfg.rabi * scale), spec, cutoff=12)
            assert obs.bell_fidelity < 0.9


class TestOracle:
    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_analytic(self, seed):
        rng = np.random.default_rng(seed)
        tau = rng.uniform(100e-6, 300e-6)
        m = int(rng.integers(1, 3))
        modes = tuple(Mode(khz(rng.uniform(-15, 15)), (1.0, rng.choice([-1.0, 1.0])),
                           rng.uniform(0, 0.3 if m == 2 else 0.5)) for _ in range(m))
        spec = ModeSpectrum(2, modes)
        seq = construct(list(spec.detunings), tau)
        cfg = GateConfig(solve_rabi(seq, spec), tau, "x", seq)
        noise = Sinusoid(khz(rng.uniform(0.05, 0.3)), khz(rng.uniform(1, 10)), rng.uniform(0, 2 * PI))
        fock = fock_oracle(cfg, spec, noise, cutoff=19)
        ana = analytic_observables(cfg, spec, noise)
        assert fock.diagnostics["reliable"]
        for a, b in zip(fock.populations + (fock.bell_fidelity,),
                        ana.populations + (ana.bell_fidelity,)):
            assert a == pytest.approx(b, abs=1e-4)

    def test_static_error_second_order(self):
        tau, d = 500e-6, khz(-2)
        spec = ModeSpectrum(2, (Mode(d, (1.0, 1.0), 0.1),))
        seq = construct([d, d], tau)
        cfg = GateConfig(solve_rabi(seq, spec), tau, "x", seq)
        noise = StaticOffset(0.25 * abs(d))
        fock = fock_oracle(cfg, spec, noise, cutoff=19)
        assert fock.diagnostics["reliable"]
        assert fock.p1 == pytest.approx(analytic_observables(cfg, spec, noise).p1, abs=1e-4)

    def test_cutoff_convergence(self):
        tau = 100e-6
        spec = ModeSpectrum(2, (Mode(2 * PI / tau, (1.0, 1.0)),))
        cfg = GateConfig(0.3 * solve_rabi(base(tau), spec), tau, "x", base(tau))
        noise = Sinusoid(khz(0.3), khz(5))
        lo = fock_oracle(cfg, spec, noise, cutoff=6)
        hi = fock_oracle(cfg, spec, noise, cutoff=12)
        assert lo.diagnostics["reliable"] and hi.diagnostics["reliable"]
        for a, b in zip(lo.populations + (lo.bell_fidelity,), hi.populations + (hi.bell_fidelity,)):
            assert abs(a - b) < 1e-6

    def test_residuals_match(self):
        cfg, spec = single_loop(nbar=0.2)
        noise = StaticOffset(khz(0.4))
        fock = fock_oracle(cfg, spec, noise, cutoff=16)
        ana = analytic_observables(cfg, spec, noise)
        np.testing.assert_allclose(fock.residuals, ana.residuals, atol=1e-5 * abs(ana.residuals[0]))

    def test_flags_unreliable(self):
        cfg, spec = single_loop()
        obs = fock_oracle(cfg.with_rabi(3 * cfg.rabi), spec, StaticOffset(khz(3)), cutoff=6)
        assert not obs.diagnostics["reliable"]

    def test_guards(self):
        cfg, spec = single_loop(nbar=3.0)
        with pytest.raises(TruncationError):
            fock_oracle(cfg, spec, cutoff=8)
        with pytest.raises(ValueError):
            fock_oracle(cfg, spec, cutoff=4)
        three = ModeSpectrum(2, tuple(Mode(khz(k), (1.0, 1.0)) for k in (1, 2, 3)))
        assert 8 ** 3 > MAX_MODE_STATES
        with pytest.raises(ValueError):
            fock_oracle(cfg, three, cutoff=7)


class TestSingleIon:
    @pytest.mark.parametrize("sign", [1, -1])
    def test_closed_loop_dip(self, sign):
        tau = 120e-6
        spec = ModeSpectrum(1, (Mode(sign * 2 * PI / tau, (1.0,), 0.2),))
        cfg = GateConfig(khz(20), tau, "z", base(tau))
        assert single_ion_p1(cfg, spec) < 1e-20

    def test_zero_drive(self):
        spec = ModeSpectrum(1, (Mode(khz(3), (1.0,), 0.2),))
        assert single_ion_p1(GateConfig(0.0, 1e-4, "x", base(1e-4)), spec) == pytest.approx(0.0, abs=1e-15)

    def test_mid_detuning_against_oracle(self):
        tau = 120e-6
        spec = ModeSpectrum(1, (Mode(PI / tau, (1.0,), 0.2),))
        cfg = GateConfig(khz(1.2), tau, "x", base(tau))
        ana = single_ion_p1(cfg, spec)
        fock = fock_oracle(cfg, spec, cutoff=20)
        assert fock.diagnostics["reliable"]
        assert ana > 0.1
        assert fock.p1 == pytest.approx(ana, abs=1e-4)

    def test_small_displacement_limit(self):
        tau = 120e-6
        spec = ModeSpectrum(1, (Mode(PI / tau, (1.0,), 0.0),))
        cfg = GateConfig(khz(0.02), tau, "x", base(tau))
        ends, _ = mode_endpoints_and_areas(cfg.sequence, spec.detunings)
        approx = abs(cfg.rabi * ends[0]) ** 2
        assert single_ion_p1(cfg, spec) == pytest.approx(approx, rel=1e-3)

    def test_thermal_monotonic(self):
        tau = 120e-6
        cfg = GateConfig(khz(0.05), tau, "x", base(tau))
        values = [single_ion_p1(cfg, ModeSpectrum(1, (Mode(PI / tau, (1.0,), n),)))
                  for n in (0.0, 0.1, 0.5, 1.0, 3.0)]
        assert np.all(np.diff(values) > 0)

    def test_requires_one_qubit(self):
        cfg, spec = single_loop()
        with pytest.raises(ValueError):
            single_ion_p1(cfg, spec)


class TestParity:
    def test_ideal_fringe(self):
        cfg, spec = single_loop()
        contrast, _, fidelity = parity_scan(cfg, spec, PHASES)
        assert contrast == pytest.approx(1.0, abs=1e-12)
        assert fidelity == pytest.approx(1.0, abs=1e-12)
        ends, areas = mode_endpoints_and_areas(cfg.sequence, spec.detunings)
        parity = parity_curve(reduced_density(cfg, spec, ends, areas), PHASES)
        assert np.ptp(parity) == pytest.approx(2.0, abs=1e-12)

    def test_needs_eight_phases(self):
        cfg, spec = single_loop()
        with pytest.raises(ValueError):
            parity_scan(cfg, spec, PHASES[:7])

    def test_fit_matches_closed_form_contrast(self, tilt_pair):
        spec = tilt_pair(khz(-2.5), nbar=0.3)
        cfg = GateConfig(2.5e4, 250e-6, "x", base(250e-6))
        obs = analytic_observables(cfg, spec, StaticOffset(khz(0.2)))
        contrast, _, fidelity = parity_scan(cfg, spec, PHASES, StaticOffset(khz(0.2)))
        assert contrast == pytest.approx(obs.parity_contrast, abs=1e-12)
        assert fidelity == pytest.approx(obs.bell_fidelity, abs=1e-12)


def _displacement_only(seed, max_error_hz):
    """Closed design, static error, drive re-solved so the two-qubit phase stays exact."""
    rng = np.random.default_rng(seed)
    tau = rng.uniform(100e-6, 400e-6)
    m = int(rng.integers(1, 3))
    modes = tuple(Mode(khz(rng.uniform(-20, 20)),
                       (rng.uniform(0.3, 1), rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 1)),
                       rng.uniform(0, 0.5)) for _ in range(m))
    spec = ModeSpectrum(2, modes)
    seq = construct(list(spec.detunings), tau)
    cfg = GateConfig(solve_rabi(seq, spec), tau, str(rng.choice(["x", "y"])), seq)
    noise = StaticOffset(2 * PI * rng.uniform(-max_error_hz, max_error_hz))
    cfg = _rescaled(cfg, spec, noise)
    ends, areas = mode_endpoints_and_areas(cfg.sequence, spec.detunings, noise)
    return analytic_observables(cfg, spec, noise), reduced_density(cfg, spec, ends, areas)


class TestEstimator:
    @pytest.mark.parametrize("seed", range(25))
    def test_estimator_is_phase_maximised_overlap(self, seed):
        obs, rho = _displacement_only(seed, 1000)
        assert obs.bell_fidelity >= obs.overlap_fidelity - 1e-12
        assert obs.bell_fidelity == pytest.approx(overlap_max_over_phase(rho), abs=1e-6)

    @pytest.mark.parametrize("seed", range(25))
    def test_excess_is_fourth_order(self, seed):
        obs, _ = _displacement_only(seed, 300)
        assert obs.bell_fidelity - obs.overlap_fidelity <= 0.5 * obs.p1 ** 2 + 1e-12

    @pytest.mark.parametrize("seed", range(25))
    def test_small_displacement_bound(self, seed):
        obs, _ = _displacement_only(seed, 30)
        if obs.p1 <= 1e-3:
            assert obs.bell_fidelity - obs.overlap_fidelity <= 1e-6

    def test_large_displacement_counterexample(self):
        # unequal dephasing of the two spin sectors rotates the |00><11| coherence
        tau = 200e-6
        spec = ModeSpectrum(2, (Mode(khz(5), (1.0, 1.0), 0.2), Mode(khz(-7), (1.0, -0.7), 0.3)))
        seq = construct(list(spec.detunings), tau)
        cfg = GateConfig(solve_rabi(seq, spec), tau, "x", seq)
        noise = StaticOffset(khz(0.3))
        obs = analytic_observables(_rescaled(cfg, spec, noise), spec, noise)
        assert obs.bell_fidelity - obs.overlap_fidelity > 1e-4

    def test_static_error_even(self, tilt_pair):
        d = khz(10)
        spec = ModeSpectrum(2, (Mode(-d, (1.0, 1.0)), Mode(d, (1.0, -1.0))))
        seq = construct([-d, d], 200e-6)
        cfg = GateConfig(solve_rabi(seq, spec), 200e-6, "x", seq)
        for eps in (khz(0.1), khz(0.5), khz(2)):
            plus = analytic_observables(cfg, spec, StaticOffset(eps)).bell_fidelity
            minus = analytic_observables(cfg, spec, StaticOffset(-eps)).bell_fidelity
            assert plus == pytest.approx(minus, abs=1e-10)
