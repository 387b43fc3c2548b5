import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasegate.model import (GateConfig, Mode, ModeSpectrum, PolynomialDrift, Sinusoid,
                             StaticOffset, gate_from_dict, gate_to_dict, load_gate, load_noise,
                             load_spectrum, noise_from_dict, noise_to_dict, require_valid,
                             spectrum_from_dict, spectrum_to_dict, validate_spectrum)
from phasegate.sequence import PhaseSequence, base, construct

from conftest import khz


def _kinds(report):
    return [v.kind for v in report.violations]


class TestValidation:
    def test_single_qubit_two_modes_ok(self):
        spec = ModeSpectrum(1, (Mode(khz(1), (0.5,)), Mode(khz(2), (0.3,))))
        report = validate_spectrum(spec)
        assert report.ok and not report.violations and not report.warnings

    def test_coupling_arity(self):
        spec = ModeSpectrum(2, (Mode(khz(1), (1.0, 1.0)), Mode(khz(2), (1.0,))))
        report = validate_spectrum(spec)
        assert _kinds(report) == ["coupling arity"]
        assert report.violations[0].mode == 1

    def test_negative_occupation(self):
        spec = ModeSpectrum(1, (Mode(khz(1), (1.0,), -0.1),))
        assert _kinds(validate_spectrum(spec)) == ["negative occupation"]

    def test_non_finite(self):
        spec = ModeSpectrum(1, (Mode(float("nan"), (1.0,)), Mode(1.0, (float("inf"),))))
        assert _kinds(validate_spectrum(spec)) == ["non-finite", "non-finite"]

    def test_qubit_count_and_empty(self):
        assert _kinds(validate_spectrum(ModeSpectrum(3, (Mode(1.0, (1, 1, 1)),)))) == ["qubit count"]
        assert _kinds(validate_spectrum(ModeSpectrum(2, ()))) == ["no modes"]

    def test_each_case_reported_once(self):
        spec = ModeSpectrum(2, (Mode(1.0, (1.0,), -1.0), Mode(2.0, (1.0, 1.0), -0.5)))
        kinds = _kinds(validate_spectrum(spec))
        assert sorted(kinds) == ["coupling arity", "negative occupation", "negative occupation"]

    def test_duplicates_warn(self):
        spec = ModeSpectrum(1, (Mode(5.0, (1.0,)), Mode(5.0, (0.2,))))
        report = validate_spectrum(spec)
        assert report.ok and len(report.warnings) == 1

    def test_require_valid_raises(self):
        with pytest.raises(ValueError, match="nbar"):
            require_valid(ModeSpectrum(1, (Mode(1.0, (1.0,), -1.0),)))


class TestGateConfig:
    def test_duration_must_match(self):
        seq = base(10e-6)
        GateConfig(1.0, 10e-6 * (1 + 5e-13), "x", seq)
        with pytest.raises(ValueError):
            GateConfig(1.0, 10e-6 * (1 + 1e-11), "x", seq)

    @pytest.mark.parametrize("kw", [{"rabi": -1.0}, {"basis": "w"}, {"rabi": float("nan")}])
    def test_rejects(self, kw):
        args = {"rabi": 1.0, "gate_time": 1e-5, "basis": "x", "sequence": base(1e-5)}
        args.update(kw)
        with pytest.raises(ValueError):
            GateConfig(**args)

    def test_with_rabi(self):
        cfg = GateConfig(1.0, 1e-5, "y", base(1e-5))
        assert cfg.with_rabi(3.0).rabi == 3.0 and cfg.with_rabi(3.0).basis == "y"


class TestNoiseModels:
    def test_sinusoid_depth(self):
        with pytest.raises(ValueError):
            Sinusoid(-1.0, 1.0)

    def test_sinusoid_accumulated(self):
        s = Sinusoid(3.0, 2.0, 0.7)
        t = np.linspace(0, 5, 11)
        expected = 3.0 / 2.0 * (np.cos(0.7) - np.cos(2.0 * t + 0.7))
        np.testing.assert_allclose(s.accumulated(t), expected, atol=1e-13)

    def test_sinusoid_zero_frequency_limit(self):
        s = Sinusoid(3.0, 0.0, 0.7)
        t = np.linspace(0, 5, 11)
        np.testing.assert_allclose(s.accumulated(t), 3.0 * np.sin(0.7) * t, atol=1e-13)

    def test_polynomial_needs_injection(self):
        with pytest.raises(TypeError):
            PolynomialDrift((1.0,))
        with pytest.raises(ValueError):
            PolynomialDrift((1.0,), "multiply")

    def test_polynomial_order_bound(self):
        PolynomialDrift((1.0,) * 9, "detuning")
        with pytest.raises(ValueError):
            PolynomialDrift((1.0,) * 10, "detuning")

    def test_polynomial_accumulated(self):
        p = PolynomialDrift((1.0, 2.0, 3.0), "detuning")
        t = np.array([0.0, 0.5, 2.0])
        np.testing.assert_allclose(p.accumulated(t), t + t ** 2 + t ** 3)

    def test_static(self):
        s = StaticOffset(2.5)
        assert s.accumulated(2.0) == 5.0 and s.max_rate(1.0) == 2.5


finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestJson:
    @given(st.lists(st.tuples(st.floats(-2e5, 2e5), finite, finite, st.floats(0, 5)),
                    min_size=1, max_size=4))
    def test_spectrum_round_trip(self, modes):
        spec = ModeSpectrum(2, tuple(Mode(khz(d), (a, b), n) for d, a, b, n in modes))
        back = spectrum_from_dict(json.loads(json.dumps(spectrum_to_dict(spec))))
        assert back.qubit_count == 2
        for m0, m1 in zip(spec.modes, back.modes):
            assert m1.detuning == pytest.approx(m0.detuning, rel=1e-15, abs=1e-300)
            assert m1.couplings == m0.couplings
            assert m1.thermal_occupation == m0.thermal_occupation

    @given(st.lists(st.floats(0.5, 100), min_size=1, max_size=4), st.floats(1e-5, 1e-3),
           st.floats(0, 1e6), st.sampled_from("xyz"))
    def test_gate_round_trip(self, dets, tau, rabi, basis):
        cfg = GateConfig(rabi, tau, basis, construct([khz(d) for d in dets], tau))
        back = gate_from_dict(json.loads(json.dumps(gate_to_dict(cfg))))
        assert back.rabi == pytest.approx(cfg.rabi, rel=1e-15, abs=0)
        assert back.gate_time == cfg.gate_time and back.basis == cfg.basis
        assert back.sequence.durations == cfg.sequence.durations
        assert back.sequence.phases == cfg.sequence.phases

    @pytest.mark.parametrize("noise", [
        StaticOffset(khz(0.3)),
        Sinusoid(khz(0.1), khz(5), 0.25),
        PolynomialDrift((khz(1), 3e7), "detuning"),
        PolynomialDrift((1.0, -2e3), "envelope"),
    ])
    def test_noise_round_trip(self, noise):
        back = noise_from_dict(json.loads(json.dumps(noise_to_dict(noise))))
        assert type(back) is type(noise)
        for a, b in zip(vars(noise).values(), vars(back).values()):
            if isinstance(a, tuple):
                np.testing.assert_allclose(b, a, rtol=1e-15)
            elif isinstance(a, float):
                assert b == pytest.approx(a, rel=1e-15)
            else:
                assert a == b

    def test_noise_errors(self):
        with pytest.raises(ValueError, match="unknown type"):
            noise_from_dict({"type": "pink"})
        with pytest.raises(ValueError, match="missing field"):
            noise_from_dict({"type": "sinusoid", "depth_hz": 1.0})

    def test_hz_boundary(self):
        spec = spectrum_from_dict({"qubits": 1, "modes": [{"detuning_hz": 1000.0, "couplings": [1]}]})
        assert spec.modes[0].detuning == pytest.approx(2 * math.pi * 1000.0)
        assert spec.modes[0].thermal_occupation == 0.0

    def test_file_diagnostics(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"qubits": 2,\n "modes": [}')
        with pytest.raises(ValueError, match="line 2"):
            load_spectrum(bad)
        field = tmp_path / "field.json"
        field.write_text(json.dumps({"qubits": 1, "modes": [{"couplings": [1]}]}))
        with pytest.raises(ValueError, match=r"modes\[0\]"):
            load_spectrum(field)
        arity = tmp_path / "arity.json"
        arity.write_text(json.dumps({"qubits": 2, "modes": [{"detuning_hz": 1, "couplings": [1]}]}))
        with pytest.raises(ValueError, match="couplings"):
            load_spectrum(arity)

    def test_load_gate_wrapped(self, tmp_path):
        cfg = GateConfig(10.0, 2e-5, "x", base(2e-5))
        path = tmp_path / "design.json"
        path.write_text(json.dumps({"gate": gate_to_dict(cfg), "other": 1}))
        assert load_gate(path).rabi == pytest.approx(10.0)
        path.write_text(json.dumps({"noise": noise_to_dict(StaticOffset(3.0))}))
        assert load_noise(path).epsilon == pytest.approx(3.0)

    def test_sequence_json_preserves_phases(self):
        seq = PhaseSequence((1e-6, 1e-6), (-math.pi, 1.0))
        cfg = GateConfig(0.0, 2e-6, "z", seq)
        assert gate_from_dict(gate_to_dict(cfg)).sequence.phases == (-math.pi, 1.0)
