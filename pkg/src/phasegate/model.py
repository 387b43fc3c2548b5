"""
Domain types shared by every other module.

All frequencies held here are angular (rad/s). The JSON helpers at the bottom
of the module are the only place where ordinary frequencies (Hz) are
converted.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Union

import numpy as np

from .sequence import PhaseSequence

__all__ = [
    "Mode",
    "ModeSpectrum",
    "GateConfig",
    "StaticOffset",
    "Sinusoid",
    "PolynomialDrift",
    "NoiseModel",
    "Violation",
    "ValidationReport",
    "validate_spectrum",
    "spectrum_to_dict",
    "spectrum_from_dict",
    "gate_to_dict",
    "gate_from_dict",
    "load_spectrum",
    "load_gate",
    "noise_to_dict",
    "noise_from_dict",
    "load_noise",
    "dump_json",
    "TWO_PI",
]

TWO_PI = 2.0 * math.pi
BASES = ("x", "y", "z")
MAX_POLY_ORDER = 8


@dataclass(frozen=True)
class Mode:
    """One bosonic mode as seen by the drive.

    ``detuning`` is the drive frequency minus the mode frequency (rad/s),
    ``couplings`` holds one real factor per qubit and ``thermal_occupation``
    is the mean phonon number of the initial thermal state.
    """

    detuning: float
    couplings: tuple
    thermal_occupation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "detuning", float(self.detuning))
        object.__setattr__(self, "couplings", tuple(float(c) for c in self.couplings))
        object.__setattr__(self, "thermal_occupation", float(self.thermal_occupation))

    def shifted(self, offset: float) -> "Mode":
        return Mode(self.detuning + offset, self.couplings, self.thermal_occupation)


@dataclass(frozen=True)
class ModeSpectrum:
    qubit_count: int
    modes: tuple

    def __post_init__(self):
        object.__setattr__(self, "qubit_count", int(self.qubit_count))
        object.__setattr__(self, "modes", tuple(self.modes))

    def __len__(self):
        return len(self.modes)

    @property
    def detunings(self) -> np.ndarray:
        return np.array([m.detuning for m in self.modes])

    @property
    def nbars(self) -> np.ndarray:
        return np.array([m.thermal_occupation for m in self.modes])

    def couplings(self) -> np.ndarray:
        """Coupling matrix with shape ``(M, N)``."""
        return np.array([m.couplings for m in self.modes], dtype=float)

    def shifted(self, offset: float) -> "ModeSpectrum":
        """Spectrum seen by a drive moved by ``offset`` rad/s."""
        return ModeSpectrum(self.qubit_count, tuple(m.shifted(offset) for m in self.modes))

    def with_couplings(self, couplings) -> "ModeSpectrum":
        couplings = np.asarray(couplings, dtype=float)
        modes = tuple(Mode(m.detuning, tuple(c), m.thermal_occupation)
                      for m, c in zip(self.modes, couplings))
        return ModeSpectrum(couplings.shape[1], modes)

    def qubit_view(self, qubit: int) -> "ModeSpectrum":
        """Single-qubit spectrum keeping only the couplings of ``qubit``."""
        modes = tuple(Mode(m.detuning, (m.couplings[qubit],), m.thermal_occupation)
                      for m in self.modes)
        return ModeSpectrum(1, modes)


@dataclass(frozen=True)
class GateConfig:
    """A fully specified gate: drive strength, duration, spin basis and schedule."""

    rabi: float
    gate_time: float
    basis: str
    sequence: PhaseSequence

    def __post_init__(self):
        object.__setattr__(self, "rabi", float(self.rabi))
        object.__setattr__(self, "gate_time", float(self.gate_time))
        if not (math.isfinite(self.rabi) and self.rabi >= 0):
            raise ValueError(f"rabi must be finite and >= 0, got {self.rabi}")
        if not (math.isfinite(self.gate_time) and self.gate_time > 0):
            raise ValueError(f"gate_time must be > 0, got {self.gate_time}")
        if self.basis not in BASES:
            raise ValueError(f"basis must be one of {BASES}, got {self.basis!r}")
        total = self.sequence.total_duration
        if abs(total - self.gate_time) > 1e-12 * self.gate_time:
            raise ValueError(
                f"sequence lasts {total!r} s but gate_time is {self.gate_time!r} s")

    def with_rabi(self, rabi: float) -> "GateConfig":
        return GateConfig(rabi, self.gate_time, self.basis, self.sequence)


# ---------------------------------------------------------------------------
# noise models
#
# Two injection semantics exist. "detuning" adds beta(t) to every mode
# detuning, so the coupling picks up exp(1j * int_0^t beta). "envelope"
# multiplies the coupling by beta(t). StaticOffset and Sinusoid are always
# detuning noise; PolynomialDrift must name its injection explicitly.

@dataclass(frozen=True)
class StaticOffset:
    epsilon: float
    injection: Literal["detuning"] = field(default="detuning", init=False)

    def rate(self, t):
        return np.full(np.shape(t), self.epsilon, dtype=float)

    def accumulated(self, t):
        return self.epsilon * np.asarray(t, dtype=float)

    def max_rate(self, duration: float) -> float:
        return abs(self.epsilon)


@dataclass(frozen=True)
class Sinusoid:
    """Detuning modulation ``depth * sin(omega_mod * t + phase)``."""

    depth: float
    omega_mod: float
    phase: float = 0.0
    injection: Literal["detuning"] = field(default="detuning", init=False)

    def __post_init__(self):
        if not self.depth >= 0:
            raise ValueError("sinusoid depth must be >= 0")

    def rate(self, t):
        return self.depth * np.sin(self.omega_mod * np.asarray(t, dtype=float) + self.phase)

    def accumulated(self, t):
        # depth/w * (cos(phase) - cos(w t + phase)), written to survive w -> 0
        t = np.asarray(t, dtype=float)
        half = 0.5 * self.omega_mod * t
        return self.depth * t * np.sinc(half / np.pi) * np.sin(half + self.phase)

    def max_rate(self, duration: float) -> float:
        return self.depth + abs(self.omega_mod)


@dataclass(frozen=True)
class PolynomialDrift:
    """Polynomial ``sum_j coefficients[j] * t**j``.

    With ``injection="detuning"`` the coefficients are rad/s per s**j and
    the polynomial is added to the detuning. With ``injection="envelope"``
    they are dimensionless (per s**j) and multiply the coupling.
    """

    coefficients: tuple
    injection: Literal["detuning", "envelope"]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not self.coefficients:
            raise ValueError("polynomial needs at least one coefficient")
        if len(self.coefficients) - 1 > MAX_POLY_ORDER:
            raise ValueError(f"polynomial order is limited to {MAX_POLY_ORDER}")
        if self.injection not in ("detuning", "envelope"):
            raise ValueError("injection must be 'detuning' or 'envelope'")

    def rate(self, t):
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), self.coefficients)

    def accumulated(self, t):
        integral = np.polynomial.polynomial.polyint(self.coefficients)
        return np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), integral)

    def max_rate(self, duration: float) -> float:
        if self.injection == "envelope":
            return 0.0
        return float(sum(abs(c) * duration ** j for j, c in enumerate(self.coefficients)))


NoiseModel = Union[StaticOffset, Sinusoid, PolynomialDrift]


def noise_phase(noise, t):
    """Accumulated phase ``int_0^t beta`` of a detuning-type noise model."""
    return noise.accumulated(t)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class Violation:
    kind: str
    mode: int | None
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()
    warnings: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_spectrum(spectrum: ModeSpectrum) -> ValidationReport:
    """Check a spectrum for structural problems without raising."""
    violations = []
    warnings = []
    n = spectrum.qubit_count
    if n not in (1, 2):
        violations.append(Violation("qubit count", None, f"qubit count must be 1 or 2, got {n}"))
    if not spectrum.modes:
        violations.append(Violation("no modes", None, "spectrum has no modes"))
    for k, mode in enumerate(spectrum.modes):
        if len(mode.couplings) != n:
            violations.append(Violation(
                "coupling arity", k,
                f"mode {k} has {len(mode.couplings)} couplings for {n} qubits"))
        if not math.isfinite(mode.detuning) or not all(math.isfinite(c) for c in mode.couplings) \
                or not math.isfinite(mode.thermal_occupation):
            violations.append(Violation("non-finite", k, f"mode {k} has non-finite values"))
        elif mode.thermal_occupation < 0:
            violations.append(Violation(
                "negative occupation", k,
                f"mode {k} has nbar = {mode.thermal_occupation}"))
    seen = {}
    for k, mode in enumerate(spectrum.modes):
        if mode.detuning in seen:
            warnings.append(f"modes {seen[mode.detuning]} and {k} share detuning {mode.detuning}")
        else:
            seen[mode.detuning] = k
    return ValidationReport(tuple(violations), tuple(warnings))


def require_valid(spectrum: ModeSpectrum) -> ModeSpectrum:
    report = validate_spectrum(spectrum)
    if not report.ok:
        raise ValueError("; ".join(v.message for v in report.violations))
    return spectrum


# ---------------------------------------------------------------------------
# JSON interchange (Hz outside, rad/s inside)

def spectrum_to_dict(spectrum: ModeSpectrum) -> dict:
    return {
        "qubits": spectrum.qubit_count,
        "modes": [
            {"detuning_hz": m.detuning / TWO_PI,
             "couplings": list(m.couplings),
             "nbar": m.thermal_occupation}
            for m in spectrum.modes
        ],
    }


def spectrum_from_dict(data: dict) -> ModeSpectrum:
    try:
        qubits = int(data["qubits"])
        modes = []
        for k, m in enumerate(data["modes"]):
            try:
                modes.append(Mode(TWO_PI * float(m["detuning_hz"]),
                                  tuple(float(c) for c in m["couplings"]),
                                  float(m.get("nbar", 0.0))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"modes[{k}]: {exc!r}") from None
    except KeyError as exc:
        raise ValueError(f"missing field {exc}") from None
    return ModeSpectrum(qubits, tuple(modes))


def gate_to_dict(config: GateConfig) -> dict:
    return {
        "rabi_hz": config.rabi / TWO_PI,
        "gate_time_s": config.gate_time,
        "basis": config.basis,
        "sequence": [{"duration_s": d, "phase_rad": p}
                     for d, p in zip(config.sequence.durations, config.sequence.phases)],
    }


def gate_from_dict(data: dict) -> GateConfig:
    try:
        segments = data["sequence"]
        seq = PhaseSequence(tuple(float(s["duration_s"]) for s in segments),
                            tuple(float(s["phase_rad"]) for s in segments))
        return GateConfig(TWO_PI * float(data["rabi_hz"]), float(data["gate_time_s"]),
                          str(data.get("basis", "x")), seq)
    except KeyError as exc:
        raise ValueError(f"missing field {exc}") from None


def noise_to_dict(noise) -> dict:
    if isinstance(noise, StaticOffset):
        return {"type": "static", "epsilon_hz": noise.epsilon / TWO_PI}
    if isinstance(noise, Sinusoid):
        return {"type": "sinusoid", "depth_hz": noise.depth / TWO_PI,
                "omega_mod_hz": noise.omega_mod / TWO_PI, "phase_rad": noise.phase}
    if isinstance(noise, PolynomialDrift):
        scale = TWO_PI if noise.injection == "detuning" else 1.0
        return {"type": "polynomial", "injection": noise.injection,
                "coefficients": [c / scale for c in noise.coefficients]}
    raise TypeError(f"unsupported noise model {type(noise).__name__}")


def noise_from_dict(data: dict):
    """Noise model from JSON.

    Detuning-type quantities are in Hz (polynomial detuning coefficients in
    Hz per s**j); envelope coefficients are dimensionless.
    """
    try:
        kind = data["type"]
        if kind == "static":
            return StaticOffset(TWO_PI * float(data["epsilon_hz"]))
        if kind == "sinusoid":
            return Sinusoid(TWO_PI * float(data["depth_hz"]), TWO_PI * float(data["omega_mod_hz"]),
                            float(data.get("phase_rad", 0.0)))
        if kind == "polynomial":
            injection = data["injection"]
            scale = TWO_PI if injection == "detuning" else 1.0
            return PolynomialDrift(tuple(scale * float(c) for c in data["coefficients"]), injection)
    except KeyError as exc:
        raise ValueError(f"noise: missing field {exc}") from None
    raise ValueError(f"noise: unknown type {kind!r}")


def _read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_spectrum(path) -> ModeSpectrum:
    data = _read_json(path)
    try:
        return require_valid(spectrum_from_dict(data))
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def load_gate(path) -> GateConfig:
    data = _read_json(path)
    if "gate" in data:
        data = data["gate"]
    try:
        return gate_from_dict(data)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def load_noise(path):
    data = _read_json(path)
    try:
        return noise_from_dict(data.get("noise", data))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from None


def dump_json(data, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
