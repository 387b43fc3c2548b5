"""
Gate design: entangling phase, drive strength and operator ordering.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .parallel import ordered_map
from .model import GateConfig, ModeSpectrum, require_valid
from .sequence import MAX_APPLICATIONS, PhaseSequence, base, construct
from .sim import ENTANGLING_PHASE_CONSTANT, analytic_observables
from .trajectory import endpoint, mode_endpoints_and_areas

__all__ = [
    "NoSolutionError",
    "DesignRequest",
    "DesignResult",
    "SweepPoint",
    "entangling_phase",
    "mode_entangling_phases",
    "solve_rabi",
    "design_gate",
    "detuning_sweep",
    "MAX_ORDERINGS",
    "AREA_FLOOR",
]

MAX_ORDERINGS = 720
AREA_FLOOR = 1e-18  # s**2
MAX_PHASE = math.pi / 4


class NoSolutionError(ValueError):
    """The coupling-weighted entangling area vanishes, so no drive strength works."""


def _check_pair(spectrum: ModeSpectrum):
    if spectrum.qubit_count != 2:
        raise ValueError(f"entangling phase needs 2 qubits, got {spectrum.qubit_count}")


def _weighted_areas(seq: PhaseSequence, spectrum: ModeSpectrum) -> np.ndarray:
    _, areas = mode_endpoints_and_areas(seq, spectrum.detunings)
    f = spectrum.couplings()
    return f[:, 0] * f[:, 1] * areas


def mode_entangling_phases(config: GateConfig, spectrum: ModeSpectrum) -> np.ndarray:
    """Per-mode contribution to the two-qubit phase (rad)."""
    _check_pair(spectrum)
    return ENTANGLING_PHASE_CONSTANT * config.rabi ** 2 * _weighted_areas(config.sequence, spectrum)


def entangling_phase(config: GateConfig, spectrum: ModeSpectrum) -> float:
    """Two-qubit phase ``Theta`` of ``exp(1j*Theta*s1*s2)`` enacted by the gate."""
    return float(math.fsum(mode_entangling_phases(config, spectrum)))


def solve_rabi(seq: PhaseSequence, spectrum: ModeSpectrum, target_phase: float = MAX_PHASE) -> float:
    """Drive strength giving ``|Theta| = |target_phase|`` for ``seq``."""
    _check_pair(spectrum)
    total = math.fsum(_weighted_areas(seq, spectrum))
    if abs(total) < AREA_FLOOR:
        raise NoSolutionError(f"entangling area ≈ 0 ({total:.3e} s^2)")
    return math.sqrt(abs(target_phase) / (ENTANGLING_PHASE_CONSTANT * abs(total)))


@dataclass(frozen=True)
class DesignRequest:
    """What to build.

    ``targets`` lists ``(mode_index, order)`` pairs. ``ordering`` is either
    ``"minimize_rabi"`` or an explicit tuple of mode indices in application
    order (innermost first), which must use each target mode exactly
    ``order`` times.
    """

    spectrum: ModeSpectrum
    gate_time: float
    targets: tuple = ()
    scheme: Literal["standard", "phase_modulated"] = "phase_modulated"
    ordering: object = "minimize_rabi"
    basis: str = "x"
    target_phase: float = MAX_PHASE

    def __post_init__(self):
        require_valid(self.spectrum)
        object.__setattr__(self, "targets", tuple((int(k), int(q)) for k, q in self.targets))
        if self.scheme not in ("standard", "phase_modulated"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        m = len(self.spectrum)
        for k, q in self.targets:
            if not 0 <= k < m:
                raise ValueError(f"target mode {k} out of range for {m} modes")
            if q < 1:
                raise ValueError(f"suppression order for mode {k} must be >= 1")
        if len({k for k, _ in self.targets}) != len(self.targets):
            raise ValueError("each target mode may appear only once")
        if sum(q for _, q in self.targets) > MAX_APPLICATIONS:
            raise ValueError(f"total suppression order exceeds {MAX_APPLICATIONS}")
        if self.scheme == "phase_modulated" and not self.targets:
            raise ValueError("phase-modulated design needs at least one target")
        if self.ordering != "minimize_rabi":
            order = tuple(int(k) for k in self.ordering)
            expected = sorted(k for k, q in self.targets for _ in range(q))
            if sorted(order) != expected:
                raise ValueError(
                    f"explicit ordering {order} does not match targets {self.targets}")
            object.__setattr__(self, "ordering", order)

    def application_list(self) -> tuple:
        """Mode indices with multiplicity, in the order the targets were given."""
        return tuple(k for k, q in self.targets for _ in range(q))


@dataclass(frozen=True)
class DesignResult:
    config: GateConfig
    spectrum: ModeSpectrum
    ordering: tuple
    entangling_phase_per_mode: tuple
    rabi_solutions_considered: tuple = field(default=())

    def diagnostics(self) -> list[dict]:
        seq = self.config.sequence
        out = []
        for k, mode in enumerate(self.spectrum.modes):
            end = endpoint(seq, mode.detuning)
            out.append({
                "mode": k,
                "detuning": mode.detuning,
                "residual_re": end.real,
                "residual_im": end.imag,
                "closure_ratio": abs(end) / self.config.gate_time,
                "entangling_phase_rad": self.entangling_phase_per_mode[k],
            })
        return out


def _orderings(request: DesignRequest):
    if request.ordering != "minimize_rabi":
        return [request.ordering]
    apps = request.application_list()
    count = math.factorial(len(apps))
    for _, q in request.targets:
        count //= math.factorial(q)
    if count > MAX_ORDERINGS:
        raise ValueError(f"{count} distinct orderings exceed the limit of {MAX_ORDERINGS}")
    return sorted(set(itertools.permutations(apps)))


def design_gate(request: DesignRequest) -> DesignResult:
    """Build the gate described by ``request``.

    For the phase-modulated scheme with ``minimize_rabi`` every distinct
    ordering of the target multiset is tried and the one needing the smallest
    drive wins; ties go to the lexicographically smallest detuning list.
    """
    spectrum = request.spectrum
    _check_pair(spectrum)
    detunings = spectrum.detunings
    if request.scheme == "standard":
        seq = base(request.gate_time)
        rabi = solve_rabi(seq, spectrum, request.target_phase)
        config = GateConfig(rabi, request.gate_time, request.basis, seq)
        return DesignResult(config, spectrum, (),
                            tuple(mode_entangling_phases(config, spectrum)),
                            (((), rabi),))
    candidates = []
    for order in _orderings(request):
        dets = tuple(float(detunings[k]) for k in order)
        seq = construct(dets, request.gate_time)
        try:
            rabi = solve_rabi(seq, spectrum, request.target_phase)
        except NoSolutionError:
            continue
        candidates.append((rabi, dets, order, seq))
    if not candidates:
        raise NoSolutionError("entangling area ≈ 0 for every ordering")
    best_rabi = min(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] <= best_rabi * (1 + 1e-12)]
    rabi, _, order, seq = min(tied, key=lambda c: c[1])
    config = GateConfig(rabi, request.gate_time, request.basis, seq)
    considered = tuple((c[1], c[0]) for c in candidates)
    return DesignResult(config, spectrum, order,
                        tuple(mode_entangling_phases(config, spectrum)), considered)


@dataclass(frozen=True)
class SweepPoint:
    offset: float
    fidelity: float | None
    rabi: float | None
    ordering: tuple = ()
    gap: str = ""


def _sweep_point(offset, spectrum_template, gate_time, targets, scheme, basis):
    spectrum = spectrum_template.shifted(offset)
    try:
        result = design_gate(DesignRequest(spectrum, gate_time, targets, scheme, basis=basis))
    except NoSolutionError as exc:
        return SweepPoint(offset, None, None, (), f"no-solution: {exc}")
    obs = analytic_observables(result.config, spectrum)
    dets = tuple(float(spectrum.detunings[k]) for k in result.ordering)
    return SweepPoint(offset, obs.bell_fidelity, result.config.rabi, dets)


def detuning_sweep(spectrum_template: ModeSpectrum, drive_offsets: Sequence[float], gate_time: float,
                   targets=(), scheme="phase_modulated", basis="x", workers: int = 1) -> list[SweepPoint]:
    """Design and simulate a noiseless gate at each uniform drive offset.

    Points without a solution are returned as gaps rather than aborting.
    """
    job = _SweepJob(spectrum_template, gate_time, tuple(targets), scheme, basis)
    return ordered_map(job, [float(o) for o in drive_offsets], workers)


@dataclass(frozen=True)
class _SweepJob:
    spectrum_template: ModeSpectrum
    gate_time: float
    targets: tuple
    scheme: str
    basis: str

    def __call__(self, offset):
        return _sweep_point(offset, self.spectrum_template, self.gate_time,
                            self.targets, self.scheme, self.basis)
