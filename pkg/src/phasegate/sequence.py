"""
Piecewise-constant phase modulation sequences.

A sequence is an ordered list of segments, each with a duration and a
constant coupling phase ``phi``. The modulation function it represents is
``r(t) = exp(-1j * phi_n)`` on the half-open interval of segment ``n`` and
zero outside ``[0, total_duration)``.

Sequences are built from a single-segment base by repeated phase-shifted
concatenation (:func:`apply_R`). Each application at detuning ``delta``
appends a copy of the sequence with every phase shifted by
``delta * T - pi``, where ``T`` is the current length; this returns the
mode at ``delta`` to the phase-space origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.special import comb

__all__ = [
    "PhaseSequence",
    "wrap_phase",
    "base",
    "apply_R",
    "construct",
    "moment",
    "to_bichromatic_phases",
    "BichromaticSegment",
    "segment_exp_integrals",
    "unit_moments",
    "MAX_APPLICATIONS",
    "MAX_MOMENT_ORDER",
]

MAX_APPLICATIONS = 20
MAX_MOMENT_ORDER = 8


def wrap_phase(phi):
    """Wrap phases into ``[-pi, pi)``."""
    wrapped = np.mod(np.asarray(phi, dtype=float) + np.pi, 2 * np.pi) - np.pi
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


@dataclass(frozen=True)
class PhaseSequence:
    """Immutable piecewise-constant phase schedule.

    Parameters
    ----------
    durations : sequence of float
        Segment lengths in seconds, all strictly positive.
    phases : sequence of float
        Coupling phase of each segment in radians. Stored wrapped to
        ``[-pi, pi)``.
    """

    durations: tuple = field()
    phases: tuple = field()

    def __post_init__(self):
        durations = tuple(float(d) for d in self.durations)
        phases = tuple(float(p) for p in np.atleast_1d(wrap_phase(list(self.phases))))
        if not durations:
            raise ValueError("a phase sequence needs at least one segment")
        if len(durations) != len(phases):
            raise ValueError(
                f"got {len(durations)} durations but {len(phases)} phases")
        if not all(math.isfinite(d) and d > 0 for d in durations):
            raise ValueError("segment durations must be finite and > 0")
        if not all(math.isfinite(p) for p in phases):
            raise ValueError("segment phases must be finite")
        object.__setattr__(self, "durations", durations)
        object.__setattr__(self, "phases", phases)

    def __len__(self):
        return len(self.durations)

    @cached_property
    def duration_array(self) -> np.ndarray:
        arr = np.array(self.durations, dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def phase_array(self) -> np.ndarray:
        arr = np.array(self.phases, dtype=float)
        arr.flags.writeable = False
        return arr

    @cached_property
    def boundaries(self) -> np.ndarray:
        """Segment start times followed by the total duration."""
        arr = np.concatenate(([0.0], np.cumsum(self.duration_array)))
        arr.flags.writeable = False
        return arr

    @property
    def total_duration(self) -> float:
        return float(math.fsum(self.durations))

    @cached_property
    def factors(self) -> np.ndarray:
        """Complex modulation value ``exp(-1j*phi_n)`` of every segment."""
        arr = np.exp(-1j * self.phase_array)
        arr.flags.writeable = False
        return arr

    def __call__(self, t):
        """Evaluate ``r(t)`` with half-open segment windows."""
        t = np.asarray(t, dtype=float)
        edges = self.boundaries
        idx = np.searchsorted(edges, t, side="right") - 1
        inside = (t >= 0.0) & (idx < len(self)) & (t < edges[-1])
        out = np.zeros(t.shape, dtype=complex)
        out[inside] = self.factors[idx[inside]]
        return out if out.ndim else complex(out)

    def segment_index(self, t: float) -> int:
        """Index of the segment containing ``t`` (the last one for ``t = T``)."""
        idx = int(np.searchsorted(self.boundaries, t, side="right")) - 1
        return min(max(idx, 0), len(self) - 1)


def base(segment_time: float) -> PhaseSequence:
    """Unmodulated single-segment sequence of length ``segment_time``."""
    if not (math.isfinite(segment_time) and segment_time > 0):
        raise ValueError(f"segment_time must be > 0, got {segment_time!r}")
    return PhaseSequence((segment_time,), (0.0,))


def apply_R(seq: PhaseSequence, detuning: float) -> PhaseSequence:
    """Append a copy of ``seq`` phase-shifted by ``detuning * T - pi``.

    ``r`` carries ``exp(-1j*phi)`` and the appended copy is multiplied by
    ``exp(-1j*(detuning*T - pi))``, so the shift is added to the phases.
    The result closes the trajectory of a mode at ``detuning`` and is twice
    as long as ``seq``.
    """
    if not math.isfinite(detuning):
        raise ValueError("detuning must be finite")
    shift = detuning * seq.total_duration - np.pi
    shifted = wrap_phase(seq.phase_array + shift)
    return PhaseSequence(seq.durations * 2,
                         tuple(seq.phases) + tuple(np.atleast_1d(shifted)))


def construct(detunings: Iterable[float], gate_time: float) -> PhaseSequence:
    """Build the sequence closing every mode in ``detunings`` at ``gate_time``.

    The first element is applied first (innermost), so the sequence usually
    written with operators ``R_b R_a`` acting on the base is entered as
    ``[a, b]``. Repeating a detuning raises the suppression order at that
    mode.
    """
    detunings = [float(d) for d in detunings]
    q = len(detunings)
    if q < 1:
        raise ValueError("need at least one detuning")
    if q > MAX_APPLICATIONS:
        raise ValueError(
            f"{q} applications would give 2**{q} segments; limit is {MAX_APPLICATIONS}")
    if not (math.isfinite(gate_time) and gate_time > 0):
        raise ValueError(f"gate_time must be > 0, got {gate_time!r}")
    n = 2 ** q
    durations = np.full(n, gate_time / n)
    phases = np.zeros(1)
    length = gate_time / n
    for d in detunings:
        if not math.isfinite(d):
            raise ValueError("detunings must be finite")
        phases = np.concatenate((phases, wrap_phase(phases + d * length - np.pi)))
        length *= 2
    return PhaseSequence(tuple(durations), tuple(phases))


def unit_moments(x, jmax: int) -> np.ndarray:
    """``J_m(x) = int_0^1 s**m exp(1j*x*s) ds`` for ``m = 0..jmax``.

    Uses the power series where upward recursion would amplify rounding
    (``|x| <= jmax + 2``) and the recursion elsewhere.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (jmax + 1,), dtype=complex)
    threshold = max(2.0, jmax + 2.0)
    small = np.abs(x) <= threshold
    if np.any(small):
        xs = x[small]
        nterms = int(math.e * threshold) + 40
        n = np.arange(nterms)
        # (ix)^n / n! built iteratively to avoid overflow
        powers = np.empty(xs.shape + (nterms,), dtype=complex)
        powers[..., 0] = 1.0
        for k in range(1, nterms):
            powers[..., k] = powers[..., k - 1] * (1j * xs) / k
        for m in range(jmax + 1):
            out[small, m] = np.sum(powers / (m + n + 1), axis=-1)
    large = ~small
    if np.any(large):
        xl = x[large]
        e = np.exp(1j * xl)
        cur = (e - 1.0) / (1j * xl)
        out[large, 0] = cur
        for m in range(1, jmax + 1):
            cur = (e - m * cur) / (1j * xl)
            out[large, m] = cur
    return out


def segment_exp_integrals(a: float, starts, lengths, j: int) -> np.ndarray:
    """``int t**j exp(1j*a*t) dt`` over ``[start, start + length]`` per segment."""
    starts = np.asarray(starts, dtype=float)
    lengths = np.asarray(lengths, dtype=float)
    J = unit_moments(a * lengths, j)
    total = np.zeros(starts.shape, dtype=complex)
    for m in range(j + 1):
        total += comb(j, m, exact=True) * starts ** (j - m) * lengths ** (m + 1) * J[..., m]
    return np.exp(1j * a * starts) * total


def moment(seq: PhaseSequence, detuning: float, order: int) -> complex:
    """``int_0^T r(t) exp(1j*detuning*t) t**order dt`` in closed form.

    A sequence with ``q`` applications of :func:`apply_R` at ``detuning``
    has vanishing moments for ``order < q``.
    """
    if not 0 <= order <= MAX_MOMENT_ORDER:
        raise ValueError(f"moment order must be in [0, {MAX_MOMENT_ORDER}]")
    pieces = segment_exp_integrals(detuning, seq.boundaries[:-1], seq.duration_array, order)
    return complex(np.sum(seq.factors * pieces))


@dataclass(frozen=True)
class BichromaticSegment:
    duration: float
    phase_blue: float
    phase_red: float


def to_bichromatic_phases(seq: PhaseSequence, spin_phase: float = 0.0) -> list[BichromaticSegment]:
    """Map coupling phases to blue/red tone phases.

    The coupling phase is half the blue-red difference, so each tone
    carries ``spin_phase +/- phi``. Phases are left unwrapped.
    """
    return [BichromaticSegment(d, spin_phase + p, spin_phase - p)
            for d, p in zip(seq.durations, seq.phases)]


def from_segments(segments: Sequence[tuple[float, float]]) -> PhaseSequence:
    """Build a sequence from ``(duration, phase)`` pairs."""
    durations, phases = zip(*segments) if segments else ((), ())
    return PhaseSequence(durations, phases)
