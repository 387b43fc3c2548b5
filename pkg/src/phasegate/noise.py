"""
Robustness of a gate to detuning errors.

Residual excitation ``P1`` is estimated either from the small-displacement
sum ``sum_k |rabi * f_k * alpha_k(T)|**2`` or exactly through
:mod:`phasegate.sim`. Time-dependent detuning noise ``beta(t)`` is described
to first order by a filter function: linearising the accumulated phase
gives ``dalpha_k = -1j * int_0^T beta(t) alpha_k(t) dt`` for a closed
trajectory, hence

    F_k(w) = |rabi * f_k|**2 * |int_0^T alpha_k(t) exp(1j*w*t) dt|**2

and ``E[P1] ~ (1/2pi) int S(w) F(w) dw``. A sinusoid of depth ``D`` with a
uniformly random phase has ``S(w) = pi*D**2/2 * (delta(w - w_m) + delta(w + w_m))``
so its phase-averaged ``P1`` is ``D**2/4 * (F(w_m) + F(-w_m))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import GateConfig, ModeSpectrum, Sinusoid, StaticOffset
from .parallel import ordered_map
from .sequence import PhaseSequence, unit_moments
from .sim import analytic_observables
from .trajectory import _CUMULATIVE, _NODES, _WEIGHTS, mode_endpoints_and_areas

__all__ = [
    "ResponseCurve",
    "residual_p1",
    "static_sweep",
    "plateau_width",
    "modal_filter_integral",
    "filter_function_first_order",
    "phase_resolved_response",
    "phase_averaged_response",
]


@dataclass(frozen=True)
class ResponseCurve:
    """Sampled response: ``values`` against ``abscissa``.

    ``unit`` tags the abscissa (``"rad/s"`` or ``"omega_taug_over_2pi"``);
    ``columns`` carries extra per-point series such as per-mode filter
    functions.
    """

    abscissa: np.ndarray
    values: np.ndarray
    kind: str
    unit: str
    metadata: dict = field(default_factory=dict)
    columns: dict = field(default_factory=dict)

    def __post_init__(self):
        abscissa = np.asarray(self.abscissa, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if abscissa.shape != values.shape:
            raise ValueError("abscissa and values differ in length")
        if not np.all(np.isfinite(values)) or np.any(values < -1e-12):
            raise ValueError("response values must be finite and non-negative")
        object.__setattr__(self, "abscissa", abscissa)
        object.__setattr__(self, "values", np.maximum(values, 0.0))


def _config_digest(config: GateConfig) -> str:
    import hashlib
    h = hashlib.sha256()
    h.update(np.array([config.rabi, config.gate_time]).tobytes())
    h.update(config.basis.encode())
    h.update(config.sequence.duration_array.tobytes())
    h.update(config.sequence.phase_array.tobytes())
    return h.hexdigest()[:16]


def residual_p1(config: GateConfig, spectrum: ModeSpectrum, noise=None, qubit: int = 0) -> float:
    """Small-displacement estimate ``sum_k |rabi * f_k * alpha_k(T)|**2`` for one qubit."""
    ends, _ = mode_endpoints_and_areas(config.sequence, spectrum.detunings, noise)
    f = spectrum.couplings()[:, qubit]
    return float(np.sum(np.abs(config.rabi * f * ends) ** 2))


def _rescaled(config: GateConfig, spectrum: ModeSpectrum, noise) -> GateConfig:
    from .design import ENTANGLING_PHASE_CONSTANT, MAX_PHASE
    _, areas = mode_endpoints_and_areas(config.sequence, spectrum.detunings, noise)
    f = spectrum.couplings()
    total = abs(float(np.sum(f[:, 0] * f[:, 1] * areas)))
    if total == 0:
        return config
    return config.with_rabi(math.sqrt(MAX_PHASE / (ENTANGLING_PHASE_CONSTANT * total)))


@dataclass(frozen=True)
class _StaticJob:
    config: GateConfig
    spectrum: ModeSpectrum
    exact: bool
    rescale: bool
    qubit: int

    def __call__(self, eps):
        noise = StaticOffset(eps)
        config = self.config
        if self.rescale and self.spectrum.qubit_count == 2:
            config = _rescaled(config, self.spectrum, noise)
        if self.exact:
            return analytic_observables(config, self.spectrum, noise).p1
        return residual_p1(config, self.spectrum, noise, self.qubit)


def static_sweep(config: GateConfig, spectrum: ModeSpectrum, errors, exact: bool = False,
                 rescale: bool = False, qubit: int = 0, workers: int = 1) -> ResponseCurve:
    """``P1`` against a static detuning error added to every mode.

    With ``exact`` the thermal two-qubit (or single-ion) ``P1`` comes from the
    analytic engine; otherwise the small-displacement sum for ``qubit`` is
    used. ``rescale`` re-solves the drive at each error so the gate stays
    maximally entangling.
    """
    errors = np.asarray(errors, dtype=float)
    job = _StaticJob(config, spectrum, exact, rescale, qubit)
    values = ordered_map(job, errors.tolist(), workers)
    return ResponseCurve(errors, values, "p1", "rad/s",
                         {"config": _config_digest(config), "exact": exact, "rescale": rescale})


def plateau_width(curve: ResponseCurve, threshold: float) -> float:
    """Width of the contiguous region around zero error where ``P1 <= threshold``."""
    x, y = curve.abscissa, curve.values
    centre = int(np.argmin(np.abs(x)))
    if y[centre] > threshold:
        return 0.0
    lo = centre
    while lo > 0 and y[lo - 1] <= threshold:
        lo -= 1
    hi = centre
    while hi < len(x) - 1 and y[hi + 1] <= threshold:
        hi += 1
    return float(x[hi] - x[lo])


# ---------------------------------------------------------------------------
# filter functions

def modal_filter_integral(seq: PhaseSequence, detuning: float, omegas) -> np.ndarray:
    """``int_0^T alpha(t) exp(1j*w*t) dt`` for every ``w`` (unit coupling).

    ``alpha`` is exact at the Gauss-Legendre nodes; panels are sized so that
    neither ``detuning`` nor ``w`` turns by more than ~1/2 rad per panel.
    """
    omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
    edges = seq.boundaries
    rate = abs(detuning) + float(np.max(np.abs(omegas)))
    total = np.zeros(omegas.shape, dtype=complex)
    start_alpha = 0j
    for n in range(len(seq)):
        a, b = edges[n], edges[n + 1]
        count = max(1, math.ceil(rate * (b - a) * 2))
        sub = np.linspace(a, b, count + 1)
        half = 0.5 * np.diff(sub)
        t = 0.5 * (sub[:-1] + sub[1:])[:, None] + half[:, None] * _NODES[None, :]
        u = (t - a).ravel()
        j0 = unit_moments(detuning * u, 0)[..., 0]
        alpha = start_alpha + seq.factors[n] * np.exp(1j * detuning * a) * u * j0
        w = (half[:, None] * _WEIGHTS[None, :]).ravel()
        total += np.exp(1j * np.outer(omegas, t.ravel())) @ (w * alpha)
        seg_len = b - a
        start_alpha = start_alpha + seq.factors[n] * np.exp(1j * detuning * a) * seg_len * \
            unit_moments(detuning * seg_len, 0)[0]
    return total


def filter_function_first_order(seq: PhaseSequence, spectrum: ModeSpectrum, rabi: float, omegas,
                                qubit: int = 0, symmetrize: bool = False) -> ResponseCurve:
    """First-order detuning-noise filter function ``F(w) = sum_k F_k(w)``.

    The abscissa is reported as ``w * T / 2pi``. With ``symmetrize`` the
    values are ``F(w) + F(-w)``. Per-mode curves are in
    ``columns["f_mode_k"]`` (1-based ``k``).
    """
    omegas = np.asarray(omegas, dtype=float)
    if np.any(omegas <= 0):
        raise ValueError("filter-function frequencies must be > 0")
    f = spectrum.couplings()[:, qubit]
    columns = {}
    total = np.zeros(omegas.shape)
    for k, mode in enumerate(spectrum.modes):
        weight = (rabi * f[k]) ** 2
        modal = weight * np.abs(modal_filter_integral(seq, mode.detuning, omegas)) ** 2
        if symmetrize:
            modal = modal + weight * np.abs(modal_filter_integral(seq, mode.detuning, -omegas)) ** 2
        columns[f"f_mode_{k + 1}"] = modal
        total = total + modal
    tau = seq.total_duration
    return ResponseCurve(omegas * tau / (2 * math.pi), total, "filter_function",
                         "omega_taug_over_2pi",
                         {"rabi": rabi, "qubit": qubit, "symmetrized": symmetrize}, columns)


def _single_qubit_p1(config: GateConfig, spectrum: ModeSpectrum, noise, qubit: int) -> float:
    view = spectrum if spectrum.qubit_count == 1 else spectrum.qubit_view(qubit)
    return analytic_observables(config, view, noise).p1


def phase_resolved_response(config: GateConfig, spectrum: ModeSpectrum, omega_mod: float,
                            depth: float, phase_grid: int = 32, qubit: int = 0) -> np.ndarray:
    """Exact single-ion ``P1`` for each modulation starting phase on a uniform grid."""
    if phase_grid < 8:
        raise ValueError("phase_grid must be >= 8")
    if depth == 0:
        return np.zeros(phase_grid)
    phases = 2 * math.pi * np.arange(phase_grid) / phase_grid
    return np.array([_single_qubit_p1(config, spectrum, Sinusoid(depth, omega_mod, p), qubit)
                     for p in phases])


def phase_averaged_response(config: GateConfig, spectrum: ModeSpectrum, omega_mod: float,
                            depth: float, phase_grid: int = 32, qubit: int = 0) -> float:
    """Mean single-ion ``P1`` over the modulation starting phase."""
    return float(np.mean(phase_resolved_response(config, spectrum, omega_mod, depth,
                                                 phase_grid, qubit)))
