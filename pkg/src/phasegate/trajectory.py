"""
Phase-space trajectories of the driven modes.

For a mode at detuning ``delta`` the unit-coupling displacement is

    alpha(t) = int_0^t exp(1j*delta*s) r(s) ds

and the enclosed (signed) area is ``A = Im int_0^T conj(alpha) dalpha``.
Both have closed forms segment by segment, which is what the noiseless path
uses. Noise makes the integrand non-elementary; the noisy path integrates it
with composite Gauss-Legendre panels that never straddle a segment boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .model import StaticOffset, noise_phase
from .sequence import PhaseSequence, unit_moments

__all__ = [
    "Trajectory",
    "displacement",
    "endpoint",
    "enclosed_area",
    "endpoint_and_area",
    "displacement_noisy",
    "noisy_endpoint_and_area",
    "kernel",
    "noise_carrier",
    "sample_trajectory",
    "mode_endpoints_and_areas",
    "QUADRATURE_RTOL",
]

QUADRATURE_RTOL = 1e-10
_GL_ORDER = 16


def _integration_matrix(order: int):
    """Gauss-Legendre nodes, weights and the spectral cumulative-integral matrix.

    ``S[j, m]`` integrates the Lagrange basis polynomial of node ``m`` from -1
    to node ``j``.
    """
    nodes, weights = legendre.leggauss(order)
    vander = legendre.legvander(nodes, order - 1)
    coeffs = np.linalg.inv(vander)  # column m: Legendre coefficients of Lagrange poly m
    cumulative = np.empty((order, order))
    for m in range(order):
        antideriv = legendre.legint(coeffs[:, m], lbnd=-1.0)
        cumulative[:, m] = legendre.legval(nodes, antideriv)
    return nodes, weights, cumulative


_NODES, _WEIGHTS, _CUMULATIVE = _integration_matrix(_GL_ORDER)


def _check_time(seq: PhaseSequence, t: float) -> float:
    total = seq.total_duration
    if not (0.0 <= t <= total * (1 + 1e-12)):
        raise ValueError(f"t = {t!r} lies outside [0, {total!r}]")
    return min(float(t), total)


def _segment_increments(seq: PhaseSequence, detuning: float) -> np.ndarray:
    starts = seq.boundaries[:-1]
    lengths = seq.duration_array
    j0 = unit_moments(detuning * lengths, 0)[..., 0]
    return seq.factors * np.exp(1j * detuning * starts) * lengths * j0


def displacement(seq: PhaseSequence, detuning: float, t: float) -> complex:
    """Closed-form ``alpha(t)`` for ``0 <= t <= T``."""
    t = _check_time(seq, t)
    idx = seq.segment_index(t)
    increments = _segment_increments(seq, detuning)
    done = math.fsum(increments[:idx].real) + 1j * math.fsum(increments[:idx].imag)
    start = seq.boundaries[idx]
    u = t - start
    if u <= 0:
        return complex(done)
    j0 = unit_moments(detuning * u, 0)[0]
    return complex(done + seq.factors[idx] * np.exp(1j * detuning * start) * u * j0)


def endpoint(seq: PhaseSequence, detuning: float) -> complex:
    """``alpha(T)``."""
    inc = _segment_increments(seq, detuning)
    return complex(math.fsum(inc.real), math.fsum(inc.imag))


def _intra_area(x):
    """``(x - sin x) / x**2``, the area swept inside one segment per length**2."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    xs = x[small]
    out[small] = xs / 6 - xs ** 3 / 120 + xs ** 5 / 5040 - xs ** 7 / 362880
    xl = x[~small]
    out[~small] = (xl - np.sin(xl)) / xl ** 2
    return out


def endpoint_and_area(seq: PhaseSequence, detuning: float) -> tuple[complex, float]:
    inc = _segment_increments(seq, detuning)
    running = np.concatenate(([0.0], np.cumsum(inc)))
    cross = np.imag(np.conj(running[:-1]) * running[1:])
    intra = seq.duration_array ** 2 * _intra_area(detuning * seq.duration_array)
    end = complex(math.fsum(inc.real), math.fsum(inc.imag))
    return end, float(math.fsum(cross) + math.fsum(intra))


def enclosed_area(seq: PhaseSequence, detuning: float) -> float:
    """Signed area ``Im int conj(alpha) dalpha`` over the whole sequence (s**2).

    A counter-clockwise circle of radius ``1/delta`` gives ``2*pi/delta**2``.
    """
    return endpoint_and_area(seq, detuning)[1]


# ---------------------------------------------------------------------------
# noisy path

def noise_carrier(detuning: float, noise=None):
    """``exp(1j*(detuning*t + Phi(t))) * envelope(t)``: the drive without ``r(t)``.

    The noise model supplies either the accumulated phase ``Phi`` (detuning
    injection) or the envelope (envelope injection).
    """
    def w(t):
        t = np.asarray(t, dtype=float)
        value = np.exp(1j * detuning * t)
        if noise is None:
            return value
        if noise.injection == "envelope":
            return value * noise.rate(t)
        return value * np.exp(1j * noise_phase(noise, t))
    return w


def kernel(seq: PhaseSequence, detuning: float, noise=None):
    """Return ``g(t) = r(t) * carrier(t)``, the unit-coupling drive seen by the mode."""
    carrier = noise_carrier(detuning, noise)

    def g(t):
        return seq(t) * carrier(t)
    return g


def _panel_integrals(seq: PhaseSequence, detuning: float, noise, panels_per_rad: float,
                     upto: float | None = None):
    """Endpoint and area from composite GL panels at a given density."""
    g = kernel(seq, detuning, noise)
    total_duration = seq.total_duration
    rate = abs(detuning) + (noise.max_rate(total_duration) if noise is not None else 0.0)
    alpha = 0.0 + 0.0j
    area = 0.0
    edges = seq.boundaries
    stop = total_duration if upto is None else upto
    for n in range(len(seq)):
        a, b = edges[n], min(edges[n + 1], stop)
        if b <= a:
            break
        count = max(1, math.ceil(rate * (b - a) * panels_per_rad))
        sub = np.linspace(a, b, count + 1)
        half = 0.5 * np.diff(sub)
        mid = 0.5 * (sub[:-1] + sub[1:])
        # keep rounded node times inside this segment's half-open window
        t = mid[:, None] + half[:, None] * _NODES[None, :]
        values = g(np.clip(t, a, np.nextafter(edges[n + 1], a)))
        panel = half * (values @ _WEIGHTS)
        local = half[:, None] * (values @ _CUMULATIVE.T)
        starts = alpha + np.concatenate(([0.0], np.cumsum(panel)[:-1]))
        area += float(np.sum(np.imag(np.conj(starts) * panel)))
        area += float(np.sum(half[:, None] * _WEIGHTS[None, :]
                             * np.imag(np.conj(local) * values)))
        alpha = starts[-1] + panel[-1]
    return complex(alpha), area


def noisy_endpoint_and_area(seq: PhaseSequence, detuning: float, noise,
                            t: float | None = None,
                            rtol: float = QUADRATURE_RTOL) -> tuple[complex, float]:
    """Endpoint ``alpha(t)`` and area up to ``t`` under a noise model.

    Panel density doubles until both quantities move by less than ``rtol``
    relative to the sequence's natural scales (``T`` and ``T**2``).
    """
    scale = seq.total_duration
    if noise is not None and noise.injection == "envelope":
        scale *= max(1.0, float(np.max(np.abs(noise.rate(seq.boundaries)))))
    density = 1.0 / math.pi
    prev = _panel_integrals(seq, detuning, noise, density, t)
    for _ in range(12):
        density *= 2
        cur = _panel_integrals(seq, detuning, noise, density, t)
        if abs(cur[0] - prev[0]) <= rtol * scale and abs(cur[1] - prev[1]) <= rtol * scale ** 2:
            return cur
        prev = cur
    raise RuntimeError("noisy trajectory quadrature did not converge")


def displacement_noisy(seq: PhaseSequence, detuning: float, noise, t: float | None = None) -> complex:
    """``int_0^t g(s) ds`` with the noise model folded into ``g``."""
    if t is None:
        t = seq.total_duration
    t = _check_time(seq, t)
    if noise is not None and not hasattr(noise, "injection"):
        raise TypeError(f"unsupported noise model {type(noise).__name__}")
    return noisy_endpoint_and_area(seq, detuning, noise, t)[0]


# ---------------------------------------------------------------------------
# sampling

@dataclass(frozen=True)
class Trajectory:
    detuning: float
    times: np.ndarray
    displacements: np.ndarray
    endpoint: complex
    area: float


def sample_trajectory(seq: PhaseSequence, detuning: float, points_per_segment: int = 32) -> Trajectory:
    """Exact samples on a uniform grid inside each segment plus all boundaries."""
    if points_per_segment < 1:
        raise ValueError("points_per_segment must be >= 1")
    edges = seq.boundaries
    frac = np.arange(points_per_segment) / points_per_segment
    local = seq.duration_array[:, None] * frac[None, :]
    times = np.concatenate(((edges[:-1, None] + local).ravel(), [edges[-1]]))
    inc = _segment_increments(seq, detuning)
    starts = np.concatenate(([0.0], np.cumsum(inc)))[:-1]
    x = detuning * local
    j0 = unit_moments(x, 0)[..., 0]
    phase0 = np.exp(1j * detuning * edges[:-1])
    values = starts[:, None] + (seq.factors * phase0)[:, None] * local * j0
    end, area = endpoint_and_area(seq, detuning)
    displacements = np.concatenate((values.ravel(), [end]))
    return Trajectory(float(detuning), times, displacements, end, area)


def mode_endpoints_and_areas(seq: PhaseSequence, detunings, noise=None):
    """Endpoints and areas for every detuning, closed form where possible."""
    ends = np.empty(len(detunings), dtype=complex)
    areas = np.empty(len(detunings))
    for k, d in enumerate(detunings):
        if noise is None:
            ends[k], areas[k] = endpoint_and_area(seq, d)
        elif isinstance(noise, StaticOffset):
            ends[k], areas[k] = endpoint_and_area(seq, d + noise.epsilon)
        else:
            ends[k], areas[k] = noisy_endpoint_and_area(seq, d, noise)
    return ends, areas
