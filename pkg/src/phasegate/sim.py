"""
Gate observables from two independent engines.

The analytic engine uses the exact solution of the spin-dependent force:
each joint eigenbranch ``lam`` of the spin operators picks up a displacement
``beta = rabi * s * alpha`` and a phase ``rabi**2 * s**2 * A`` per mode, where
``s = sum_mu lam_mu f_mu``. The modes are traced out against thermal states,
``<D(gamma)> = exp(-|gamma|**2 (nbar + 1/2))``.

The Fock oracle integrates the Schrodinger equation directly in a truncated
number basis and knows nothing about displacements or areas. It is slow and
exists to validate the analytic engine.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .model import GateConfig, ModeSpectrum
from .trajectory import mode_endpoints_and_areas, noise_carrier

__all__ = [
    "GateObservables",
    "ENTANGLING_PHASE_CONSTANT",
    "analytic_observables",
    "single_ion_p1",
    "parity_scan",
    "parity_curve",
    "fock_oracle",
    "reduced_density",
    "target_phase_sign",
    "TruncationError",
]

# Two-qubit phase Theta in exp(1j*Theta*s1*s2) per unit rabi**2 * f1*f2 * A.
ENTANGLING_PHASE_CONSTANT = 2.0

THERMAL_WEIGHT_TOL = 1e-8
TRUNCATION_LIMIT = 1e-6
MAX_MODE_STATES = 400

_SQ2 = 1 / math.sqrt(2)
# columns: eigenvectors of sigma_s with eigenvalues (+1, -1); |0> is +1 of sigma_z
_EIGENBASIS = {
    "x": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "y": np.array([[_SQ2, _SQ2], [1j * _SQ2, -1j * _SQ2]], dtype=complex),
    "z": np.eye(2, dtype=complex),
}
_PX = np.array([[0, 1], [1, 0]], dtype=complex)
_PY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PZ = np.diag([1.0, -1.0]).astype(complex)


class TruncationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GateObservables:
    """Measurement-basis populations and Bell-state figures of merit.

    ``p1`` is the probability that exactly one qubit is found in ``|1>``.
    ``bell_fidelity`` is the parity-based estimate
    ``(p0 + p2)/2 + parity_contrast/2``; ``overlap_fidelity`` is the direct
    overlap with the ideal Bell state. For one qubit only ``p0``/``p1`` are
    meaningful.
    """

    p0: float
    p1: float
    p2: float
    parity_contrast: float
    bell_fidelity: float
    overlap_fidelity: float
    residuals: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def populations(self):
        return (self.p0, self.p1, self.p2)

    def to_dict(self) -> dict:
        return {
            "p0": self.p0,
            "p1": self.p1,
            "p2": self.p2,
            "parity_contrast": self.parity_contrast,
            "bell_fidelity": self.bell_fidelity,
            "overlap_fidelity": self.overlap_fidelity,
            "per_mode_residual": [{"re": z.real, "im": z.imag} for z in self.residuals],
            "diagnostics": dict(self.diagnostics),
        }


def _branches(n: int) -> np.ndarray:
    """Eigenvalue labels of every branch, ordered like ``np.kron`` indices."""
    return np.array(list(itertools.product((1, -1), repeat=n)), dtype=float)


def _basis_matrix(basis: str, n: int) -> np.ndarray:
    v = _EIGENBASIS[basis]
    return v if n == 1 else np.kron(v, v)


def _check_qubits(spectrum: ModeSpectrum):
    if spectrum.qubit_count not in (1, 2):
        raise ValueError(f"supports 1 or 2 qubits, got {spectrum.qubit_count}")


def target_phase_sign(config: GateConfig, spectrum: ModeSpectrum) -> float:
    """Sign of the coherence ``rho[11, 00]`` produced by the noiseless gate."""
    if spectrum.qubit_count != 2:
        return 1.0
    _, areas = mode_endpoints_and_areas(config.sequence, spectrum.detunings)
    f = spectrum.couplings()
    theta = float(np.sum(f[:, 0] * f[:, 1] * areas))
    sign = 1.0 if theta >= 0 else -1.0
    return -sign if config.basis == "y" else sign


def reduced_density(config: GateConfig, spectrum: ModeSpectrum, ends, areas) -> np.ndarray:
    """Qubit density matrix in the measurement basis after tracing the modes."""
    n = spectrum.qubit_count
    lam = _branches(n)
    f = spectrum.couplings()                      # (M, N)
    s = lam @ f.T                                 # (B, M)
    beta = config.rabi * s * np.asarray(ends)[None, :]
    phase = config.rabi ** 2 * (s ** 2) @ np.asarray(areas)
    v = _basis_matrix(config.basis, n)
    c = np.conj(v[0, :])
    nbar = spectrum.nbars
    diff = beta[:, None, :] - beta[None, :, :]
    cross = np.imag(np.conj(beta[None, :, :]) * beta[:, None, :])   # Im(conj(b') b)
    overlap = np.exp(np.sum(1j * cross - np.abs(diff) ** 2 * (nbar + 0.5), axis=-1))
    rho_s = np.outer(c, np.conj(c)) * np.exp(1j * (phase[:, None] - phase[None, :])) * overlap
    return v @ rho_s @ v.conj().T


def _rotation(phi: float) -> np.ndarray:
    gen = math.cos(phi) * _PX + math.sin(phi) * _PY
    return math.cos(math.pi / 4) * np.eye(2) - 1j * math.sin(math.pi / 4) * gen


def parity_curve(rho: np.ndarray, analysis_phases) -> np.ndarray:
    """Parity ``P0 + P2 - P1`` after a global pi/2 pulse of each phase."""
    zz = np.kron(_PZ, _PZ)
    out = []
    for phi in analysis_phases:
        r = _rotation(phi)
        u = np.kron(r, r)
        out.append(float(np.real(np.trace(u @ rho @ u.conj().T @ zz))))
    return np.array(out)


def _fit_parity(phases, parity):
    phases = np.asarray(phases, dtype=float)
    design = np.column_stack((np.sin(2 * phases), np.cos(2 * phases), np.ones_like(phases)))
    (a, b, _), *_ = np.linalg.lstsq(design, parity, rcond=None)
    return float(math.hypot(a, b)), float(math.atan2(b, a))


def _observables(rho, chi_sign, residuals, diagnostics) -> GateObservables:
    pops = np.clip(np.real(np.diag(rho)), 0.0, 1.0)
    if rho.shape[0] == 2:
        p0, p1, p2 = pops[0], pops[1], 0.0
        contrast = 0.0
        overlap = 0.5 * p0
    else:
        p0, p1, p2 = pops[0], pops[1] + pops[2], pops[3]
        contrast = float(min(1.0, 2 * abs(rho[3, 0])))
        overlap = 0.5 * (p0 + p2) + float(np.real(np.exp(-0.5j * math.pi * chi_sign) * rho[3, 0]))
    fidelity = 0.5 * (p0 + p2) + 0.5 * contrast
    return GateObservables(float(p0), float(p1), float(p2), contrast,
                           float(min(1.0, fidelity)), float(min(1.0, max(0.0, overlap))),
                           tuple(complex(z) for z in residuals), diagnostics)


def analytic_observables(config: GateConfig, spectrum: ModeSpectrum, noise=None) -> GateObservables:
    """Exact thermal-averaged observables from the displacement solution."""
    _check_qubits(spectrum)
    ends, areas = mode_endpoints_and_areas(config.sequence, spectrum.detunings, noise)
    rho = reduced_density(config, spectrum, ends, areas)
    return _observables(rho, target_phase_sign(config, spectrum), config.rabi * ends,
                        {"engine": "analytic", "truncation": 0.0, "reliable": True})


def single_ion_p1(config: GateConfig, spectrum: ModeSpectrum, noise=None) -> float:
    """Thermal-averaged probability of finding a single ion in ``|1>``."""
    if spectrum.qubit_count != 1:
        raise ValueError("single_ion_p1 needs a one-qubit spectrum")
    return analytic_observables(config, spectrum, noise).p1


def parity_scan(config: GateConfig, spectrum: ModeSpectrum, analysis_phases, noise=None):
    """Simulated parity scan; returns ``(contrast, fitted_phase, fidelity)``.

    The parity after an analysis pulse of phase ``phi`` is fitted to
    ``c*sin(2*phi + phi0) + b`` by linear least squares.
    """
    if spectrum.qubit_count != 2:
        raise ValueError("parity_scan needs two qubits")
    analysis_phases = np.asarray(analysis_phases, dtype=float)
    if analysis_phases.size < 8:
        raise ValueError("need at least 8 analysis phases to fit the parity fringe")
    ends, areas = mode_endpoints_and_areas(config.sequence, spectrum.detunings, noise)
    rho = reduced_density(config, spectrum, ends, areas)
    contrast, phi0 = _fit_parity(analysis_phases, parity_curve(rho, analysis_phases))
    pops = np.real(np.diag(rho))
    fidelity = 0.5 * (pops[0] + pops[3]) + 0.5 * contrast
    return contrast, phi0, float(fidelity)


# ---------------------------------------------------------------------------
# truncated Fock-space oracle

def _thermal_ensemble(nbar: float):
    if nbar == 0:
        return np.array([0]), np.array([1.0])
    ratio = nbar / (1 + nbar)
    weights = []
    total = 0.0
    n = 0
    while total < 1 - THERMAL_WEIGHT_TOL:
        w = ratio ** n / (1 + nbar)
        weights.append(w)
        total += w
        n += 1
    weights = np.array(weights)
    return np.arange(len(weights)), weights / weights.sum()


def _propagate_mode(seq, carrier, coupling: float, cutoff: int, columns, rtol: float):
    """Propagate the Fock columns ``columns`` under ``H = i c (g a^dag - g* a)``.

    Integration restarts at every segment boundary so no step crosses a phase
    jump. Returns the final column block and the largest population seen in
    the top two levels for each column.
    """
    d = cutoff + 1
    a = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    adag = a.conj().T
    psi = np.zeros((d, len(columns)), dtype=complex)
    psi[columns, np.arange(len(columns))] = 1.0
    top = np.zeros(len(columns))
    if coupling == 0:
        return psi, top
    shape = psi.shape
    edges = seq.boundaries
    for n in range(len(seq)):
        factor = coupling * seq.factors[n]

        def rhs(t, y, factor=factor):
            gt = factor * carrier(t)
            return ((gt * adag - np.conj(gt) * a) @ y.reshape(shape)).ravel()

        sol = solve_ivp(rhs, (edges[n], edges[n + 1]), psi.ravel(), method="DOP853",
                        rtol=rtol, atol=rtol * 1e-2)
        if not sol.success:
            raise RuntimeError(f"Fock propagation failed in segment {n}: {sol.message}")
        states = sol.y.reshape(d, len(columns), -1)
        top = np.maximum(top, np.max(np.sum(np.abs(states[-2:]) ** 2, axis=0), axis=-1))
        psi = states[..., -1]
    return psi, top


def fock_oracle(config: GateConfig, spectrum: ModeSpectrum, noise=None, cutoff: int = 12,
                rtol: float = 1e-11) -> GateObservables:
    """Brute-force observables from time-ordered propagation in a Fock basis.

    The Hamiltonian commutes with every ``sigma_s`` and is a sum of single-mode
    terms, so the propagation is carried out per spin branch and per mode in
    the truncated number basis; the joint state is the tensor product of
    those pieces. Thermal modes are represented by a Fock-state ensemble
    truncated at cumulative weight ``1 - 1e-8`` and renormalised.

    The ``truncation`` diagnostic is the largest thermal-weighted population
    seen in the two highest levels at any solver step. Results above
    ``1e-6`` are flagged ``reliable = False``.
    """
    _check_qubits(spectrum)
    if cutoff < 5:
        raise ValueError("cutoff must be >= 5")
    m = len(spectrum)
    if (cutoff + 1) ** m > MAX_MODE_STATES:
        raise ValueError(
            f"{m} modes with cutoff {cutoff} exceed {MAX_MODE_STATES} motional states")
    n = spectrum.qubit_count
    lam = _branches(n)
    f = spectrum.couplings()
    s = lam @ f.T                                   # (B, M)
    seq = config.sequence
    b = len(lam)
    overlaps = np.ones((b, b), dtype=complex)
    truncation = 0.0
    residuals = []
    for k, mode in enumerate(spectrum.modes):
        cols, weights = _thermal_ensemble(mode.thermal_occupation)
        if cols[-1] > cutoff - 2:
            raise TruncationError(
                f"mode {k}: thermal ensemble needs level {cols[-1]} but cutoff is {cutoff}")
        carrier = noise_carrier(mode.detuning, noise)
        finals = {}
        for i in range(b):
            key = s[i, k]
            if key not in finals:
                psi, top = _propagate_mode(seq, carrier, config.rabi * key, cutoff, cols, rtol)
                finals[key] = psi
                truncation = max(truncation, float(np.dot(weights, top)))
        # <a> of a displaced Fock state is the displacement, so any branch
        # with nonzero coupling yields rabi * alpha for this mode
        key = max(finals, key=abs)
        if key != 0:
            a = np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1)
            mean_a = np.sum(weights * np.sum(np.conj(finals[key]) * (a @ finals[key]), axis=0))
            residuals.append(complex(mean_a / key))
        else:
            residuals.append(0j)
        for i in range(b):
            for j in range(b):
                pi_, pj = finals[s[i, k]], finals[s[j, k]]
                overlaps[i, j] *= np.sum(weights * np.sum(np.conj(pj) * pi_, axis=0))
    v = _basis_matrix(config.basis, n)
    c = np.conj(v[0, :])
    rho = v @ (np.outer(c, np.conj(c)) * overlaps) @ v.conj().T
    diagnostics = {"engine": "fock", "truncation": truncation,
                   "reliable": truncation <= TRUNCATION_LIMIT, "cutoff": cutoff}
    return _observables(rho, target_phase_sign(config, spectrum), residuals, diagnostics)
