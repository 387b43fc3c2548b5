import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from scipy.integrate import quad

from phasegate.model import Mode, ModeSpectrum

TWO_PI = 2 * math.pi

settings.register_profile("phasegate", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("phasegate")


def khz(x):
    return TWO_PI * 1e3 * x


def quad_segments(seq, integrand, upto=None):
    """Independent adaptive quadrature of a complex integrand of ``t``, split at segment edges."""
    stop = seq.total_duration if upto is None else upto
    total = 0j
    for n in range(len(seq)):
        a, b = seq.boundaries[n], min(seq.boundaries[n + 1], stop)
        if b <= a:
            break
        factor = seq.factors[n]
        re = quad(lambda t: (factor * integrand(t)).real, a, b, epsabs=1e-14 * (b - a), epsrel=1e-12, limit=400)[0]
        im = quad(lambda t: (factor * integrand(t)).imag, a, b, epsabs=1e-14 * (b - a), epsrel=1e-12, limit=400)[0]
        total += re + 1j * im
    return total


def quad_area(seq, detuning):
    """``Im int conj(alpha) dalpha`` by nested quadrature (``alpha`` itself by quad)."""
    from phasegate.trajectory import displacement

    def integrand(t):
        return np.conj(displacement(seq, detuning, t)) * np.exp(1j * detuning * t)

    return quad_segments(seq, integrand).imag


@pytest.fixture
def fig2b():
    """Two-mode gate of the 80 us demonstration: first mode -8.5 kHz, second solved for."""
    tau = 80e-6
    d1 = khz(-8.5)
    d2 = 0.657 * math.pi / (2 * tau / 4)
    return tau, d1, d2


@pytest.fixture
def tilt_pair():
    """Two modes 10 kHz apart with centre-of-mass and tilt couplings."""
    def make(offset=0.0, nbar=0.0):
        return ModeSpectrum(2, (Mode(offset, (1.0, 1.0), nbar),
                                Mode(khz(10) + offset, (1.0, -1.0), nbar)))
    return make


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s[1:s.index("]")])):
            terminalreporter.write_line(line)
