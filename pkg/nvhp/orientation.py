"""
Orientation-dependent NV Hamiltonians and optical initialization.

The NV axis makes an angle theta with the applied field. In the high-field
basis {|+1>, |0>, |-1>} quantized along the field the zero-field tensor leaves
an effective splitting D(theta), off-diagonal couplings G1 and G2, and a
second-order shift delta(theta) of the m_s = +-1 levels.
"""

import functools
import math
from typing import Tuple

import numpy as np
from scipy import integrate

from nvhp.errors import PoleError
from nvhp.logging_config import get_logger
from nvhp.models.models import BranchEnum, EffectiveNvEnergies, NvConstants, OrientationParams
from nvhp.spincore import TWO_PI

logger = get_logger("nvhp")

# basis index of |0> in {|+1>, |0>, |-1>}
ZERO = 1


@functools.lru_cache(maxsize=32)
def check_high_field(c: NvConstants) -> bool:
    """Warn once per constants set when gamma_e*B <= 3D"""
    ok = c.gamma_e_B > 3 * c.D
    if not ok:
        logger.warning("Field too low for the high-field effective Hamiltonian",
                       event_type="low_field", gamma_e_B=c.gamma_e_B, D=c.D)
    return ok


def _d_theta(theta, c: NvConstants):
    return (c.D * (1 + 3 * np.cos(2 * theta)) + 3 * c.E * (1 - np.cos(2 * theta))) / 4


def _g1(o: OrientationParams, c: NvConstants) -> complex:
    return (c.D - c.E) * math.sin(o.theta) * math.cos(o.theta) * np.exp(1j * o.phi) / math.sqrt(2)


def _g2(o: OrientationParams, c: NvConstants) -> complex:
    return (c.D + 3 * c.E + (c.E - c.D) * math.cos(2 * o.theta)) * np.exp(2j * o.phi) / 4


def d_theta(o: OrientationParams, c: NvConstants) -> float:
    """Effective zero-field splitting D(theta) in MHz"""
    return float(_d_theta(o.theta, c))


def delta_theta(o: OrientationParams, c: NvConstants) -> float:
    """
    Second-order shift delta(theta) of the m_s = +-1 levels (MHz).

    Raises:
        PoleError: when gamma_e*B equals |D(theta)|
    """
    check_high_field(c)
    gb = c.gamma_e_B
    d = d_theta(o, c)
    denominator = gb ** 2 - d ** 2
    if abs(denominator) < 1e-9 * gb ** 2:
        raise PoleError("gamma_e*B coincides with |D(theta)|", theta=o.theta, gamma_e_B=gb, d_theta=d)
    return gb * abs(_g1(o, c)) ** 2 / denominator + abs(_g2(o, c)) ** 2 / (2 * gb)


def effective_energies(o: OrientationParams, c: NvConstants) -> EffectiveNvEnergies:
    return EffectiveNvEnergies(d_theta=d_theta(o, c), delta_theta=delta_theta(o, c),
                               g1=complex(_g1(o, c)), g2=complex(_g2(o, c)))


def full_nv_hamiltonian(o: OrientationParams, c: NvConstants) -> np.ndarray:
    """
    3x3 NV Hamiltonian in the field-quantized basis {|+1>, |0>, |-1>} (MHz).

    The |0> level is the zero of energy.
    """
    d = d_theta(o, c)
    gb = c.gamma_e_B
    g1 = _g1(o, c)
    g2 = _g2(o, c)
    return np.array([
        [d + gb, -g1, g2],
        [-np.conj(g1), 0.0, g1],
        [np.conj(g2), np.conj(g1), d - gb],
    ], dtype=complex)


def transition_frequency_minus(o: OrientationParams, c: NvConstants) -> float:
    """|0> <-> |-1> resonance frequency gamma_e*B + delta(theta) - D(theta) (MHz)"""
    return c.gamma_e_B + delta_theta(o, c) - d_theta(o, c)


def optical_initial_state(o: OrientationParams) -> np.ndarray:
    """State prepared by optical pumping along the NV axis, in {|+1>, |0>, |-1>}"""
    s = math.sin(o.theta) / math.sqrt(2)
    return np.array([s * np.exp(1j * o.phi), math.cos(o.theta), -s * np.exp(-1j * o.phi)], dtype=complex)


def initial_polarization(theta: float, branch: BranchEnum = BranchEnum.POSITIVE) -> float:
    """
    Electron polarization available to the protocol at a given orientation.

    Small-angle protocol: cos^2 - sin^2/2. Large-angle protocol: the m_s=+-1
    excess renormalized by N_r = 1/(sin^2/2 + cos^2).
    """
    c2 = math.cos(theta) ** 2
    s2 = 1.0 - c2
    if branch == BranchEnum.POSITIVE:
        return c2 - s2 / 2
    return (s2 / 2 - c2) / (s2 / 2 + c2)


def avg_initial_polarization_small_angle(theta_max: float) -> float:
    """Cap average of cos^2(theta) - sin^2(theta)/2 over [0, theta_max] with weight sin(theta)"""
    if not 0 < theta_max <= math.pi / 2:
        raise ValueError("theta_max must lie in (0, pi/2]")
    num, _ = integrate.quad(lambda t: initial_polarization(t) * math.sin(t), 0.0, theta_max,
                            epsabs=1e-14, epsrel=1e-12)
    return num / (1.0 - math.cos(theta_max))


def avg_initial_polarization_large_angle(band: Tuple[float, float]) -> float:
    """Band average of the large-angle polarization with weight sin(theta)"""
    lo, hi = band
    if not 0 < lo <= hi < math.pi:
        raise ValueError("band must lie within (0, pi)")
    if hi - lo < 1e-12:
        return initial_polarization(lo, BranchEnum.NEGATIVE)
    num, _ = integrate.quad(lambda t: initial_polarization(t, BranchEnum.NEGATIVE) * math.sin(t), lo, hi,
                            epsabs=1e-14, epsrel=1e-12)
    return num / (math.cos(lo) - math.cos(hi))


def cap_fraction(theta_max: float) -> float:
    """Fraction of uniformly oriented axes with min(theta, pi - theta) <= theta_max"""
    return 1.0 - math.cos(theta_max)


def band_fraction(lo: float, hi: float) -> float:
    """Fraction of uniformly oriented axes with lo <= theta <= hi"""
    return (math.cos(lo) - math.cos(hi)) / 2.0


def sample_orientations(rng: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Uniform directions on the sphere: cos(theta) ~ U(-1, 1), phi ~ U(0, 2pi)"""
    cos_theta = rng.uniform(-1.0, 1.0, size=n)
    phi = rng.uniform(0.0, 2 * math.pi, size=n)
    return np.arccos(cos_theta), phi


def secular_population_trace(o: OrientationParams, c: NvConstants, duration: float,
                             n_points: int = 200001) -> Tuple[np.ndarray, np.ndarray]:
    """
    |<0|psi(t)>|^2 on a uniform grid over [0, duration] when starting in |0>.

    Propagation is exact (time-independent Hamiltonian, eigendecomposition).
    """
    energies, vecs = np.linalg.eigh(full_nv_hamiltonian(o, c))
    weights = np.abs(vecs[ZERO, :]) ** 2
    t = np.linspace(0.0, duration, n_points)
    amplitude = np.exp(-1j * TWO_PI * np.outer(t, energies)) @ weights
    return t, np.abs(amplitude) ** 2


def validate_secular_approx(o: OrientationParams, c: NvConstants, duration: float,
                            n_points: int = 200001) -> float:
    """Minimum |0> population over [0, duration] under the full 3x3 Hamiltonian"""
    _, population = secular_population_trace(o, c, duration, n_points)
    return float(population.min())
