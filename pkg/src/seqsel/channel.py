"""Ground-truth fiber propagation: dual-pol Manakov split-step with
lumped EDFA amplification.

The split-step is symmetric: dispersion and loss act over half steps on
either side of a common Kerr phase rotation evaluated on the midpoint
field.  The nonlinear weight of a step of length h is the loss-aware
effective length 2*sinh(alpha*h/2)/alpha referenced to the midpoint, so
the accumulated phase equals the exact integral of gamma*P(z) for a CW
field under pure loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_VAC
from scipy.constants import h as PLANCK

from .dsp import DualPolSignal, angular_freqs

__all__ = [
    "FiberParams",
    "LinkConfig",
    "SsfmPolicy",
    "ssfm_span",
    "edfa",
    "propagate_link",
    "accumulated_dispersion_s2",
]

MANAKOV_FACTOR = 8.0 / 9.0
_LN10 = float(np.log(10.0))


@dataclass(frozen=True)
class FiberParams:
    """Per-km fiber constants (attenuation in dB, dispersion in ps^2,
    Kerr coefficient in 1/W)."""

    alpha_db_km: float
    beta2_ps2_km: float
    gamma_w_km: float
    length_km: float

    def __post_init__(self) -> None:
        if self.alpha_db_km < 0:
            raise ValueError("alpha_db_km must be >= 0")
        if self.gamma_w_km < 0:
            raise ValueError("gamma_w_km must be >= 0")
        if self.length_km <= 0:
            raise ValueError("length_km must be positive")

    @property
    def alpha_lin(self) -> float:
        """Power attenuation coefficient in 1/km."""
        return self.alpha_db_km * _LN10 / 10.0

    @property
    def beta2_s2_km(self) -> float:
        return self.beta2_ps2_km * 1e-24

    @property
    def effective_length_km(self) -> float:
        a = self.alpha_lin
        if a == 0.0:
            return self.length_km
        return (1.0 - np.exp(-a * self.length_km)) / a


@dataclass(frozen=True)
class LinkConfig:
    """A chain of identical amplified spans."""

    spans: int
    fiber: FiberParams
    edfa_noise_figure_db: float
    center_wavelength_nm: float = 1550.0

    def __post_init__(self) -> None:
        if self.spans < 1:
            raise ValueError("spans must be >= 1")
        if self.center_wavelength_nm <= 0:
            raise ValueError("center_wavelength_nm must be positive")

    @property
    def total_length_km(self) -> float:
        return self.spans * self.fiber.length_km

    @property
    def span_gain_db(self) -> float:
        return self.fiber.alpha_db_km * self.fiber.length_km

    @property
    def center_frequency_hz(self) -> float:
        return C_VAC / (self.center_wavelength_nm * 1e-9)


@dataclass(frozen=True)
class SsfmPolicy:
    """Step layout inside one span.  ``log_spaced`` places boundaries at
    equal increments of the span's cumulative effective length."""

    steps_per_span: int = 100
    step_distribution: str = "uniform"

    def __post_init__(self) -> None:
        if self.steps_per_span < 1:
            raise ValueError("steps_per_span must be >= 1")
        if self.step_distribution not in ("uniform", "log_spaced"):
            raise ValueError("step_distribution must be 'uniform' or 'log_spaced'")


def span_step_lengths(fiber: FiberParams, policy: SsfmPolicy) -> np.ndarray:
    q = policy.steps_per_span
    if policy.step_distribution == "uniform" or fiber.alpha_lin == 0.0:
        return np.full(q, fiber.length_km / q)
    a = fiber.alpha_lin
    targets = np.linspace(0.0, fiber.effective_length_km, q + 1)
    z = -np.log(1.0 - a * targets[:-1]) / a
    z = np.append(z, fiber.length_km)
    return np.diff(z)


def _split_step(
    stacked: np.ndarray,
    omega2: np.ndarray,
    beta2_s2_km: float,
    alpha_field_km: float,
    dz_km: np.ndarray,
    phase_fn,
) -> np.ndarray:
    """Symmetric split-step core shared by the full and the reduced-count
    engines.  ``phase_fn(step_index, power)`` returns the nonlinear phase
    for the midpoint field; interior half-steps are merged.

    ``alpha_field_km`` is the field decay rate (power alpha / 2); zero
    for constant-envelope propagation.
    """
    lin_cache: dict[float, np.ndarray] = {}

    def linear_factor(length: float) -> np.ndarray:
        op = lin_cache.get(length)
        if op is None:
            op = np.exp((0.5j * beta2_s2_km * omega2 - alpha_field_km) * length)
            lin_cache[length] = op
        return op

    u = stacked
    n_steps = len(dz_km)
    seg = 0.5 * dz_km[0]
    for i in range(n_steps):
        u = np.fft.ifft(np.fft.fft(u, axis=1) * linear_factor(float(seg)), axis=1)
        power = np.abs(u[0]) ** 2 + np.abs(u[1]) ** 2
        u = u * np.exp(1j * phase_fn(i, power))
        seg = 0.5 * dz_km[i] + (0.5 * dz_km[i + 1] if i + 1 < n_steps else 0.0)
    u = np.fft.ifft(np.fft.fft(u, axis=1) * linear_factor(float(0.5 * dz_km[-1])), axis=1)
    return u


def ssfm_span(signal: DualPolSignal, fiber: FiberParams, policy: SsfmPolicy) -> DualPolSignal:
    """Propagate one fiber span (no amplification)."""
    dz = span_step_lengths(fiber, policy)
    omega2 = angular_freqs(signal.num_samples, signal.sample_rate) ** 2
    a = fiber.alpha_lin
    if a == 0.0:
        weights = dz.copy()
    else:
        # Midpoint-referenced effective lengths.
        weights = 2.0 * np.sinh(0.5 * a * dz) / a
    coeff = MANAKOV_FACTOR * fiber.gamma_w_km * weights

    def phase(step: int, power: np.ndarray) -> np.ndarray:
        return coeff[step] * power

    out = _split_step(signal.stacked(), omega2, fiber.beta2_s2_km, 0.5 * a, dz, phase)
    return signal.with_samples(out)


def edfa(
    signal: DualPolSignal,
    gain_db: float,
    nf_db: float,
    rng: np.random.Generator | None,
    *,
    noiseless: bool = False,
    center_frequency_hz: float,
) -> DualPolSignal:
    """Flat-gain amplifier adding white circular-Gaussian ASE.

    Per polarization the added power is S_ase * sample_rate with
    S_ase = (h*nu/2) * (G*F - 1), G and F in linear units.
    """
    gain = 10.0 ** (gain_db / 10.0)
    amp = np.sqrt(gain)
    out = signal.stacked() * amp
    if not noiseless:
        if rng is None:
            raise ValueError("rng required for noisy amplification")
        nf = 10.0 ** (nf_db / 10.0)
        s_ase = 0.5 * PLANCK * center_frequency_hz * (gain * nf - 1.0)
        p_noise = s_ase * signal.sample_rate
        sigma = np.sqrt(p_noise / 2.0)
        shape = out.shape
        out = out + sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return signal.with_samples(out)


def propagate_link(
    signal: DualPolSignal,
    link: LinkConfig,
    policy: SsfmPolicy,
    *,
    noiseless: bool = False,
    rng: np.random.Generator | None = None,
) -> DualPolSignal:
    """Full link: spans of fiber, each followed by an exactly
    loss-compensating EDFA."""
    if not noiseless and rng is None:
        raise ValueError("rng required for noisy propagation")
    nu = link.center_frequency_hz
    out = signal
    for _ in range(link.spans):
        out = ssfm_span(out, link.fiber, policy)
        out = edfa(
            out,
            link.span_gain_db,
            link.edfa_noise_figure_db,
            rng,
            noiseless=noiseless,
            center_frequency_hz=nu,
        )
    return out


def accumulated_dispersion_s2(link: LinkConfig) -> float:
    """Total beta2 * L of the link in s^2."""
    return link.fiber.beta2_s2_km * link.total_length_km
