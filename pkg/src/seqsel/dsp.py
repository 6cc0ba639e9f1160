"""Dual-polarization sampled signals and shared DSP primitives.

Conventions used throughout the package:

* The forward FFT is unscaled and the inverse FFT carries the 1/K factor
  (numpy's default), so Parseval reads ``sum|x|^2 == sum|X|^2 / K``.
* All block processing is circular: a symbol sequence is treated as one
  periodic block, which keeps pulse shaping, propagation and matched
  filtering exactly invertible on the FFT grid.
* ``|sample|^2`` is an optical power in W; energies are plain sums of
  ``|.|^2`` over samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = [
    "DualPolSignal",
    "PulseShape",
    "SpectralGrid",
    "fft_forward",
    "fft_inverse",
    "angular_freqs",
    "rrc_taps",
    "rrc_frequency_response",
    "upsample_and_shape",
    "launch_waveform",
    "matched_filter_downsample",
    "resample",
    "frequency_shift",
    "wdm_multiplex",
]


@dataclass(frozen=True)
class DualPolSignal:
    """Complex baseband waveform on two polarizations.

    ``center_offset`` records the carrier offset (Hz) of this waveform
    relative to the center of the WDM grid.  Instances are treated as
    immutable; operations return new signals.
    """

    samples_x: np.ndarray
    samples_y: np.ndarray
    sample_rate: float
    center_offset: float = 0.0

    def __post_init__(self) -> None:
        if np.size(self.samples_x) == 0 or np.size(self.samples_y) == 0:
            raise ValueError("empty signal")
        if len(self.samples_x) != len(self.samples_y):
            raise ValueError("polarization length mismatch")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def num_samples(self) -> int:
        return len(self.samples_x)

    def power(self) -> float:
        """Mean power summed over both polarizations, in W."""
        return float(
            np.mean(np.abs(self.samples_x) ** 2 + np.abs(self.samples_y) ** 2)
        )

    def energy(self) -> float:
        """Total energy (sum of |.|^2 over samples and polarizations)."""
        return float(
            np.sum(np.abs(self.samples_x) ** 2) + np.sum(np.abs(self.samples_y) ** 2)
        )

    def stacked(self) -> np.ndarray:
        """Both polarizations as a (2, K) array (copy)."""
        return np.stack([self.samples_x, self.samples_y])

    def with_samples(self, stacked: np.ndarray, **overrides) -> "DualPolSignal":
        """New signal with replaced samples, metadata carried over."""
        sig = replace(self, samples_x=stacked[0], samples_y=stacked[1])
        return replace(sig, **overrides) if overrides else sig


@dataclass(frozen=True)
class SpectralGrid:
    """FFT bin layout of a sampled block."""

    fft_size: int
    bin_spacing: float

    def __post_init__(self) -> None:
        if self.fft_size < 1:
            raise ValueError("fft_size must be >= 1")
        if self.bin_spacing <= 0:
            raise ValueError("bin_spacing must be positive")

    @classmethod
    def for_signal(cls, signal: DualPolSignal) -> "SpectralGrid":
        return cls(signal.num_samples, signal.sample_rate / signal.num_samples)

    def frequencies(self) -> np.ndarray:
        """Bin center frequencies in FFT order."""
        return np.fft.fftfreq(self.fft_size, 1.0 / (self.fft_size * self.bin_spacing))


def fft_forward(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Unscaled forward FFT (mixed-radix sizes supported)."""
    if np.size(x) == 0:
        raise ValueError("empty input")
    return np.fft.fft(x, axis=axis)


def fft_inverse(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Inverse FFT carrying the 1/K scale."""
    if np.size(x) == 0:
        raise ValueError("empty input")
    return np.fft.ifft(x, axis=axis)


def angular_freqs(num_samples: int, sample_rate: float) -> np.ndarray:
    """Angular frequency grid (rad/s) in FFT bin order."""
    return 2.0 * np.pi * np.fft.fftfreq(num_samples, 1.0 / sample_rate)


# ---------------------------------------------------------------------------
# Root-raised-cosine pulse


def _rrc_impulse(t: np.ndarray, rolloff: float) -> np.ndarray:
    """RRC impulse response on a unit symbol period, analytic limits at
    the singular points (t = 0 and t = +-1/(4*rolloff))."""
    if rolloff == 0.0:
        return np.sinc(t)
    b = rolloff
    h = np.empty_like(t, dtype=float)
    at_zero = np.isclose(t, 0.0, atol=1e-12)
    at_sing = np.isclose(np.abs(t), 1.0 / (4.0 * b), atol=1e-12)
    regular = ~(at_zero | at_sing)
    tr = t[regular]
    num = np.sin(np.pi * tr * (1.0 - b)) + 4.0 * b * tr * np.cos(np.pi * tr * (1.0 + b))
    den = np.pi * tr * (1.0 - (4.0 * b * tr) ** 2)
    h[regular] = num / den
    h[at_zero] = 1.0 - b + 4.0 * b / np.pi
    h[at_sing] = (b / np.sqrt(2.0)) * (
        (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * b))
        + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * b))
    )
    return h


@dataclass(frozen=True)
class PulseShape:
    """Unit-energy sampled pulse with its design parameters.

    ``samples_per_symbol`` records the grid the taps were sampled on;
    shaping at any other rate falls back to the analytic response.
    """

    rolloff: float
    span_symbols: int
    samples_per_symbol: float
    taps: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not 0.0 <= self.rolloff <= 1.0:
            raise ValueError("rolloff must be in [0, 1]")
        taps = np.asarray(self.taps, dtype=float)
        if len(taps) % 2 == 0:
            raise ValueError("tap count must be odd (symmetric pulse)")
        scale = np.max(np.abs(taps))
        if not np.allclose(taps, taps[::-1], atol=1e-12 * scale):
            raise ValueError("taps must be symmetric")
        energy = float(np.sum(taps**2))
        if abs(energy - 1.0) > 1e-9:
            raise ValueError("taps must have unit energy")


def rrc_taps(rolloff: float, span_symbols: int, sps: float) -> PulseShape:
    """Root-raised-cosine taps spanning ``span_symbols`` at ``sps``
    samples per symbol, normalized to unit energy.

    ``span_symbols * sps`` must be an even integer so the taps sit on a
    symmetric sample grid.
    """
    if not 0.0 <= rolloff <= 1.0:
        raise ValueError("rolloff must be in [0, 1]")
    if span_symbols < 1 or sps <= 0:
        raise ValueError("span_symbols and sps must be positive")
    span_samples = span_symbols * sps
    if abs(span_samples - round(span_samples)) > 1e-9:
        raise ValueError("span_symbols * sps must be an integer sample count")
    span_samples = int(round(span_samples))
    if span_samples % 2 != 0:
        raise ValueError("span_symbols * sps must be even")
    k = np.arange(span_samples + 1) - span_samples // 2
    t = k / sps
    taps = _rrc_impulse(t, rolloff)
    taps = taps / np.sqrt(np.sum(taps**2))
    return PulseShape(
        rolloff=rolloff, span_symbols=span_symbols, samples_per_symbol=sps, taps=taps
    )


def rrc_frequency_response(nu: np.ndarray, rolloff: float) -> np.ndarray:
    """Square-root raised-cosine response at frequencies ``nu`` in units
    of the symbol rate (band edge at |nu| = (1 + rolloff)/2)."""
    a = np.abs(np.asarray(nu, dtype=float))
    if rolloff == 0.0:
        rc = np.where(a < 0.5, 1.0, 0.0)
        rc = np.where(np.isclose(a, 0.5), 0.5, rc)
        return np.sqrt(rc)
    lo = (1.0 - rolloff) / 2.0
    hi = (1.0 + rolloff) / 2.0
    rc = np.zeros_like(a)
    rc[a <= lo] = 1.0
    trans = (a > lo) & (a < hi)
    rc[trans] = 0.5 * (1.0 + np.cos(np.pi / rolloff * (a[trans] - lo)))
    return np.sqrt(rc)


# ---------------------------------------------------------------------------
# Pulse shaping / matched filtering (circular, frequency domain)


def _is_integer_sps(sps: float) -> bool:
    return abs(sps - round(sps)) < 1e-9


def _shaping_response(pulse: PulseShape, n_symbols: int, sps: float, n_samples: int) -> np.ndarray:
    """Shaping filter response on the length-``n_samples`` FFT grid.

    When ``sps`` is an integer matching the grid the taps were built on,
    the DFT of the (circularly centered) taps is used, making shaping an
    exact circular FIR convolution.  Any other rate uses the analytic
    band-limited response, i.e. ideal band-limited resampling of the
    shaped waveform; the sqrt(sps) factor matches the tap path's energy
    normalization (waveform energy == symbol energy).
    """
    if _is_integer_sps(sps) and abs(sps - pulse.samples_per_symbol) < 1e-9:
        taps = pulse.taps
        if len(taps) > n_samples:
            raise ValueError(
                f"pulse span ({len(taps)} taps) exceeds block length ({n_samples} samples)"
            )
        half = (len(taps) - 1) // 2
        padded = np.zeros(n_samples)
        padded[: half + 1] = taps[half:]
        if half:
            padded[-half:] = taps[:half]
        return np.fft.fft(padded)
    nu = np.fft.fftfreq(n_samples) * sps
    return np.sqrt(sps) * rrc_frequency_response(nu, pulse.rolloff)


def _sample_count(n_symbols: int, sps: float) -> int:
    n_samples = n_symbols * sps
    if abs(n_samples - round(n_samples)) > 1e-6:
        raise ValueError("n * sps must be an integer sample count")
    return int(round(n_samples))


def _symbol_bin_map(n_samples: int, n_symbols: int) -> np.ndarray:
    """For each sample-grid FFT bin, the symbol-grid bin it aliases onto.

    Both grids share the frequency resolution 1/(block duration), so a
    sample bin at signed index nu lands on symbol bin nu mod n_symbols.
    The signed form matters when n_samples is not a multiple of
    n_symbols (fractional sps).
    """
    nu = (np.arange(n_samples) + n_samples // 2) % n_samples - n_samples // 2
    return nu % n_symbols


def upsample_and_shape(
    symbols_x: np.ndarray,
    symbols_y: np.ndarray,
    sps: float,
    pulse: PulseShape,
    symbol_rate: float,
) -> DualPolSignal:
    """Shape a dual-pol symbol block into a waveform at ``sps`` samples
    per symbol.

    The block is treated as periodic.  Total waveform energy equals total
    symbol energy on each polarization (so mean waveform power is mean
    2D-symbol energy divided by sps).
    """
    if sps <= 1.0:
        raise ValueError("sps must exceed 1")
    n = len(symbols_x)
    if n == 0:
        raise ValueError("empty symbol block")
    if len(symbols_y) != n:
        raise ValueError("polarization length mismatch")
    n_samples = _sample_count(n, sps)
    h = _shaping_response(pulse, n, sps, n_samples)
    bins = _symbol_bin_map(n_samples, n)
    out = np.empty((2, n_samples), dtype=complex)
    for p, syms in enumerate((symbols_x, symbols_y)):
        spec = np.fft.fft(np.asarray(syms, dtype=complex))
        out[p] = np.fft.ifft(spec[bins] * h)
    return DualPolSignal(out[0], out[1], sample_rate=sps * symbol_rate)


def launch_waveform(
    symbols_x: np.ndarray,
    symbols_y: np.ndarray,
    sps: float,
    pulse: PulseShape,
    symbol_rate: float,
) -> DualPolSignal:
    """Shaped waveform rescaled so its mean power equals the mean
    4D-symbol energy (launch-power convention, rate independent)."""
    sig = upsample_and_shape(symbols_x, symbols_y, sps, pulse, symbol_rate)
    scale = np.sqrt(sps)
    return sig.with_samples(sig.stacked() * scale)


def matched_filter_downsample(
    signal: DualPolSignal,
    pulse: PulseShape,
    sps: float,
    n_symbols: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Matched filter and symbol-time sampling, the adjoint of
    :func:`upsample_and_shape`.  Returns per-polarization symbol arrays.
    """
    n_samples = signal.num_samples
    if _sample_count(n_symbols, sps) != n_samples:
        raise ValueError(
            f"signal length {n_samples} does not cover {n_symbols} symbols at sps={sps}"
        )
    h = _shaping_response(pulse, n_symbols, sps, n_samples)
    hconj = np.conj(h)
    bins = _symbol_bin_map(n_samples, n_symbols)
    # Mean over symbol bins of the aliased |H|^2, the cascade's flat gain.
    gain = float(np.sum(np.abs(h) ** 2)) / n_symbols
    out = []
    for samples in (signal.samples_x, signal.samples_y):
        spec = np.fft.fft(samples) * hconj
        folded = np.zeros(n_symbols, dtype=complex)
        np.add.at(folded, bins, spec)
        out.append(np.fft.ifft(folded) / gain)
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Rate conversion, frequency shifting, multiplexing


def resample(signal: DualPolSignal, new_rate: float) -> DualPolSignal:
    """Ideal band-limited resampling via centered spectral zero-padding
    (or truncation), preserving waveform amplitude."""
    n_old = signal.num_samples
    n_new = n_old * new_rate / signal.sample_rate
    if abs(n_new - round(n_new)) > 1e-6:
        raise ValueError("new rate must give an integer sample count")
    n_new = int(round(n_new))
    if n_new < 1:
        raise ValueError("resampled block is empty")
    if n_new == n_old:
        return signal
    out = np.empty((2, n_new), dtype=complex)
    for p, samples in enumerate((signal.samples_x, signal.samples_y)):
        spec = np.fft.fftshift(np.fft.fft(samples))
        if n_new < n_old:
            start = n_old // 2 - n_new // 2
            spec_new = spec[start : start + n_new]
        else:
            spec_new = np.zeros(n_new, dtype=complex)
            start = n_new // 2 - n_old // 2
            spec_new[start : start + n_old] = spec
        out[p] = np.fft.ifft(np.fft.ifftshift(spec_new)) * (n_new / n_old)
    return DualPolSignal(out[0], out[1], sample_rate=new_rate, center_offset=signal.center_offset)


def frequency_shift(signal: DualPolSignal, offset: float) -> DualPolSignal:
    """Multiply by a complex carrier; energy is preserved exactly."""
    if abs(offset) >= signal.sample_rate / 2.0:
        raise ValueError("offset must lie within the Nyquist band")
    t = np.arange(signal.num_samples) / signal.sample_rate
    phasor = np.exp(2j * np.pi * offset * t)
    return DualPolSignal(
        signal.samples_x * phasor,
        signal.samples_y * phasor,
        sample_rate=signal.sample_rate,
        center_offset=signal.center_offset + offset,
    )


def wdm_multiplex(channels: list[DualPolSignal], spacing: float) -> DualPolSignal:
    """Sum channels at offsets ``k * spacing`` with k centered on zero
    (e.g. -2..2 for five channels, +-1/2 for two)."""
    if not channels:
        raise ValueError("no channels to multiplex")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    rate = channels[0].sample_rate
    length = channels[0].num_samples
    for ch in channels[1:]:
        if ch.sample_rate != rate or ch.num_samples != length:
            raise ValueError("channels must share sample rate and length")
    m = len(channels)
    offsets = (np.arange(m) - (m - 1) / 2.0) * spacing
    acc = np.zeros((2, length), dtype=complex)
    for ch, off in zip(channels, offsets):
        shifted = frequency_shift(ch, float(off)) if off != 0.0 else ch
        acc[0] += shifted.samples_x
        acc[1] += shifted.samples_y
    return DualPolSignal(acc[0], acc[1], sample_rate=rate, center_offset=0.0)
