"""Enumerative sphere shaping, bit scrambling and bit-to-symbol mapping.

Amplitude blocks of length L are drawn from the lexicographically first
2**k sequences whose energy (sum of squared amplitudes) does not exceed
E_max.  Counting uses exact big-integer arithmetic; encode/decode walk
the count table, so the index <-> sequence map is a bijection on
[0, 2**k).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import gcd

import numpy as np

__all__ = [
    "AmplitudeAlphabet",
    "EssConfig",
    "EssCountTable",
    "SymbolSequence",
    "ScrambleMask",
    "ess_count_table",
    "ess_encode",
    "ess_decode",
    "scramble",
    "scramble_mask",
    "bits_to_sequence",
    "sequence_to_bits",
    "payload_bit_count",
    "amplitude_marginal",
    "mean_amplitude_energy",
    "smallest_max_energy",
]

_MASK_STREAM_TAG = 0x5C72


@dataclass(frozen=True)
class AmplitudeAlphabet:
    """Strictly increasing positive odd amplitude levels (QAM rails)."""

    levels: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.levels:
            raise ValueError("alphabet must not be empty")
        if any(a <= 0 or a % 2 == 0 for a in self.levels):
            raise ValueError("amplitudes must be positive odd integers")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("amplitudes must be strictly increasing")

    def __len__(self) -> int:
        return len(self.levels)


QAM64_AMPLITUDES = AmplitudeAlphabet((1, 3, 5, 7))


class EssCountTable:
    """Counts T(i, e) of admissible completions: T(i, e) is the number of
    ways to extend a length-i prefix of energy e to a full block of
    length L with total energy <= E_max.  T(L, e) = 1 for e <= E_max."""

    def __init__(self, block_len: int, alphabet: AmplitudeAlphabet, max_energy: int):
        if block_len < 1:
            raise ValueError("block_len must be >= 1")
        if max_energy < block_len * alphabet.levels[0] ** 2:
            raise ValueError("max_energy admits no sequence")
        self.block_len = block_len
        self.alphabet = alphabet
        self.max_energy = max_energy
        squares = [a * a for a in alphabet.levels]
        base = squares[0]
        # Prefix energies live on a sublattice: i*base + step*Z.
        step = 0
        for s in squares[1:]:
            step = gcd(step, s - base)
        self._step = step if step > 0 else 1
        rows: list[dict[int, int]] = [dict() for _ in range(block_len)]
        for i in range(block_len - 1, -1, -1):
            lo = i * base
            hi = max_energy - (block_len - i) * base
            for e in range(lo, hi + 1, self._step):
                total = 0
                for s in squares:
                    e_next = e + s
                    if e_next > max_energy:
                        break  # squares are increasing
                    if i + 1 == block_len:
                        total += 1
                    else:
                        total += rows[i + 1].get(e_next, 0)
                if total:
                    rows[i][e] = total
        self._rows = rows

    def count(self, i: int, e: int) -> int:
        """T(i, e); zero for unreachable states."""
        if not 0 <= i <= self.block_len:
            raise ValueError("prefix length out of range")
        if i == self.block_len:
            return 1 if e <= self.max_energy else 0
        return self._rows[i].get(e, 0)

    @property
    def total(self) -> int:
        """Number of admissible blocks, T(0, 0)."""
        return self.count(0, 0)


def ess_count_table(
    block_len: int, alphabet: AmplitudeAlphabet, max_energy: int
) -> EssCountTable:
    return EssCountTable(block_len, alphabet, max_energy)


@dataclass(frozen=True)
class EssConfig:
    """Shaping parameters: block length L, energy bound E_max and the
    number of index bits k per block (k must equal floor(log2 T(0, 0)))."""

    block_len: int
    max_energy: int
    bits_per_block: int
    alphabet: AmplitudeAlphabet = QAM64_AMPLITUDES

    @cached_property
    def table(self) -> EssCountTable:
        table = ess_count_table(self.block_len, self.alphabet, self.max_energy)
        k = table.total.bit_length() - 1
        if k != self.bits_per_block:
            raise ValueError(
                f"bits_per_block={self.bits_per_block} inconsistent with "
                f"count table (floor(log2 T(0,0)) = {k})"
            )
        return table


def _bits_to_int(bits: np.ndarray) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def ess_encode(bits: np.ndarray, cfg: EssConfig) -> np.ndarray:
    """Map ``bits_per_block`` bits (MSB first) to the index-th amplitude
    block in lexicographic order."""
    if len(bits) != cfg.bits_per_block:
        raise ValueError(
            f"expected {cfg.bits_per_block} bits, got {len(bits)}"
        )
    table = cfg.table
    index = _bits_to_int(bits)
    out = np.empty(cfg.block_len, dtype=np.int64)
    energy = 0
    for i in range(cfg.block_len):
        for a in cfg.alphabet.levels:
            c = table.count(i + 1, energy + a * a)
            if index < c:
                out[i] = a
                energy += a * a
                break
            index -= c
        else:  # pragma: no cover - impossible for index < 2**k <= T(0,0)
            raise ValueError("index exceeds codebook size")
    return out


def ess_decode(amplitudes: np.ndarray, cfg: EssConfig) -> np.ndarray:
    """Inverse of :func:`ess_encode`: recover the index bits of an
    admissible amplitude block."""
    if len(amplitudes) != cfg.block_len:
        raise ValueError("amplitude block has wrong length")
    table = cfg.table
    levels = cfg.alphabet.levels
    index = 0
    energy = 0
    for i, amp in enumerate(np.asarray(amplitudes, dtype=np.int64)):
        if amp not in levels:
            raise ValueError(f"amplitude {amp} not in alphabet")
        for a in levels:
            if a == amp:
                break
            index += table.count(i + 1, energy + a * a)
        energy += amp * amp
        if energy > cfg.max_energy:
            raise ValueError(f"block energy {energy} exceeds E_max={cfg.max_energy}")
    if index >= 1 << cfg.bits_per_block:
        raise ValueError("amplitude block lies outside the 2**k codebook prefix")
    return _int_to_bits(index, cfg.bits_per_block)


# ---------------------------------------------------------------------------
# Codebook statistics (used for power normalization and decoder priors)


def _prefix_counts(table: EssCountTable) -> list[dict[int, int]]:
    """W(i, e): number of admissible length-i prefixes with energy e."""
    rows: list[dict[int, int]] = [{0: 1}]
    squares = [a * a for a in table.alphabet.levels]
    for i in range(table.block_len):
        nxt: dict[int, int] = {}
        for e, w in rows[i].items():
            for s in squares:
                e2 = e + s
                # Only keep states that can still complete the block.
                if table.count(i + 1, e2) > 0 or (i + 1 == table.block_len and e2 <= table.max_energy):
                    nxt[e2] = nxt.get(e2, 0) + w
        rows.append(nxt)
    return rows


def amplitude_marginal(cfg: EssConfig) -> np.ndarray:
    """Per-level amplitude probabilities averaged over positions, taken
    over the whole admissible sphere (exact rational arithmetic)."""
    table = cfg.table
    prefixes = _prefix_counts(table)
    totals = [0] * len(cfg.alphabet.levels)
    for i in range(table.block_len):
        for e, w in prefixes[i].items():
            for j, a in enumerate(cfg.alphabet.levels):
                totals[j] += w * table.count(i + 1, e + a * a)
    denom = table.block_len * table.total
    return np.array([float(Fraction(t, denom)) for t in totals])


def mean_amplitude_energy(cfg: EssConfig) -> float:
    """Sphere-average of a^2 per amplitude."""
    probs = amplitude_marginal(cfg)
    levels = np.array(cfg.alphabet.levels, dtype=float)
    return float(np.sum(probs * levels**2))


# ---------------------------------------------------------------------------
# Scrambling


@dataclass(frozen=True)
class ScrambleMask:
    """XOR mask; deterministic given (master_seed, index), index 0 is the
    all-zero (identity) mask."""

    index: int
    mask_bits: np.ndarray = field(repr=False)


def scramble_mask(master_seed: int, index: int, length: int) -> ScrambleMask:
    if index < 0:
        raise ValueError("mask index must be >= 0")
    if index == 0:
        bits = np.zeros(length, dtype=np.uint8)
    else:
        rng = np.random.default_rng(
            np.random.SeedSequence([master_seed, _MASK_STREAM_TAG, index])
        )
        bits = rng.integers(0, 2, size=length, dtype=np.uint8)
    return ScrambleMask(index=index, mask_bits=bits)


def scramble(bits: np.ndarray, mask: ScrambleMask) -> np.ndarray:
    """XOR ``bits`` with the mask prefix (an involution)."""
    if len(mask.mask_bits) < len(bits):
        raise ValueError("mask shorter than payload")
    return np.bitwise_xor(
        np.asarray(bits, dtype=np.uint8), mask.mask_bits[: len(bits)]
    )


# ---------------------------------------------------------------------------
# Bit <-> symbol mapping


@dataclass(frozen=True)
class SymbolSequence:
    """A dual-pol 4D-symbol block together with the bits that produced it."""

    symbols_x: np.ndarray
    symbols_y: np.ndarray
    payload_bits: np.ndarray
    pilot_bits: np.ndarray
    scramble_index: int

    @property
    def num_symbols(self) -> int:
        return len(self.symbols_x)


def payload_bit_count(cfg: EssConfig, n_symbols: int) -> int:
    """Bits carried by n 4D symbols: 4 sign bits each plus k bits per
    amplitude block (4n amplitudes split into blocks of L)."""
    amplitudes = 4 * n_symbols
    if amplitudes % cfg.block_len:
        raise ValueError("shaping block length must divide 4*n")
    return 4 * n_symbols + (amplitudes // cfg.block_len) * cfg.bits_per_block


def bits_to_sequence(
    bits: np.ndarray,
    cfg: EssConfig,
    n_symbols: int,
    norm: float,
    *,
    pilot_bits: np.ndarray | None = None,
    scramble_index: int = 0,
) -> SymbolSequence:
    """Map a payload bit vector to a dual-pol symbol block.

    Layout: the first 4n bits are sign bits in (I_x, Q_x, I_y, Q_y) order
    per 4D symbol; the remainder selects amplitude blocks which fill the
    same component order block-sequentially.  Sign bit 1 flips to the
    negative rail.  ``norm`` scales the integer constellation so the mean
    4D-symbol energy matches the configured launch power.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    expected = payload_bit_count(cfg, n_symbols)
    if len(bits) != expected:
        raise ValueError(f"expected {expected} payload bits, got {len(bits)}")
    if norm <= 0:
        raise ValueError("norm must be positive")
    n_sign = 4 * n_symbols
    sign_bits = bits[:n_sign]
    amp_bits = bits[n_sign:]
    blocks = (4 * n_symbols) // cfg.block_len
    amplitudes = np.empty(4 * n_symbols, dtype=np.int64)
    for b in range(blocks):
        chunk = amp_bits[b * cfg.bits_per_block : (b + 1) * cfg.bits_per_block]
        amplitudes[b * cfg.block_len : (b + 1) * cfg.block_len] = ess_encode(chunk, cfg)
    signs = 1.0 - 2.0 * sign_bits.astype(float)
    comps = signs * amplitudes * norm
    symbols_x = comps[0::4] + 1j * comps[1::4]
    symbols_y = comps[2::4] + 1j * comps[3::4]
    return SymbolSequence(
        symbols_x=symbols_x,
        symbols_y=symbols_y,
        payload_bits=bits,
        pilot_bits=np.array([], dtype=np.uint8) if pilot_bits is None else pilot_bits,
        scramble_index=scramble_index,
    )


def sequence_to_bits(
    symbols_x: np.ndarray, symbols_y: np.ndarray, cfg: EssConfig, norm: float
) -> np.ndarray:
    """Hard-decision demap back to the payload bit vector (inverse of
    :func:`bits_to_sequence` for clean symbols)."""
    n_symbols = len(symbols_x)
    comps = np.empty(4 * n_symbols)
    comps[0::4] = np.real(symbols_x)
    comps[1::4] = np.imag(symbols_x)
    comps[2::4] = np.real(symbols_y)
    comps[3::4] = np.imag(symbols_y)
    comps = comps / norm
    levels = np.array(cfg.alphabet.levels, dtype=float)
    mags = np.abs(comps)
    amplitudes = np.array(
        [cfg.alphabet.levels[int(np.argmin(np.abs(levels - m)))] for m in mags],
        dtype=np.int64,
    )
    sign_bits = (comps < 0).astype(np.uint8)
    blocks = (4 * n_symbols) // cfg.block_len
    amp_bits = np.concatenate(
        [
            ess_decode(amplitudes[b * cfg.block_len : (b + 1) * cfg.block_len], cfg)
            for b in range(blocks)
        ]
    )
    return np.concatenate([sign_bits, amp_bits])


def smallest_max_energy(
    block_len: int, alphabet: AmplitudeAlphabet, bits_per_block: int
) -> int:
    """Smallest E_max whose sphere holds at least 2**bits_per_block
    blocks (search over the energy sublattice)."""
    base = alphabet.levels[0] ** 2
    target = 1 << bits_per_block
    lo = block_len * base
    hi = block_len * alphabet.levels[-1] ** 2
    if ess_count_table(block_len, alphabet, hi).total < target:
        raise ValueError("alphabet cannot reach the requested rate")
    step = 0
    for a in alphabet.levels[1:]:
        step = gcd(step, a * a - base)
    step = step if step else 1
    while lo < hi:
        mid = lo + ((hi - lo) // (2 * step)) * step
        if ess_count_table(block_len, alphabet, mid).total >= target:
            hi = mid
        else:
            lo = mid + step
    return lo
