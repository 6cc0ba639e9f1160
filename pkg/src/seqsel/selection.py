"""Candidate generation and sequence selection.

Bit-scrambling selection transmits one of N_t scrambled variants of the
payload, identified to the receiver by ceil(log2 N_t) pilot bits that
occupy the leading (unscrambled) sign-bit positions.  The threshold
("bound") variant instead accepts any sequence whose metric falls below
an empirical quantile, at a rate cost of -log2(eta) bits per sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log2

import numpy as np

from . import shaping as sh

__all__ = [
    "SelectionOutcome",
    "BoundSelection",
    "RateLedger",
    "bs_candidates",
    "bs_select",
    "bound_select",
    "rate_ledger",
    "recover_info_bits",
]


@dataclass(frozen=True)
class SelectionOutcome:
    chosen_index: int
    chosen_metric: float
    all_metrics: np.ndarray
    pilot_bit_count: int


@dataclass(frozen=True)
class BoundSelection:
    threshold: float
    accepted_indices: np.ndarray
    loss_bits_per_sequence: float


def pilot_bit_count(n_candidates: int) -> int:
    return int(ceil(log2(n_candidates))) if n_candidates > 1 else 0


def bs_candidates(
    info_bits: np.ndarray,
    n_t: int,
    master_seed: int,
    cfg: sh.EssConfig,
    n_symbols: int,
    norm: float,
) -> list[sh.SymbolSequence]:
    """The N_t candidate blocks for one payload: candidate i carries its
    index in the pilot prefix followed by the payload XORed with mask i
    (mask 0 is the identity, so candidate 0 is the unscrambled fallback).
    """
    if n_t < 1 or (n_t & (n_t - 1)) != 0:
        raise ValueError("n_t must be a positive power of two")
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    n_pilots = pilot_bit_count(n_t)
    expected = sh.payload_bit_count(cfg, n_symbols) - n_pilots
    if len(info_bits) != expected:
        raise ValueError(
            f"expected {expected} info bits for n_t={n_t}, got {len(info_bits)}"
        )
    candidates = []
    for i in range(n_t):
        mask = sh.scramble_mask(master_seed, i, len(info_bits))
        body = sh.scramble(info_bits, mask)
        pilots = sh._int_to_bits(i, n_pilots)
        bits = np.concatenate([pilots, body])
        candidates.append(
            sh.bits_to_sequence(
                bits, cfg, n_symbols, norm, pilot_bits=pilots, scramble_index=i
            )
        )
    return candidates


def bs_select(candidates: list[sh.SymbolSequence], metric_fn) -> SelectionOutcome:
    """Score every candidate and pick the minimum (smallest index on
    ties)."""
    if not candidates:
        raise ValueError("no candidates")
    metrics = np.array(
        [float(metric_fn(c)) for c in candidates], dtype=float
    )
    if not np.all(np.isfinite(metrics)):
        raise ValueError("non-finite candidate metric")
    idx = int(np.argmin(metrics))
    return SelectionOutcome(
        chosen_index=idx,
        chosen_metric=float(metrics[idx]),
        all_metrics=metrics,
        pilot_bit_count=pilot_bit_count(len(candidates)),
    )


def bound_select(population_metrics: np.ndarray, eta: float) -> BoundSelection:
    """Empirical eta-quantile acceptance: the threshold is the
    ceil(eta*N)-th smallest metric and every candidate at or below it is
    accepted."""
    metrics = np.asarray(population_metrics, dtype=float)
    if metrics.size == 0:
        raise ValueError("empty metric population")
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    order = ceil(eta * metrics.size - 1e-12)
    threshold = float(np.sort(metrics)[order - 1])
    accepted = np.nonzero(metrics <= threshold)[0]
    return BoundSelection(
        threshold=threshold,
        accepted_indices=accepted,
        loss_bits_per_sequence=-log2(eta),
    )


@dataclass(frozen=True)
class RateLedger:
    """Information rates in bits per 4D symbol."""

    gross_bits_per_4d: float
    pilot_loss_per_4d: float
    bound_loss_per_4d: float

    @property
    def net_bits_per_4d(self) -> float:
        return self.gross_bits_per_4d - self.pilot_loss_per_4d - self.bound_loss_per_4d


def rate_ledger(
    cfg: sh.EssConfig, n_symbols: int, n_t: int, eta: float | None = None
) -> RateLedger:
    """Gross rate 4 + 4k/L, minus the pilot overhead (scrambling mode,
    eta None) or the threshold-acceptance loss (eta given)."""
    gross = 4.0 + 4.0 * cfg.bits_per_block / cfg.block_len
    if eta is None:
        pilot = pilot_bit_count(n_t) / n_symbols
        bound = 0.0
    else:
        if not 0.0 < eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")
        pilot = 0.0
        bound = -log2(eta) / n_symbols
    return RateLedger(
        gross_bits_per_4d=gross, pilot_loss_per_4d=pilot, bound_loss_per_4d=bound
    )


def recover_info_bits(
    payload_bits: np.ndarray, n_t: int, master_seed: int
) -> tuple[np.ndarray, int]:
    """Receiver-side inversion: read the pilot prefix, regenerate the
    indicated mask and descramble.  Returns (info_bits, candidate_index).
    """
    if n_t < 1 or (n_t & (n_t - 1)) != 0:
        raise ValueError("n_t must be a positive power of two")
    payload_bits = np.asarray(payload_bits, dtype=np.uint8)
    n_pilots = pilot_bit_count(n_t)
    if len(payload_bits) < n_pilots:
        raise ValueError(
            f"payload ({len(payload_bits)} bits) shorter than the pilot prefix ({n_pilots})"
        )
    index = sh._bits_to_int(payload_bits[:n_pilots]) if n_pilots else 0
    if index >= n_t:
        raise ValueError(f"pilot index {index} out of range for n_t={n_t}")
    body = payload_bits[n_pilots:]
    mask = sh.scramble_mask(master_seed, index, len(body))
    return sh.scramble(body, mask), index
