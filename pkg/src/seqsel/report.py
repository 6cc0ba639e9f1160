"""Render sweep records to figures on disk (headless backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .harness import SweepRecord

__all__ = ["render_figures"]


def _engine_label(n_st: str) -> str:
    return "full split-step" if n_st == "ideal" else f"N_st = {n_st}"


def _by_engine(records: list[SweepRecord]) -> dict[str, list[SweepRecord]]:
    groups: dict[str, list[SweepRecord]] = {}
    for r in records:
        groups.setdefault(r.n_st, []).append(r)
    for rs in groups.values():
        rs.sort(key=lambda r: r.n_t)
    return groups


def render_figures(records: list[SweepRecord], out_dir: str | Path) -> list[Path]:
    """Write se_vs_nt.png and se_vs_cost.png next to the CSV output."""
    if not records:
        raise ValueError("no records to plot")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    groups = _by_engine(records)
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for key, rs in groups.items():
        ax.plot(
            [r.n_t for r in rs],
            [r.se for r in rs],
            marker="o",
            label=_engine_label(key),
        )
    ax.set_xscale("log", base=2)
    ax.set_xlabel("candidates per block $N_t$")
    ax.set_ylabel("spectral efficiency [bit/s/Hz]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    p = out / "se_vs_nt.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)

    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for key, rs in groups.items():
        ax.plot(
            [r.cost for r in rs],
            [r.se for r in rs],
            marker="s",
            label=_engine_label(key),
        )
    ax.set_xscale("log")
    ax.set_xlabel("selection cost [real mult. / 2D symbol]")
    ax.set_ylabel("spectral efficiency [bit/s/Hz]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    p = out / "se_vs_cost.png"
    fig.savefig(p, dpi=150)
    plt.close(fig)
    paths.append(p)
    return paths
