"""Experiment harness: flat-text configuration, deterministic sweep
execution and result emission.

Config files are ``key = value`` lines with ``#`` comments; unknown keys
are rejected with their line number.  Every random draw is rooted in
``master_seed`` through a fixed derivation path
(master_seed, domain, grid_index, sequence_index, ...), so results are
byte-identical across runs and worker counts.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import channel as ch
from . import dsp
from . import nli
from . import receiver as rx
from . import selection as sel
from . import shaping as sh

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "preset_names",
    "preset_text",
    "load_preset",
    "RunContext",
    "build_context",
    "ensure_coefficients",
    "grid_points",
    "evaluate_grid_point",
    "run_sweep",
    "SweepRecord",
    "PointResult",
    "emit_results",
    "load_records_csv",
    "spectral_efficiency",
    "CSV_HEADER",
]

WORKERS_ENV = "SEQSEL_WORKERS"

# RNG domain tags (first derivation element after the master seed).
_TAG_INFO = 1
_TAG_CANDIDATE = 2
_TAG_NEIGHBOR = 3
_TAG_ASE = 4
_TAG_TRAINING = 5


class ConfigError(ValueError):
    """Invalid run configuration (maps to CLI exit code 2)."""


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class RunConfig:
    # link
    spans: int = 10
    span_km: float = 100.0
    alpha_db_km: float = 0.2
    beta2_ps2_km: float = -21.7
    gamma_w_km: float = 1.3
    nf_db: float = 5.0
    center_wavelength_nm: float = 1550.0
    # wdm / pulse
    num_channels: int = 1
    symbol_rate: float = 46.5e9
    spacing: float = 50e9
    rolloff: float = 0.05
    channel_sps: float = 8.0
    pulse_span: int = 64
    # shaping
    shaping_block_len: int = 256
    shaping_max_energy: int = 1496
    shaping_bits_per_block: int = 333
    # sequence
    n: int = 256
    n_sxs: float = 1.125
    # sweep
    sweep_nt: tuple[int, ...] = (1, 4, 16)
    sweep_nst: tuple[int, ...] = (2, 4)
    ideal_ssfm: bool = False
    mode: str = "bs"
    eta: float | None = None
    launch_power_dbm: float = 1.0
    master_seed: int = 12345
    num_sequences_per_point: int = 8
    # metric engine
    essfm_nc: int = 8
    essfm_step_distribution: str = "log_spaced"
    ssfm_steps_per_span: int = 100
    num_training_sequences: int = 4
    coeff_cache: str = ""
    record_wall_time: bool = False

    @property
    def metric_fft_size(self) -> int:
        return int(round(self.n * self.n_sxs))

    @property
    def launch_power_w(self) -> float:
        return 1e-3 * 10.0 ** (self.launch_power_dbm / 10.0)


def _int_min(lo: int):
    def parse(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise ValueError(f"expected an integer, got '{text}'") from None
        if v < lo:
            raise ValueError(f"must be >= {lo}, got {v}")
        return v

    return parse


def _float_range(lo: float | None = None, hi: float | None = None, *, lo_open: bool = False):
    def parse(text: str) -> float:
        try:
            v = float(text)
        except ValueError:
            raise ValueError(f"expected a number, got '{text}'") from None
        if lo is not None and (v <= lo if lo_open else v < lo):
            raise ValueError(f"must be {'>' if lo_open else '>='} {lo}, got {v}")
        if hi is not None and v > hi:
            raise ValueError(f"must be <= {hi}, got {v}")
        return v

    return parse


def _parse_bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"expected true/false, got '{text}'")


def _parse_int_list(text: str) -> tuple[int, ...]:
    items = [p.strip() for p in text.split(",") if p.strip()]
    if not items:
        raise ValueError("expected a comma-separated list of integers")
    out = []
    for p in items:
        try:
            v = int(p)
        except ValueError:
            raise ValueError(f"expected integers, got '{p}'") from None
        if v < 1:
            raise ValueError(f"entries must be >= 1, got {v}")
        out.append(v)
    return tuple(out)


def _parse_mode(text: str) -> str:
    t = text.lower()
    if t not in ("bs", "bound"):
        raise ValueError(f"mode must be 'bs' or 'bound', got '{text}'")
    return t


def _parse_distribution(text: str) -> str:
    t = text.lower()
    if t not in ("uniform", "log_spaced"):
        raise ValueError(f"expected 'uniform' or 'log_spaced', got '{text}'")
    return t


def _parse_eta(text: str) -> float | None:
    if text.lower() in ("", "none"):
        return None
    v = _float_range(0.0, 1.0, lo_open=True)(text)
    return v


_REGISTRY = {
    "spans": _int_min(1),
    "span_km": _float_range(0.0, lo_open=True),
    "alpha_db_km": _float_range(0.0),
    "beta2_ps2_km": _float_range(),
    "gamma_w_km": _float_range(0.0),
    "nf_db": _float_range(0.0),
    "center_wavelength_nm": _float_range(0.0, lo_open=True),
    "num_channels": _int_min(1),
    "symbol_rate": _float_range(0.0, lo_open=True),
    "spacing": _float_range(0.0, lo_open=True),
    "rolloff": _float_range(0.0, 1.0),
    "channel_sps": _float_range(1.0, lo_open=True),
    "pulse_span": _int_min(2),
    "shaping_block_len": _int_min(1),
    "shaping_max_energy": _int_min(1),
    "shaping_bits_per_block": _int_min(1),
    "n": _int_min(1),
    "n_sxs": _float_range(1.0, lo_open=True),
    "sweep_nt": _parse_int_list,
    "sweep_nst": _parse_int_list,
    "ideal_ssfm": _parse_bool,
    "mode": _parse_mode,
    "eta": _parse_eta,
    "launch_power_dbm": _float_range(),
    "master_seed": _int_min(0),
    "num_sequences_per_point": _int_min(1),
    "essfm_nc": _int_min(1),
    "essfm_step_distribution": _parse_distribution,
    "ssfm_steps_per_span": _int_min(1),
    "num_training_sequences": _int_min(1),
    "coeff_cache": str,
    "record_wall_time": _parse_bool,
}


def _validate(cfg: RunConfig) -> None:
    def check(cond: bool, msg: str) -> None:
        if not cond:
            raise ConfigError(msg)

    check(
        abs(cfg.n * cfg.n_sxs - round(cfg.n * cfg.n_sxs)) < 1e-9,
        f"n * n_sxs must be an integer ({cfg.n} * {cfg.n_sxs} is not)",
    )
    check(
        abs(cfg.n * cfg.channel_sps - round(cfg.n * cfg.channel_sps)) < 1e-9,
        f"n * channel_sps must be an integer ({cfg.n} * {cfg.channel_sps} is not)",
    )
    check(
        (4 * cfg.n) % cfg.shaping_block_len == 0,
        f"shaping_block_len ({cfg.shaping_block_len}) must divide 4*n ({4 * cfg.n})",
    )
    check(cfg.num_channels % 2 == 1, "num_channels must be odd (central channel at offset 0)")
    check(cfg.pulse_span < cfg.n, "pulse_span must be smaller than n")
    if cfg.mode == "bs":
        for nt in cfg.sweep_nt:
            check(nt & (nt - 1) == 0, f"sweep_nt entries must be powers of two in bs mode, got {nt}")
        check(cfg.eta is None, "eta requires mode = bound")
    occupied = (1.0 + cfg.rolloff) * cfg.symbol_rate
    check(
        min(cfg.spacing, cfg.n_sxs * cfg.symbol_rate) >= occupied,
        "channel spacing / n_sxs rate cannot carry the occupied bandwidth",
    )
    edge = (cfg.num_channels - 1) / 2.0 * cfg.spacing + occupied / 2.0
    check(
        edge < cfg.channel_sps * cfg.symbol_rate / 2.0,
        "WDM band does not fit in the composite sample rate; raise channel_sps",
    )


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` text into a validated RunConfig."""
    values: dict[str, object] = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'key = value', got '{raw.strip()}'")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _REGISTRY:
            raise ConfigError(f"line {ln}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {ln}: duplicate key '{key}'")
        try:
            values[key] = _REGISTRY[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {ln}: {key}: {exc}") from None
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def config_dict(cfg: RunConfig) -> dict:
    """Config as a JSON-friendly mapping, one entry per config key."""
    out = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = list(v)
        if v is None:
            v = ""
        out[f.name] = v
    return out


def preset_names() -> list[str]:
    root = resources.files("seqsel").joinpath("presets")
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    root = resources.files("seqsel").joinpath("presets")
    path = root.joinpath(f"{name}.cfg")
    if not path.is_file():
        raise ConfigError(f"unknown preset '{name}' (available: {', '.join(preset_names())})")
    return path.read_text()


def load_preset(name: str) -> RunConfig:
    return parse_config(preset_text(name))


# ---------------------------------------------------------------------------
# Run context (derived objects shared across the sweep)


@dataclass(frozen=True)
class RunContext:
    cfg: RunConfig
    ess: sh.EssConfig
    norm: float
    link: ch.LinkConfig
    pulse: dsp.PulseShape
    oracle_policy: ch.SsfmPolicy
    constellation: np.ndarray
    prior: np.ndarray
    fingerprint: str

    @property
    def payload_bits(self) -> int:
        return sh.payload_bit_count(self.ess, self.cfg.n)


@lru_cache(maxsize=8)
def build_context(cfg: RunConfig) -> RunContext:
    ess = sh.EssConfig(
        block_len=cfg.shaping_block_len,
        max_energy=cfg.shaping_max_energy,
        bits_per_block=cfg.shaping_bits_per_block,
    )
    try:
        ess.table
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    norm = float(np.sqrt(cfg.launch_power_w / (4.0 * sh.mean_amplitude_energy(ess))))
    link = ch.LinkConfig(
        spans=cfg.spans,
        fiber=ch.FiberParams(
            alpha_db_km=cfg.alpha_db_km,
            beta2_ps2_km=cfg.beta2_ps2_km,
            gamma_w_km=cfg.gamma_w_km,
            length_km=cfg.span_km,
        ),
        edfa_noise_figure_db=cfg.nf_db,
        center_wavelength_nm=cfg.center_wavelength_nm,
    )
    pulse = dsp.rrc_taps(cfg.rolloff, cfg.pulse_span, cfg.channel_sps)
    marg = sh.amplitude_marginal(ess)
    levels = np.array(ess.alphabet.levels, dtype=float)
    rails = np.concatenate([-levels[::-1], levels]) * norm
    rail_p = np.concatenate([marg[::-1], marg]) / 2.0
    points = (rails[:, None] + 1j * rails[None, :]).ravel()
    prior = (rail_p[:, None] * rail_p[None, :]).ravel()
    return RunContext(
        cfg=cfg,
        ess=ess,
        norm=norm,
        link=link,
        pulse=pulse,
        oracle_policy=ch.SsfmPolicy(cfg.ssfm_steps_per_span, "uniform"),
        constellation=points,
        prior=prior,
        fingerprint=nli.link_fingerprint(
            link, cfg.symbol_rate, cfg.n, cfg.n_sxs, cfg.rolloff
        ),
    )


def _rng(cfg: RunConfig, *path: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([cfg.master_seed, *path]))


def _random_sequence(ctx: RunContext, rng: np.random.Generator) -> sh.SymbolSequence:
    bits = rng.integers(0, 2, ctx.payload_bits, dtype=np.uint8)
    return sh.bits_to_sequence(bits, ctx.ess, ctx.cfg.n, ctx.norm)


# ---------------------------------------------------------------------------
# Coefficient fitting orchestration


def training_waveforms(cfg: RunConfig) -> list[dsp.DualPolSignal]:
    ctx = build_context(cfg)
    waves = []
    for i in range(cfg.num_training_sequences):
        seq = _random_sequence(ctx, _rng(cfg, _TAG_TRAINING, i))
        waves.append(
            dsp.launch_waveform(
                seq.symbols_x, seq.symbols_y, cfg.n_sxs, ctx.pulse, cfg.symbol_rate
            )
        )
    return waves


def ensure_coefficients(
    cfg: RunConfig, cache_path: str | Path | None = None
) -> dict[int, tuple[float, ...]]:
    """Fitted phase-filter taps for every reduced step count in the
    sweep, fitting (and caching) whatever is missing."""
    ctx = build_context(cfg)
    path = Path(cache_path) if cache_path else (Path(cfg.coeff_cache) if cfg.coeff_cache else None)
    cache = nli.CoefficientCache.load(path) if path else nli.CoefficientCache()
    out: dict[int, tuple[float, ...]] = {}
    waves: list[dsp.DualPolSignal] | None = None
    dirty = False
    for n_st in sorted(set(cfg.sweep_nst)):
        hit = cache.get(ctx.fingerprint, n_st, cfg.essfm_nc, cfg.launch_power_dbm)
        if hit is not None:
            out[n_st] = tuple(float(c) for c in hit)
            continue
        if waves is None:
            waves = training_waveforms(cfg)
        fit = nli.fit_coefficients(
            waves,
            ctx.link,
            n_st,
            cfg.essfm_nc,
            ctx.oracle_policy,
            step_distribution=cfg.essfm_step_distribution,
        )
        out[n_st] = tuple(float(c) for c in fit.coeffs)
        cache.put(ctx.fingerprint, n_st, cfg.essfm_nc, cfg.launch_power_dbm, fit.coeffs, fit.mse)
        dirty = True
    if path and dirty:
        cache.save(path)
    return out


# ---------------------------------------------------------------------------
# Sweep execution


def grid_points(cfg: RunConfig) -> list[tuple[int, str]]:
    """Deterministic grid order: candidate counts outer, metric engines
    inner (reduced step counts in configured order, then 'ideal')."""
    keys = [str(v) for v in cfg.sweep_nst]
    if cfg.ideal_ssfm:
        keys.append("ideal")
    return [(nt, key) for nt in cfg.sweep_nt for key in keys]


def _pipeline_for(ctx: RunContext, metric_key: str, coeffs: dict[int, tuple[float, ...]]):
    cfg = ctx.cfg
    if metric_key == "ideal":
        engine = None
    else:
        n_st = int(metric_key)
        engine = nli.EssfmConfig(
            n_steps=n_st,
            coeffs=coeffs[n_st],
            step_distribution=cfg.essfm_step_distribution,
        )
    return nli.MetricPipeline(
        link=ctx.link,
        pulse=ctx.pulse,
        symbol_rate=cfg.symbol_rate,
        n_sxs=cfg.n_sxs,
        engine=engine,
        oracle_policy=ctx.oracle_policy,
    )


def transmit_composite(
    ctx: RunContext, central: sh.SymbolSequence, g: int, s: int
) -> dsp.DualPolSignal:
    """Assemble the WDM composite (neighbors are fresh random shaped
    sequences) at the channel oversampling rate."""
    cfg = ctx.cfg
    channels = []
    central_idx = (cfg.num_channels - 1) // 2
    for ch_i in range(cfg.num_channels):
        if ch_i == central_idx:
            seq = central
        else:
            seq = _random_sequence(ctx, _rng(cfg, _TAG_NEIGHBOR, g, s, ch_i))
        channels.append(
            dsp.launch_waveform(
                seq.symbols_x, seq.symbols_y, cfg.channel_sps, ctx.pulse, cfg.symbol_rate
            )
        )
    return dsp.wdm_multiplex(channels, cfg.spacing)


def receive_central_symbols(
    ctx: RunContext, received: dsp.DualPolSignal
) -> tuple[np.ndarray, np.ndarray]:
    """Demux, dispersion-compensate, matched-filter and sample the
    central channel back to symbol scale."""
    cfg = ctx.cfg
    out_rate = cfg.n_sxs * cfg.symbol_rate
    bw = min(cfg.spacing, out_rate)
    band = rx.demux_central(received, cfg.spacing, bw, out_rate)
    band = rx.cdc(band, ctx.link)
    sx, sy = rx.matched_filter_downsample(band, ctx.pulse, cfg.n_sxs, cfg.n)
    scale = np.sqrt(cfg.n_sxs)
    return sx / scale, sy / scale


def _evaluate_sequence(
    cfg: RunConfig, g: int, s: int, n_t: int, metric_key: str, coeffs: dict
) -> tuple[float, float]:
    """One trial: build candidates, score, select, transmit over the
    noisy link and estimate the rate.  Returns (chosen metric, AIR/4D).
    """
    ctx = build_context(cfg)
    pipeline = _pipeline_for(ctx, metric_key, coeffs)
    metric_fn = lambda c: pipeline.evaluate(c.symbols_x, c.symbols_y)
    if cfg.mode == "bs":
        n_pilots = sel.pilot_bit_count(n_t)
        info = _rng(cfg, _TAG_INFO, g, s).integers(
            0, 2, ctx.payload_bits - n_pilots, dtype=np.uint8
        )
        candidates = sel.bs_candidates(
            info, n_t, cfg.master_seed, ctx.ess, cfg.n, ctx.norm
        )
        outcome = sel.bs_select(candidates, metric_fn)
        chosen = candidates[outcome.chosen_index]
        chosen_metric = outcome.chosen_metric
    else:
        candidates = [
            _random_sequence(ctx, _rng(cfg, _TAG_CANDIDATE, g, s, i)) for i in range(n_t)
        ]
        metrics = np.array([metric_fn(c) for c in candidates])
        eta = cfg.eta if cfg.eta is not None else 1.0 / n_t
        accepted = sel.bound_select(metrics, eta).accepted_indices
        idx = int(accepted[0])
        chosen = candidates[idx]
        chosen_metric = float(metrics[idx])
    composite = transmit_composite(ctx, chosen, g, s)
    received = ch.propagate_link(
        composite, ctx.link, ctx.oracle_policy, rng=_rng(cfg, _TAG_ASE, g, s)
    )
    sx, sy = receive_central_symbols(ctx, received)
    yx, _ = rx.mean_phase_removal(chosen.symbols_x, sx)
    yy, _ = rx.mean_phase_removal(chosen.symbols_y, sy)
    report = rx.air_mismatched_gaussian(
        np.concatenate([chosen.symbols_x, chosen.symbols_y]),
        np.concatenate([yx, yy]),
        ctx.constellation,
        ctx.prior,
    )
    return chosen_metric, report.air_bits_per_4d


def _sequence_task(args) -> tuple[float, float]:
    return _evaluate_sequence(*args)


@dataclass(frozen=True)
class SweepRecord:
    n_t: int
    n_st: str
    mode: str
    se: float
    cost: float
    mean_metric: float
    pilot_loss: float
    bound_loss: float
    seed: int
    wall_time_s: float


@dataclass(frozen=True)
class PointResult:
    record: SweepRecord
    chosen_metrics: np.ndarray
    air_bits_per_4d: np.ndarray


def spectral_efficiency(
    air_bits_per_4d: float, ledger: sel.RateLedger, symbol_rate: float, spacing: float
) -> float:
    """Net rate with the gross entropy replaced by the (capped) AIR,
    scaled by symbol rate over channel spacing."""
    net = min(air_bits_per_4d, ledger.gross_bits_per_4d)
    net -= ledger.pilot_loss_per_4d + ledger.bound_loss_per_4d
    return max(net, 0.0) * symbol_rate / spacing


def evaluate_grid_point(
    cfg: RunConfig,
    g: int,
    n_t: int,
    metric_key: str,
    coeffs: dict[int, tuple[float, ...]],
    workers: int = 1,
) -> PointResult:
    t0 = time.perf_counter()
    tasks = [
        (cfg, g, s, n_t, metric_key, coeffs) for s in range(cfg.num_sequences_per_point)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sequence_task, tasks))
    else:
        results = [_sequence_task(t) for t in tasks]
    metrics = np.array([r[0] for r in results])
    airs = np.array([r[1] for r in results])
    ctx = build_context(cfg)
    eta = None
    if cfg.mode == "bound":
        eta = cfg.eta if cfg.eta is not None else 1.0 / n_t
    ledger = sel.rate_ledger(ctx.ess, cfg.n, n_t, eta)
    se = spectral_efficiency(float(np.mean(airs)), ledger, cfg.symbol_rate, cfg.spacing)
    if metric_key == "ideal":
        n_steps = cfg.spans * cfg.ssfm_steps_per_span
    else:
        n_steps = int(metric_key)
    cost = nli.cost_rm_per_2d(
        nli.CostModelInput(
            n_t=n_t, n_sxs=cfg.n_sxs, fft_size=cfg.metric_fft_size, n_steps=n_steps
        )
    )
    wall = time.perf_counter() - t0 if cfg.record_wall_time else 0.0
    record = SweepRecord(
        n_t=n_t,
        n_st=metric_key,
        mode=cfg.mode,
        se=se,
        cost=cost,
        mean_metric=float(np.mean(metrics)),
        pilot_loss=ledger.pilot_loss_per_4d,
        bound_loss=ledger.bound_loss_per_4d,
        seed=int(np.random.SeedSequence([cfg.master_seed, g]).generate_state(1)[0]),
        wall_time_s=wall,
    )
    return PointResult(record=record, chosen_metrics=metrics, air_bits_per_4d=airs)


def run_sweep(
    cfg: RunConfig,
    *,
    cache_path: str | Path | None = None,
    workers: int | None = None,
    only_points: list[int] | None = None,
) -> list[SweepRecord]:
    """Execute the configured sweep grid.

    ``workers`` defaults to the SEQSEL_WORKERS environment variable (1 if
    unset); results do not depend on it.  ``only_points`` restricts
    execution to a subset of grid indices without changing their seeds.
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ConfigError(f"{WORKERS_ENV} must be >= 1")
    coeffs = ensure_coefficients(cfg, cache_path) if cfg.sweep_nst else {}
    records = []
    for g, (n_t, key) in enumerate(grid_points(cfg)):
        if only_points is not None and g not in only_points:
            continue
        records.append(evaluate_grid_point(cfg, g, n_t, key, coeffs, workers).record)
    return records


# ---------------------------------------------------------------------------
# Emission

CSV_HEADER = "N_t,N_st,mode,se,cost,mean_metric,pilot_loss,bound_loss,seed,wall_time_s"


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def emit_results(
    records: list[SweepRecord], out_dir: str | Path, cfg: RunConfig
) -> tuple[Path, Path]:
    """Write records.csv (12 significant digits) and manifest.json (the
    config echoed key for key, plus version and timestamp)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "records.csv"
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            ",".join(
                [
                    str(r.n_t),
                    r.n_st,
                    r.mode,
                    _fmt(r.se),
                    _fmt(r.cost),
                    _fmt(r.mean_metric),
                    _fmt(r.pilot_loss),
                    _fmt(r.bound_loss),
                    str(r.seed),
                    _fmt(r.wall_time_s),
                ]
            )
        )
    csv_path.write_text("\n".join(lines) + "\n")
    manifest_path = out / "manifest.json"
    manifest = {
        "tool": "seqsel",
        "version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": config_dict(cfg),
        "num_records": len(records),
        "csv": csv_path.name,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return csv_path, manifest_path


def load_records_csv(path: str | Path) -> list[SweepRecord]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"unrecognized records file {path}")
    records = []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        records.append(
            SweepRecord(
                n_t=int(parts[0]),
                n_st=parts[1],
                mode=parts[2],
                se=float(parts[3]),
                cost=float(parts[4]),
                mean_metric=float(parts[5]),
                pilot_loss=float(parts[6]),
                bound_loss=float(parts[7]),
                seed=int(parts[8]),
                wall_time_s=float(parts[9]),
            )
        )
    return records
