import dataclasses
import math

import numpy as np
import pytest

from seqsel import channel as ch
from seqsel import dsp
from seqsel import nli

FIBER = ch.FiberParams(alpha_db_km=0.2, beta2_ps2_km=-21.7, gamma_w_km=1.3, length_km=100.0)
LINK = ch.LinkConfig(spans=3, fiber=FIBER, edfa_noise_figure_db=5.0)
RS = 46.5e9


def shaped_signal(rng, n=128, sps=1.125, power_w=2e-3):
    pulse = dsp.rrc_taps(0.05, 32, 8.0)
    sx = np.sqrt(power_w / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    sy = np.sqrt(power_w / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    return dsp.launch_waveform(sx, sy, sps, pulse, RS)


# --- step grids ---


def test_step_grid_covers_link():
    for dist in ("uniform", "log_spaced"):
        dz, lam = nli.essfm_step_grid(LINK, 7, dist)
        assert len(dz) == len(lam) == 7
        assert dz.sum() == pytest.approx(LINK.total_length_km, abs=1e-6)
        assert lam.sum() == pytest.approx(
            LINK.spans * FIBER.effective_length_km, abs=1e-6
        )
        assert np.all(dz > 0) and np.all(lam > 0)


def test_log_spaced_grid_equalizes_effective_length():
    _, lam = nli.essfm_step_grid(LINK, 9, "log_spaced")
    np.testing.assert_allclose(lam, lam[0], rtol=1e-9)


def test_uniform_grid_respects_span_profile():
    # one step per span: each step's effective length is one span's
    dz, lam = nli.essfm_step_grid(LINK, 3, "uniform")
    np.testing.assert_allclose(dz, 100.0)
    np.testing.assert_allclose(lam, FIBER.effective_length_km, rtol=1e-9)


def test_step_grid_lossless_limit():
    fiber = dataclasses.replace(FIBER, alpha_db_km=0.0)
    link = dataclasses.replace(LINK, fiber=fiber)
    dz, lam = nli.essfm_step_grid(link, 5, "log_spaced")
    np.testing.assert_allclose(dz, lam)  # no loss: effective == physical


# --- reduced propagation ---


def test_essfm_single_tap_matches_ssfm():
    """c = [1] on the SSFM grid is algebraically the same scheme."""
    rng = np.random.default_rng(1)
    sig = shaped_signal(rng)
    steps_per_span = 16
    ref = ch.propagate_link(
        sig, LINK, ch.SsfmPolicy(steps_per_span, "uniform"), noiseless=True
    )
    eng = nli.EssfmConfig(
        n_steps=LINK.spans * steps_per_span, coeffs=(1.0,), step_distribution="uniform"
    )
    out = nli.essfm_propagate(sig, LINK, eng)
    err = np.sqrt(
        np.sum(np.abs(out.stacked() - ref.stacked()) ** 2)
        / np.sum(np.abs(ref.stacked()) ** 2)
    )
    assert err < 1e-12


def test_essfm_filter_paths_agree():
    """The pointwise single-tap shortcut equals the FFT filter with a
    one-tap kernel."""
    rng = np.random.default_rng(2)
    sig = shaped_signal(rng)
    a = nli.essfm_propagate(
        sig, LINK, nli.EssfmConfig(n_steps=6, coeffs=(0.8,))
    )
    b = nli.essfm_propagate(
        sig, LINK, nli.EssfmConfig(n_steps=6, coeffs=(0.8, 0.0, 0.0))
    )
    np.testing.assert_allclose(a.stacked(), b.stacked(), atol=1e-12)


def test_essfm_rejects_subbands_and_long_filters():
    rng = np.random.default_rng(3)
    sig = shaped_signal(rng, n=32)
    with pytest.raises(ValueError, match="N_sb"):
        nli.essfm_propagate(
            sig, LINK, nli.EssfmConfig(n_steps=2, coeffs=(1.0,), n_subbands=2)
        )
    with pytest.raises(ValueError, match="filter"):
        nli.essfm_propagate(
            sig, LINK, nli.EssfmConfig(n_steps=2, coeffs=tuple([0.1] * 100))
        )


def test_fit_improves_or_keeps_training_mse():
    rng = np.random.default_rng(4)
    training = [shaped_signal(rng, n=64) for _ in range(2)]
    fit = nli.fit_coefficients(
        training, LINK, n_steps=3, nc=2, oracle_policy=ch.SsfmPolicy(25, "uniform")
    )
    assert fit.mse <= fit.initial_mse
    assert np.isfinite(fit.coeffs).all()
    assert fit.n_evaluations > 0


def test_fit_starts_from_given_coefficients():
    rng = np.random.default_rng(5)
    training = [shaped_signal(rng, n=64)]
    policy = ch.SsfmPolicy(25, "uniform")
    fit = nli.fit_coefficients(
        training, LINK, n_steps=3, nc=2, oracle_policy=policy,
        initial=np.array([0.9, 0.05]), max_iter=40,
    )
    assert fit.mse <= fit.initial_mse


# --- metric ---


def test_nli_metric_zero_for_identical_spectra():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((2, 32)) + 1j * rng.standard_normal((2, 32))
    assert nli.nli_metric(x, x) == 0.0
    assert nli.nli_metric(x, 1.001 * x) > 0.0


def test_metric_pipeline_ignores_linear_effects():
    """With gamma = 0 the pipeline's CDC and mean-phase folding must
    cancel the whole (noiseless) channel."""
    fiber = dataclasses.replace(FIBER, gamma_w_km=0.0)
    link = dataclasses.replace(LINK, fiber=fiber)
    pipe = nli.MetricPipeline(
        link=link,
        pulse=dsp.rrc_taps(0.05, 32, 8.0),
        symbol_rate=RS,
        n_sxs=1.125,
        engine=None,
        oracle_policy=ch.SsfmPolicy(20, "uniform"),
    )
    rng = np.random.default_rng(7)
    s = 0.03 * (rng.standard_normal((2, 128)) + 1j * rng.standard_normal((2, 128)))
    metric = pipe.evaluate(s[0], s[1])
    assert metric < 1e-12 * np.mean(np.abs(s) ** 2)


def test_metric_pipeline_engine_close_to_oracle():
    pulse = dsp.rrc_taps(0.05, 32, 8.0)
    policy = ch.SsfmPolicy(50, "uniform")
    common = dict(link=LINK, pulse=pulse, symbol_rate=RS, n_sxs=1.125, oracle_policy=policy)
    oracle = nli.MetricPipeline(engine=None, **common)
    fine = nli.MetricPipeline(
        engine=nli.EssfmConfig(n_steps=150, coeffs=(1.0,), step_distribution="uniform"),
        **common,
    )
    rng = np.random.default_rng(8)
    s = np.sqrt(1e-3) * (rng.standard_normal((2, 128)) + 1j * rng.standard_normal((2, 128))) / np.sqrt(2)
    m_oracle = oracle.evaluate(s[0], s[1])
    m_fine = fine.evaluate(s[0], s[1])
    assert m_fine == pytest.approx(m_oracle, rel=1e-6)


def test_metric_cubic_in_power():
    pulse = dsp.rrc_taps(0.05, 32, 8.0)
    pipe = nli.MetricPipeline(
        link=LINK, pulse=pulse, symbol_rate=RS, n_sxs=1.125,
        engine=None, oracle_policy=ch.SsfmPolicy(30, "uniform"),
    )
    rng = np.random.default_rng(9)
    base = (rng.standard_normal((2, 128)) + 1j * rng.standard_normal((2, 128))) / np.sqrt(2)
    m1 = pipe.evaluate(*(np.sqrt(0.5e-3) * base))
    m2 = pipe.evaluate(*(np.sqrt(1.0e-3) * base))
    # doubling the power raises the metric by ~9 dB (8x)
    assert m2 / m1 == pytest.approx(8.0, rel=0.05)


# --- cost model ---


def cost_reference(n_t, n_sxs, n, n_st, n_sb):
    """Independent re-derivation of the per-2D-symbol multiplication
    count."""
    per_seq = (
        5.0 * n_st * math.log2(n / n_sb)
        + 2.0 * math.log2(n)
        + n_st * (3.0 * n_sb + 1.0) / 2.0
        + (20.0 * n_sb * n_st + 8.0) / n
        + 4.0
    )
    return n_t * n_sxs / 2.0 * per_seq


def test_cost_model_golden_values():
    c = nli.cost_rm_per_2d(nli.CostModelInput(1, 1.0, 512, 1, 1))
    assert abs(c - 34.52734375) < 1e-9
    c = nli.cost_rm_per_2d(nli.CostModelInput(64, 1.125, 576, 2, 1))
    assert c == pytest.approx(4252.41, abs=0.01)


@pytest.mark.parametrize(
    "args", [(1, 1.0, 512, 1, 1), (64, 1.125, 576, 2, 1), (16, 2.0, 1024, 8, 4)]
)
def test_cost_model_matches_reference(args):
    got = nli.cost_rm_per_2d(nli.CostModelInput(*args))
    assert got == pytest.approx(cost_reference(*args), rel=1e-12)


def test_cost_model_rejects_bad_input():
    with pytest.raises(ValueError):
        nli.CostModelInput(0, 1.0, 512, 1, 1)
    with pytest.raises(ValueError):
        nli.CostModelInput(1, 1.0, 512, 0, 1)


# --- coefficient cache ---


def test_coefficient_cache_round_trip(tmp_path):
    path = tmp_path / "cache.jsonl"
    cache = nli.CoefficientCache()
    cache.put("fp1", 4, 2, 1.0, np.array([0.9, 0.1]), 1e-4)
    cache.put("fp1", 8, 2, 1.0, np.array([0.95, 0.05]), 5e-5)
    cache.save(path)
    loaded = nli.CoefficientCache.load(path)
    np.testing.assert_allclose(loaded.get("fp1", 4, 2, 1.0), [0.9, 0.1])
    np.testing.assert_allclose(loaded.get("fp1", 8, 2, 1.0), [0.95, 0.05])
    assert loaded.get("fp1", 4, 2, 2.0) is None
    assert loaded.get("other", 4, 2, 1.0) is None


def test_coefficient_cache_rejects_foreign_files(tmp_path):
    path = tmp_path / "junk.jsonl"
    path.write_text('{"something": "else"}\n')
    with pytest.raises(ValueError):
        nli.CoefficientCache.load(path)


def test_link_fingerprint_sensitivity():
    fp = nli.link_fingerprint(LINK, RS, 256, 1.125, 0.05)
    assert fp == nli.link_fingerprint(LINK, RS, 256, 1.125, 0.05)
    other = dataclasses.replace(LINK, spans=4)
    assert fp != nli.link_fingerprint(other, RS, 256, 1.125, 0.05)
    assert fp != nli.link_fingerprint(LINK, RS, 256, 1.125, 0.1)
