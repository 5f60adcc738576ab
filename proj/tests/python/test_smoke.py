"""Smoke tests for the Python bindings: each bound surface is exercised once
against a value the C++ suite already pins down."""

import math

import numpy as np
import pytest

import sips


@pytest.fixture()
def toy_mixture():
    comp = sips.GaussianPairComponent(
        weight=1.0, mean_s=[0.0], mean_y=[0.0],
        var_ss=[1.0], var_yy=[2.0], cov_sy=[1.0],
    )
    return sips.GaussianPairMixture([comp], dim=1)


def test_schedule_values():
    sched = sips.NoiseSchedule(c=0.5, a=0.1)
    assert sched.gamma(0.0) == 0.0
    assert sched.gamma(1.0) == 0.0
    assert sched.gamma(0.5) == 0.5
    assert sched.gamma_dot(0.25) == pytest.approx(0.5 * math.pi)
    assert sched.training_sigma(0.0) == pytest.approx(0.1)
    with pytest.raises(Exception):
        sched.gamma(1.5)


def test_oracle_fields(toy_mixture):
    sched = sips.NoiseSchedule(c=0.5, a=0.1)
    x = np.array([1.5])
    e = sips.eta(toy_mixture, sched, 0.5, x)
    s = sips.score(toy_mixture, sched, 0.5, x)
    g = sched.gamma(0.5)
    assert abs(e[0] + g * s[0]) < 1e-10
    assert sips.mmse_predict(toy_mixture, np.array([1.0]))[0] == pytest.approx(0.5)


def test_sampler_reduction(toy_mixture):
    sched = sips.NoiseSchedule(c=0.5, a=0.1)
    cfg = sips.SamplerConfig(kappa=0.0, steps=15, seed=1)
    rng = sips.Rng(1)
    pred = sips.MmsePredictor(toy_mixture)
    out = sips.sips_sample(np.array([0.8]), pred, sips.ZeroDenoiser(), sched, cfg, rng)
    assert out[0] == pred.predict(np.array([0.8]))[0]


def test_forward_sde_and_distances(toy_mixture):
    sched = sips.NoiseSchedule(c=0.5, a=0.1)
    cfg = sips.SamplerConfig(kappa=0.4, steps=200, seed=3)
    n = 4000
    sde = np.empty(n)
    direct = np.empty(n)
    for k in range(n):
        stream = sips.Rng.stream(99, k)
        s, y = sips.sample_pair(toy_mixture, stream)
        sde[k] = sips.forward_sde_sample(toy_mixture, y, sched, cfg, stream, 1.0)[0]
        s2, y2 = sips.sample_pair(toy_mixture, stream)
        direct[k] = s2[0]
    w1 = sips.wasserstein_1d(sde, direct)
    assert w1 < 0.08  # generous at n=4000
    assert sips.energy_distance(sde, direct) < 0.02


def test_marginal_check(toy_mixture):
    sched = sips.NoiseSchedule(c=0.5, a=0.1)
    rng = sips.Rng(7)
    report = sips.marginal_check(toy_mixture, sched, 0.0, 1.0, 4000, 200, 0.08, rng)
    assert report.passed
    assert report.wasserstein1 < 0.08


def test_signal_chain():
    t = np.arange(4096) / 16000.0
    x = 0.3 * np.sin(2 * np.pi * 440.0 * t)
    spec = sips.stft(x)
    assert spec.shape[0] == 257
    rec = sips.istft(spec, len(x))
    assert np.max(np.abs(rec - x)) < 1e-10

    assert sips.compress(4.0 + 0.0j) == 0.3 + 0.0j
    assert sips.decompress(sips.compress(1.7 + 0.4j)) == pytest.approx(1.7 + 0.4j)

    noisy = x + 0.01 * np.random.default_rng(0).standard_normal(len(x))
    assert sips.si_sdr(x, x) == 300.0
    assert sips.si_sdr(x, noisy) > 20.0


def test_wav_roundtrip(tmp_path):
    path = str(tmp_path / "tone.wav")
    x = 0.5 * np.sin(2 * np.pi * np.arange(2000) * 440.0 / 16000.0)
    sips.write_wav(path, x, 16000)
    samples, rate = sips.read_wav(path)
    assert rate == 16000
    assert np.max(np.abs(samples - x)) <= 1.0 / 32768.0


def test_trained_denoiser_roundtrip(tmp_path, toy_mixture):
    out_dir = tmp_path / "train"
    cfg = {
        "prior": {
            "dim": 1,
            "components": [{
                "weight": 1.0, "mean_s": 0.0, "mean_y": 0.0,
                "var_ss": 1.0, "var_yy": 2.0, "cov_sy": 1.0,
            }],
        },
        "train": {"iterations": 30, "batch_size": 32, "seed": 5},
        "output_dir": str(out_dir),
    }
    import json
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    assert sips.cli_run(["train", "--config", str(cfg_path)]) == 0
    den = sips.TrainedDenoiser.load(str(out_dir / "model.json"))
    out = den.eval(0.5, np.array([0.3]))
    assert np.isfinite(out).all()


def test_cli_run_exit_codes(tmp_path):
    assert sips.cli_run(["sample", "--config", str(tmp_path / "missing.json")]) == 2
