import csv
import json
import math

import numpy as np
import pytest

from splitnvd.channel import ChannelSpec
from splitnvd.codes import CodeSpec, Scheme, golden_pair
from splitnvd.sim import (
    CSV_HEADER, CurvePoint, Mode, SimConfig, fit_slope, run, run_outage, run_wer,
    wilson_interval, write_csv, write_json,
)


def _wer_config(**kw):
    base = dict(channel=ChannelSpec(2, 2, 2), snr_db=(0.0, 10.0), trials=600, seed=5,
                code=CodeSpec.golden(Scheme.SPLIT, 1))
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        _wer_config(trials=0)
    with pytest.raises(ValueError):
        _wer_config(snr_db=(10.0, 5.0))
    with pytest.raises(ValueError):
        _wer_config(code=None)
    with pytest.raises(ValueError):
        _wer_config(mode="nope")
    with pytest.raises(ValueError):
        SimConfig(ChannelSpec(2, 1, 1), (0.0,), 10, code=CodeSpec.golden(Scheme.SPLIT, 1))


def test_wilson_interval_properties():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi and hi - 0.5 == pytest.approx(0.5 - lo)
    p = CurvePoint.from_counts(10.0, 1000, 3)
    assert p.ci_low <= p.estimate <= p.ci_high and p.flag == "low_errors"
    assert CurvePoint.from_counts(10.0, 1000, 30).flag == ""


def test_fit_slope_synthetic():
    snr_db = np.arange(0, 31, 5.0)
    pts = [CurvePoint(s, 10**9, 10**6, 10 ** (-2 * s / 10), 0, 1) for s in snr_db]
    fit = fit_slope(pts)
    assert fit.slope == pytest.approx(2.0, abs=1e-6) and fit.reliable
    flat = [CurvePoint(s, 1000, 100, 0.1, 0, 1) for s in snr_db]
    assert fit_slope(flat).slope == pytest.approx(0.0, abs=1e-9)


def test_fit_slope_unreliable_and_errors():
    pts = [CurvePoint(s, 1000, e, e / 1000, 0, 1) for s, e in [(0, 100), (10, 20), (20, 3)]]
    fit = fit_slope(pts)
    assert not fit.reliable
    with pytest.raises(ValueError):
        fit_slope([CurvePoint(0, 10, 0, 0.0, 0, 1), CurvePoint(10, 10, 1, 0.1, 0, 1)])


def test_wer_limits():
    spec = CodeSpec.golden(Scheme.SPLIT, 1)
    hi = run_wer(SimConfig(ChannelSpec(2, 2, 2), (60.0,), 2000, seed=1, code=spec))
    assert hi[0].errors == 0
    lo = run_wer(SimConfig(ChannelSpec(2, 2, 2), (-40.0,), 300, seed=1, code=spec))
    p = 1 - 1 / spec.codebook_size
    assert lo[0].ci_low <= p <= lo[0].ci_high


def test_wer_determinism_across_workers():
    cfg = _wer_config(min_errors=40, chunk_trials=100)
    a = run(cfg, workers=1)
    b = run(cfg, workers=3)
    assert a == b
    # stopping rule fires in chunk order
    assert a[0].trials < 600 and a[0].errors >= 40


def test_outage_zero_rate_and_determinism():
    ch = ChannelSpec(2, 1, 1)
    cfg = SimConfig(ch, (0.0, 10.0), 50_000, seed=3, mode=Mode.OUTAGE_FIXED, rate=0.0, outage_block=8192)
    assert all(p.errors == 0 for p in run_outage(cfg))
    cfg = SimConfig(ch, (0.0, 10.0), 50_000, seed=3, mode=Mode.OUTAGE_FIXED, rate=1.0, outage_block=8192)
    assert run(cfg, 1) == run(cfg, 2)


def test_outage_rayleigh_closed_form():
    # N = 1, 1x1: P(log2(1 + snr|h|^2) < R) = 1 - exp(-(2^R - 1)/snr)
    ch = ChannelSpec(1, 1, 1)
    cfg = SimConfig(ch, (5.0, 15.0), 200_000, seed=0, mode=Mode.OUTAGE_FIXED, rate=1.0)
    for p in run_outage(cfg):
        snr = 10 ** (p.snr_db / 10)
        exact = 1 - math.exp(-1 / snr)
        assert p.ci_low <= exact <= p.ci_high


def test_outage_scaling_mode():
    ch = ChannelSpec(1, 1, 1)
    cfg = SimConfig(ch, (10.0,), 100_000, seed=0, mode=Mode.OUTAGE_SCALING, rate=0.5)
    p = run_outage(cfg)[0]
    exact = 1 - math.exp(-(10 ** 0.5 - 1) / 10)
    assert p.ci_low <= exact <= p.ci_high


def test_mode_mismatch():
    with pytest.raises(ValueError):
        run_outage(_wer_config())
    with pytest.raises(ValueError):
        run_wer(SimConfig(ChannelSpec(1, 1, 1), (0.0,), 10, mode=Mode.OUTAGE_FIXED))


def test_outputs(tmp_path):
    cfg = _wer_config(trials=50)
    pts = run(cfg)
    write_csv(pts, tmp_path / "a.csv")
    with open(tmp_path / "a.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_HEADER and len(rows) == 3
    doc = write_json(pts, cfg, tmp_path / "a.json")
    on_disk = json.loads((tmp_path / "a.json").read_text())
    assert on_disk == json.loads(json.dumps(doc))
    assert on_disk["seed"] == 5 and on_disk["config"]["code"]["scheme"] == "split"


def test_wer_bounded_below_by_outage():
    # P_e >= P_out at high SNR, checked as WER >= outage - 3 CI half-widths
    grid = (20.0, 25.0)
    for spec in golden_pair(4):
        wer = run_wer(SimConfig(ChannelSpec(2, 2, 2), grid, 2000, seed=2, code=spec))
        out = run_outage(SimConfig(ChannelSpec(2, 2, 2), grid, 200_000, seed=2,
                                   mode=Mode.OUTAGE_FIXED, rate=spec.bpcu))
        for w, o in zip(wer, out):
            assert w.estimate >= o.estimate - 3 * (o.ci_high - o.ci_low) / 2
