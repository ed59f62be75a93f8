"""Acceptance gate: one check per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script::

    python3 tests/test_acceptance.py
"""

import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from splitnvd import analysis
from splitnvd.algebra import GaussianInt, RingElement, RingMatrix, det_exact
from splitnvd.channel import ChannelSpec
from splitnvd.cli import fig_reproduce, main
from splitnvd.codes import CodeSpec, Scheme, build_xi
from splitnvd.sim import Mode, SimConfig, fit_slope, run

WER_GRID = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
WER_TRIALS = 10_000
OUTAGE_TRIALS = 10_000_000
OUTAGE_GRID = (10.0, 15.0, 20.0, 25.0)
OUTAGE_RATE = 1.0


def _report(number: int, ok: bool, detail: str) -> None:
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)


def check_1():
    t0 = time.perf_counter()
    qpsk = analysis.min_det_exact(CodeSpec.golden(Scheme.BLOCK_DIAG, 2))
    bpsk = analysis.min_det_exact(CodeSpec.golden(Scheme.BLOCK_DIAG, 1))
    elapsed = time.perf_counter() - t0
    ok = qpsk.min_exact_detsq > 0 and qpsk.min_exact_detsq == bpsk.min_exact_detsq and elapsed < 60
    return ok, (f"QPSK min |det|^2 = {qpsk.min_exact_detsq}, BPSK-restricted = {bpsk.min_exact_detsq}, "
                f"{qpsk.differences_examined} difference classes, {elapsed:.1f}s")


def check_2():
    xi, emb = build_xi([1] + [0] * 7)
    d = det_exact(xi)
    full = det_exact(RingMatrix.block_diag(xi, xi.tau()), require_gaussian=True)
    # embedding carries 1/sqrt(5) per entry: undo it for the unnormalized determinant
    num_xi = np.linalg.det(emb * math.sqrt(5))
    num_full = np.linalg.det(RingMatrix.block_diag(xi, xi.tau()).embed())
    ok = (d == RingElement(GaussianInt(2, 1)) and full == RingElement(GaussianInt(3, 4))
          and abs(num_xi - (2 + 1j)) < 1e-9 and abs(num_full - (3 + 4j)) < 1e-9)
    return ok, f"det(Xi) = {complex(d)}, det(diag(Xi, tau Xi)) = {complex(full)}, numeric {num_xi:.12g} / {num_full:.12g}"


def check_3():
    rows = {row["r"]: row for row in analysis.dmt_table(2, 2, 2)}
    exact = all(row["d_split"] == (4 - r) * (2 - r) and row["d_parallel"] == 2 * (2 - r) * (2 - r)
                for r, row in rows.items())
    ok = (exact and rows[0]["d_split"] == 8 == rows[0]["d_parallel"]
          and rows[1]["d_split"] == 3 and rows[1]["d_parallel"] == 2
          and rows[2]["d_split"] == 0 == rows[2]["d_parallel"] and len(rows) == 9)
    return ok, "d(0)=8/8, d(1)=3/2, d(2)=0/0 over 9 rows, exact match"


def check_4(workers=None):
    t0 = time.perf_counter()
    res = fig_reproduce(WER_TRIALS, WER_GRID, seed=1, workers=workers or os.cpu_count() or 1)
    split = res["curves"]["split"][1]
    par = res["curves"]["block_diag"][1]
    curve = ", ".join(f"{s.snr_db:g}dB {s.errors}/{p.errors}" for s, p in zip(split, par))
    return res["passed"], (f"split/parallel errors per {WER_TRIALS} trials: {curve}; "
                           f"{time.perf_counter() - t0:.0f}s")


def check_5():
    res = analysis.lemma1_check(samples=10_000, snr_db=10.0, seed=0, spectrum_draws=1000, alpha=0.01)
    return res["passed"], (f"KS p = {res['ks_pvalue']:.3f} (D = {res['ks_statistic']:.4f}), "
                           f"spectrum max rel error {res['spectrum_max_rel_error']:.1e} over 1000 draws")


def check_6():
    a = analysis.ostrowski_suite(1000, seed=0)
    b = analysis.effective_codeword_suite(1000, seed=0)
    ok = a["violations"] == a["rank_failures"] == b["violations"] == b["rank_failures"] == 0
    return ok, (f"ostrowski {a['violations']} violations/{a['rank_failures']} rank failures, "
                f"effective codeword {b['violations']}/{b['rank_failures']} (1000 instances each)")


def _outage_slope(N, workers):
    cfg = SimConfig(ChannelSpec(N, 1, 1), OUTAGE_GRID, OUTAGE_TRIALS, seed=1,
                    mode=Mode.OUTAGE_FIXED, rate=OUTAGE_RATE)
    return fit_slope(run(cfg, workers))


def check_7(workers=None):
    t0 = time.perf_counter()
    workers = workers or os.cpu_count() or 1
    two = _outage_slope(2, workers)
    one = _outage_slope(1, workers)
    elapsed = time.perf_counter() - t0
    ok = 1.7 <= two.slope <= 2.3 and 0.8 <= one.slope <= 1.2 and two.reliable and one.reliable and elapsed < 600
    return ok, (f"N=2 slope {two.slope:.3f} (fit over {two.snr_db_used} dB), "
                f"N=1 slope {one.slope:.3f}, {elapsed:.0f}s")


def check_8():
    res = analysis.theorem1_schedule(Scheme.SPLIT, (2, 4), r=1.0, slack=0.25)
    ratios = ", ".join(f"|A|={p['constellation_size']}: {p['log_ratio']:.3f}" for p in res["points"])
    return res["passed"], (f"exponent {res['exponent']:.3f} >= {res['required_min_exponent']:.2f}, "
                           f"constant offset {res['offset']:.3f} (per-point log ratios {ratios})")


def check_9():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        runs = [
            ["wer", "--scheme", "block_diag", "--bits", "2", "--snr-db", "5,10,15", "--trials", "1500",
             "--min-errors", "100", "--seed", "21"],
            ["outage", "--N", "2", "--nt", "2", "--nr", "2", "--rate", "2", "--snr-db", "0,5,10",
             "--trials", "300000", "--seed", "21"],
        ]
        same = []
        for k, args in enumerate(runs):
            a, b, c = tmp / f"{k}a", tmp / f"{k}b", tmp / f"{k}c"
            codes = [main(args + ["--workers", "1", "--out", str(a)]),
                     main([args[0], "--config", f"{a}.json", "--workers", "2", "--out", str(b)]),
                     main([args[0], "--config", f"{b}.json", "--workers", "3", "--out", str(c)])]
            csvs = {p.with_suffix(".csv").read_bytes() for p in (a, b, c)}
            docs = {p.with_suffix(".json").read_bytes() for p in (a, b, c)}
            same.append(codes == [0, 0, 0] and len(csvs) == 1 and len(docs) == 1)
            json.loads(next(iter(docs)))
    return all(same), "wer and outage runs replayed from provenance with 1, 2 and 3 workers: byte-identical CSV and JSON"


CHECKS = {1: check_1, 2: check_2, 3: check_3, 4: check_4, 5: check_5,
          6: check_6, 7: check_7, 8: check_8, 9: check_9}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number, capsys):
    ok, detail = CHECKS[number]()
    with capsys.disabled():
        print()
        _report(number, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for number, fn in sorted(CHECKS.items()):
        ok, detail = fn()
        _report(number, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
