"""Monte Carlo word-error-rate and outage curves with counter-based seeding.

Every random draw comes from a stream keyed by ``(seed, point_index, counter)``:
the counter is the trial number for word-error runs and the block number for
outage runs.  Work is cut into fixed chunks and error counts are integers, so
the output does not depend on how many worker processes were used.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .channel import ChannelSpec, apply_channel, mutual_information, sample_channel, sample_channels
from .codes import CodeSpec, check_desk_scale
from .decoder import codebook_for, ml_decode

__all__ = [
    "Mode",
    "SimConfig",
    "CurvePoint",
    "SlopeFit",
    "wilson_interval",
    "run_wer",
    "run_outage",
    "run",
    "fit_slope",
    "db_to_linear",
    "write_csv",
    "write_json",
    "CSV_HEADER",
]

CSV_HEADER = ("snr_db", "trials", "errors", "estimate", "ci_low", "ci_high", "flag")
Z95 = 1.959963984540054
LOW_ERROR_FLAG = "low_errors"
# stream-key tag separating outage blocks from word-error trials
_OUTAGE_TAG = 0x0D7A


class Mode:
    WER = "wer"
    OUTAGE_FIXED = "outage_fixed"
    OUTAGE_SCALING = "outage_scaling"
    ALL = (WER, OUTAGE_FIXED, OUTAGE_SCALING)


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True)
class SimConfig:
    """One curve: a channel, an optional code, an SNR grid and a trial budget.

    ``rate`` is the fixed per-sub-channel rate R in bits (``outage_fixed``) or
    the multiplexing gain r (``outage_scaling``).  ``mi_denominator`` selects the
    per-antenna power split inside the mutual information: ``"nt"`` or
    ``"N*nt"``.
    """

    channel: ChannelSpec
    snr_db: tuple[float, ...]
    trials: int
    seed: int = 0
    mode: str = Mode.WER
    code: CodeSpec | None = None
    min_errors: int | None = None
    rate: float = 0.0
    mi_denominator: str = "nt"
    chunk_trials: int = 500
    outage_block: int = 65536

    def __post_init__(self):
        object.__setattr__(self, "snr_db", tuple(float(s) for s in self.snr_db))
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(b <= a for a, b in zip(self.snr_db, self.snr_db[1:])):
            raise ValueError("snr grid must be strictly increasing")
        if not self.snr_db:
            raise ValueError("snr grid is empty")
        if self.mode not in Mode.ALL:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == Mode.WER:
            if self.code is None:
                raise ValueError("word-error runs need a code")
            if (self.code.N, self.code.n_t) != (self.channel.N, self.channel.n_t):
                raise ValueError("code and channel disagree on N or n_t")
        if self.mi_denominator not in ("nt", "N*nt"):
            raise ValueError("mi_denominator must be 'nt' or 'N*nt'")
        if self.min_errors is not None and self.min_errors < 1:
            raise ValueError("min_errors must be positive")

    def describe(self) -> dict:
        return {
            "mode": self.mode,
            "seed": self.seed,
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "min_errors": self.min_errors,
            "rate": self.rate,
            "mi_denominator": self.mi_denominator,
            "chunk_trials": self.chunk_trials,
            "outage_block": self.outage_block,
            "channel": self.channel.describe(),
            "code": None if self.code is None else self.code.describe(),
        }


@dataclass(frozen=True)
class CurvePoint:
    snr_db: float
    trials: int
    errors: int
    estimate: float
    ci_low: float
    ci_high: float
    flag: str = ""

    @classmethod
    def from_counts(cls, snr_db: float, trials: int, errors: int) -> "CurvePoint":
        lo, hi = wilson_interval(errors, trials)
        est = errors / trials
        flag = LOW_ERROR_FLAG if errors < 10 else ""
        return cls(float(snr_db), int(trials), int(errors), est, min(lo, est), max(hi, est), flag)


def wilson_interval(errors: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = errors / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # the bounds are exactly 0 / 1 at the extremes; avoid rounding residue there
    lo = 0.0 if errors == 0 else max(0.0, centre - half)
    hi = 1.0 if errors == trials else min(1.0, centre + half)
    return lo, hi


# ---------------------------------------------------------------------------
# chunk workers (module level so they pickle)
# ---------------------------------------------------------------------------

def _wer_chunk(config: SimConfig, point: int, start: int, stop: int) -> int:
    snr = db_to_linear(config.snr_db[point])
    book = codebook_for(config.code)
    errors = 0
    for t in range(start, stop):
        rng = np.random.default_rng([config.seed, point, t])
        k = int(rng.integers(book.size))
        h = sample_channel(config.channel, rng)
        y = apply_channel(h, book.words(k), snr, rng)
        if ml_decode(y, h, book, snr).best_index != k:
            errors += 1
    return errors


def _outage_threshold(config: SimConfig, snr: float) -> float:
    N = config.channel.N
    if config.mode == Mode.OUTAGE_FIXED:
        return N * config.rate
    return N * config.rate * math.log2(snr)


def _outage_chunk(config: SimConfig, point: int, start: int, stop: int) -> int:
    snr = db_to_linear(config.snr_db[point])
    denom = config.channel.n_t * (config.channel.N if config.mi_denominator == "N*nt" else 1)
    threshold = _outage_threshold(config, snr)
    rng = np.random.default_rng([config.seed, point, start // config.outage_block, _OUTAGE_TAG])
    blocks, _ = sample_channels(config.channel, rng, stop - start)
    mi = mutual_information(blocks, snr, denom)
    return int(np.count_nonzero(mi < threshold))


def _chunks(total: int, size: int) -> list[tuple[int, int]]:
    return [(s, min(s + size, total)) for s in range(0, total, size)]


def _run_point(fn, config: SimConfig, point: int, chunk: int, pool) -> tuple[int, int]:
    """Accumulate chunk results in order, honouring the min-errors stopping rule."""
    chunks = _chunks(config.trials, chunk)
    wave = max(1, getattr(pool, "_max_workers", 1)) if pool is not None else 1
    trials = errors = 0
    for w in range(0, len(chunks), wave):
        batch = chunks[w:w + wave]
        if pool is None:
            results = [fn(config, point, a, b) for a, b in batch]
        else:
            futures = [pool.submit(fn, config, point, a, b) for a, b in batch]
            results = [f.result() for f in futures]
        for (a, b), e in zip(batch, results):
            trials += b - a
            errors += e
            if config.min_errors is not None and errors >= config.min_errors:
                return trials, errors
    return trials, errors


def _run(fn, config: SimConfig, chunk: int, workers: int | None) -> list[CurvePoint]:
    workers = resolve_workers(workers)
    points = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for p, snr_db in enumerate(config.snr_db):
                points.append(CurvePoint.from_counts(snr_db, *_run_point(fn, config, p, chunk, pool)))
    else:
        for p, snr_db in enumerate(config.snr_db):
            points.append(CurvePoint.from_counts(snr_db, *_run_point(fn, config, p, chunk, None)))
    return points


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        return os.cpu_count() or 1
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def run_wer(config: SimConfig, workers: int | None = 1) -> list[CurvePoint]:
    """Word-error rate of exhaustive ML decoding at each SNR point."""
    if config.mode != Mode.WER:
        raise ValueError("run_wer needs a config in 'wer' mode")
    check_desk_scale(config.code)
    return _run(_wer_chunk, config, config.chunk_trials, workers)


def run_outage(config: SimConfig, workers: int | None = 1) -> list[CurvePoint]:
    """Probability that the mutual information falls short of the target rate."""
    if config.mode not in (Mode.OUTAGE_FIXED, Mode.OUTAGE_SCALING):
        raise ValueError("run_outage needs an outage-mode config")
    return _run(_outage_chunk, config, config.outage_block, workers)


def run(config: SimConfig, workers: int | None = 1) -> list[CurvePoint]:
    return run_wer(config, workers) if config.mode == Mode.WER else run_outage(config, workers)


# ---------------------------------------------------------------------------
# slope fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    snr_db_used: tuple[float, ...]
    reliable: bool


def fit_slope(points: Sequence[CurvePoint], window: int | None = 3, min_errors: int = 50) -> SlopeFit:
    """Least-squares slope of -log10(estimate) against log10(snr).

    Uses the ``window`` highest-SNR points that have at least ``min_errors``
    error events (all of them when ``window`` is None).  If fewer than two
    such points exist, falls back to the highest nonzero points and marks the
    fit unreliable.
    """
    nonzero = [p for p in points if p.estimate > 0]
    if len(nonzero) < 2:
        raise ValueError("need at least two points with nonzero estimates")
    good = [p for p in nonzero if p.errors >= min_errors]
    reliable = len(good) >= 2
    chosen = good if reliable else nonzero
    chosen = sorted(chosen, key=lambda p: p.snr_db)
    if window is not None:
        chosen = chosen[-max(window, 2):]
    x = np.array([p.snr_db / 10.0 for p in chosen])
    yv = -np.log10([p.estimate for p in chosen])
    slope, intercept = np.polyfit(x, yv, 1)
    return SlopeFit(float(slope), float(intercept), tuple(p.snr_db for p in chosen), reliable)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(points: Iterable[CurvePoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for p in points:
            w.writerow([_fmt(p.snr_db), p.trials, p.errors, _fmt(p.estimate), _fmt(p.ci_low), _fmt(p.ci_high), p.flag])


def provenance(config: SimConfig, extra: dict | None = None) -> dict:
    doc = {"tool": "splitnvd", "version": __version__, "seed": config.seed, "config": config.describe()}
    if extra:
        doc.update(extra)
    return doc


def write_json(points: Iterable[CurvePoint], config: SimConfig, path, extra: dict | None = None) -> dict:
    doc = provenance(config, extra)
    doc["points"] = [asdict(p) for p in points]
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    return doc
