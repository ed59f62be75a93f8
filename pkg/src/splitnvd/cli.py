"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__, analysis
from .codes import CodeSpec, DeskScaleExceeded, Scheme, build_constellation, golden_pair
from .config import ConfigError, load_config_file, resolve
from .sim import Mode, SimConfig, fit_slope, provenance, resolve_workers, run, write_csv, write_json
from .channel import ChannelSpec

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(" ", "").split(",") if t]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.replace(" ", "").split(",") if t]


def _write_json(path, doc) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(analysis.to_jsonable(doc), fh, indent=2)


def _fmt_exact(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else repr(float(x))


# ---------------------------------------------------------------------------
# simulation commands
# ---------------------------------------------------------------------------

def _sim_overrides(args) -> dict:
    snr = _floats(args.snr_db) if args.snr_db else None
    return {
        "code": {"scheme": getattr(args, "scheme", None), "bits_per_symbol": getattr(args, "bits", None)},
        "channel": {"N": args.N, "nt": args.nt, "nr": args.nr, "correlation": args.correlation},
        "sim": {
            "mode": getattr(args, "mode", None),
            "snr_db": snr, "snr_start": args.snr_start, "snr_stop": args.snr_stop, "snr_step": args.snr_step,
            "trials": args.trials, "min_errors": args.min_errors, "seed": args.seed,
            "rate": getattr(args, "rate", None),
            "mi_denominator": getattr(args, "mi_denominator", None),
        },
        "output": {"path": args.out, "format": args.format},
    }


def _emit_curve(points, cfg: SimConfig, path: str, fmt: str, extra: dict | None = None) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    if fmt in ("csv", "both"):
        write_csv(points, f"{path}.csv")
    if fmt in ("json", "both"):
        write_json(points, cfg, f"{path}.json", extra)


def cmd_simulate(args, mode_family: str) -> int:
    file_data = load_config_file(args.config) if args.config else None
    default_mode = Mode.WER if mode_family == "wer" else Mode.OUTAGE_FIXED
    if mode_family == "outage" and args.scaling:
        args.mode = Mode.OUTAGE_SCALING
    rc = resolve(file_data, _sim_overrides(args), default_mode, mode_family)
    cfg = rc.sim
    if (cfg.mode == Mode.WER) != (mode_family == "wer"):
        raise ConfigError(f"config mode {cfg.mode!r} does not match the '{mode_family}' command")
    t0 = time.perf_counter()
    points = run(cfg, resolve_workers(args.workers))
    extra = {}
    if mode_family == "outage":
        try:
            fit = fit_slope(points)
            extra["slope"] = {"slope": fit.slope, "snr_db_used": fit.snr_db_used, "reliable": fit.reliable}
        except ValueError:
            extra["slope"] = None
    _emit_curve(points, cfg, rc.output_path, rc.output_format, extra)
    last = points[-1]
    msg = (f"{cfg.mode}: {len(points)} points, seed {cfg.seed}, last {last.snr_db:g} dB -> "
           f"{last.estimate:.3e} ({last.errors}/{last.trials})")
    if extra.get("slope"):
        msg += f", slope {extra['slope']['slope']:.3f}"
    print(f"{msg}; wrote {rc.output_path}.* in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analysis commands
# ---------------------------------------------------------------------------

def cmd_dmt_curve(args) -> int:
    step = Fraction(args.step).limit_denominator(1000)
    rows = analysis.dmt_table(args.N, args.nt, args.nr, step=step, rho=args.rho)
    out = args.out or "dmt_curve"
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(f"{out}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "d_split", "d_parallel"])
        for row in rows:
            w.writerow([_fmt_exact(row["r"]), _fmt_exact(row["d_split"]), _fmt_exact(row["d_parallel"])])
    _write_json(f"{out}.json", {"tool": "splitnvd", "version": __version__,
                                "config": {"N": args.N, "n_t": args.nt, "n_r": args.nr, "rho": args.rho,
                                           "step": _fmt_exact(step)},
                                "rows": rows})
    print("r,d_split,d_parallel")
    for row in rows:
        print(f"{_fmt_exact(row['r'])},{_fmt_exact(row['d_split'])},{_fmt_exact(row['d_parallel'])}")
    return EXIT_OK


def _code_from_args(args) -> CodeSpec:
    return CodeSpec(Scheme.parse(args.scheme), build_constellation(args.bits))


def cmd_nvd_min_det(args) -> int:
    spec = _code_from_args(args)
    t0 = time.perf_counter()
    rep = analysis.min_det_exact(spec)
    doc = {"tool": "splitnvd", "version": __version__, "config": spec.describe(), "report": rep}
    ok = rep.nvd
    msg = f"min |det|^2 = {rep.min_exact_detsq} over {rep.differences_examined} differences ({spec.constellation.name})"
    if args.compare_bpsk and spec.constellation.size > 2:
        ref = analysis.min_det_exact(CodeSpec(spec.scheme, build_constellation(1)))
        same = ref.min_exact_detsq == rep.min_exact_detsq
        doc["bpsk_reference"] = ref
        doc["constellation_independent"] = same
        ok = ok and same and ref.nvd
        msg += f"; BPSK-restricted {ref.min_exact_detsq} ({'identical' if same else 'DIFFERENT'})"
    _write_json(f"{args.out or 'nvd_min_det'}.json", doc)
    print(f"{msg}; {'NVD certified' if ok else 'FAILED'} in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_nvd_criterion(args) -> int:
    out = args.out or "nvd_criterion"
    if args.schedule:
        res = analysis.theorem1_schedule(args.scheme, _ints(args.schedule), r=args.r, slack=args.slack)
        _write_json(f"{out}.json", {"tool": "splitnvd", "version": __version__, "report": res})
        print(f"exponent {res['exponent']:.3f} (need >= {res['required_min_exponent']:.2f}), "
              f"offset {res['offset']:.3f}: {'passed' if res['passed'] else 'FAILED'}")
        return EXIT_OK if res["passed"] else EXIT_FAIL
    spec = _code_from_args(args)
    rep = analysis.check_nvd_criterion(spec, m=args.m, rate_bits=args.rate_bits)
    _write_json(f"{out}.json", {"tool": "splitnvd", "version": __version__, "config": spec.describe(), "report": rep})
    print(f"min product of {args.m} smallest eigenvalues = {rep.min_product:.6g} "
          f"(log2 {rep.log2_min_product:.3f}, rate {rep.rate_bits:g} bits): {'nonzero' if rep.nvd else 'ZERO'}")
    return EXIT_OK if rep.nvd else EXIT_FAIL


def fig_reproduce(trials: int, snr_db, seed: int, workers: int, min_snr_check: float = 20.0) -> dict:
    """4 bpcu split-vs-parallel WER comparison with common random numbers."""
    channel = ChannelSpec(2, 2, 2)
    curves = {}
    for spec in golden_pair(4):
        cfg = SimConfig(channel, tuple(snr_db), trials, seed=seed, code=spec)
        curves[spec.scheme.value] = (cfg, run(cfg, workers))
    split = curves[Scheme.SPLIT.value][1]
    par = curves[Scheme.BLOCK_DIAG.value][1]
    checks = []
    for s, p in zip(split, par):
        if s.snr_db < min_snr_check:
            continue
        checks.append({
            "snr_db": s.snr_db,
            "split": s.estimate,
            "parallel": p.estimate,
            "split_le_parallel": s.estimate <= p.estimate,
            "ci_overlap_or_split_better": s.ci_low <= p.ci_high,
        })
    passed = bool(checks) and all(c["split_le_parallel"] and c["ci_overlap_or_split_better"] for c in checks)
    return {"curves": curves, "checks": checks, "passed": passed}


def cmd_verify(args) -> int:
    what = args.what
    out = args.out or f"verify_{what.replace('-', '_')}"
    if what == "lemma1":
        res = analysis.lemma1_check(samples=args.samples, snr_db=args.snr_db_point, seed=args.seed,
                                    spectrum_draws=args.instances)
        ok = res["passed"]
        summary = (f"KS p={res['ks_pvalue']:.3f} ({'rejects' if res['ks_rejects'] else 'no rejection'}), "
                   f"spectrum max rel error {res['spectrum_max_rel_error']:.2e}")
    elif what == "lemma2":
        res = analysis.ostrowski_suite(args.instances, args.seed)
        ok = res["violations"] == 0 and res["rank_failures"] == 0
        summary = f"{res['violations']} violations, {res['rank_failures']} rank failures in {res['instances']} instances"
    elif what == "theta":
        res = analysis.effective_codeword_suite(args.instances, args.seed)
        ok = res["violations"] == 0 and res["rank_failures"] == 0
        summary = f"{res['violations']} violations, {res['rank_failures']} rank failures in {res['instances']} instances"
    elif what == "power":
        res = {"codes": [analysis.power_check(s) for s in golden_pair(4)]}
        ok = all(r["passed"] for r in res["codes"])
        summary = "; ".join(f"{r['scheme']}/{r['constellation']} mean energy {r['mean_energy']:.12g} "
                            f"(target {r['target']})" for r in res["codes"])
    else:  # fig-reproduce
        snr = _floats(args.snr_grid)
        fr = fig_reproduce(args.trials, snr, args.seed, resolve_workers(args.workers))
        for scheme, (cfg, points) in fr["curves"].items():
            Path(out).parent.mkdir(parents=True, exist_ok=True)
            write_csv(points, f"{out}_{scheme}.csv")
            write_json(points, cfg, f"{out}_{scheme}.json")
        res = {"checks": fr["checks"], "passed": fr["passed"],
               "provenance": {k: provenance(cfg) for k, (cfg, _) in fr["curves"].items()}}
        ok = fr["passed"]
        summary = ", ".join(f"{c['snr_db']:g} dB split {c['split']:.2e} vs parallel {c['parallel']:.2e}"
                            for c in fr["checks"])
    _write_json(f"{out}.json", {"tool": "splitnvd", "version": __version__, "check": what, "result": res})
    print(f"verify {what}: {summary}: {'passed' if ok else 'FAILED'}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_sim_args(p: argparse.ArgumentParser, wer: bool) -> None:
    p.add_argument("--config", help="TOML config file or JSON provenance from a previous run")
    if wer:
        p.add_argument("--scheme", choices=[s.value for s in Scheme])
        p.add_argument("--bits", type=int, help="bits per constellation symbol")
    else:
        p.add_argument("--rate", type=float, help="R in bits per sub-channel (fixed) or r (scaling)")
        p.add_argument("--scaling", action="store_true", help="target rate N*r*log2(snr)")
        p.add_argument("--mi-denominator", choices=["nt", "N*nt"])
    p.add_argument("--N", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--nr", type=int)
    p.add_argument("--correlation", help="identity | taps:L | file:<path>")
    p.add_argument("--snr-db", help="comma-separated SNR grid in dB")
    p.add_argument("--snr-start", type=float)
    p.add_argument("--snr-stop", type=float)
    p.add_argument("--snr-step", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--min-errors", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=None, help="worker processes (default: all cores)")
    p.add_argument("--out", help="output path prefix")
    p.add_argument("--format", choices=["csv", "json", "both"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitnvd", description=__doc__)
    parser.add_argument("--version", action="version", version=f"splitnvd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_sim_args(sub.add_parser("wer", help="word-error-rate curve with exhaustive ML decoding"), wer=True)
    _add_sim_args(sub.add_parser("outage", help="outage-probability curve"), wer=False)

    p = sub.add_parser("dmt-curve", help="tabulate (rho*M-r)(m-r) against N(M-r)(m-r)")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--nt", type=int, default=2)
    p.add_argument("--nr", type=int, default=2)
    p.add_argument("--rho", type=int, default=None, help="correlation rank (default N)")
    p.add_argument("--step", default="0.25")
    p.add_argument("--out")

    nvd = sub.add_parser("nvd", help="NVD certification").add_subparsers(dest="nvd_command", required=True)
    p = nvd.add_parser("min-det", help="exact minimum |det|^2 over the difference set")
    p.add_argument("--scheme", default="block_diag", choices=[s.value for s in Scheme])
    p.add_argument("--bits", type=int, default=2)
    p.add_argument("--no-compare-bpsk", dest="compare_bpsk", action="store_false")
    p.add_argument("--out")
    p = nvd.add_parser("criterion", help="min product of the m smallest eigenvalues of DD^H")
    p.add_argument("--scheme", default="split", choices=[s.value for s in Scheme])
    p.add_argument("--bits", type=int, default=1)
    p.add_argument("--m", type=int, default=2)
    p.add_argument("--rate-bits", type=float, default=None)
    p.add_argument("--schedule", help="comma-separated constellation sizes, e.g. 2,4")
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--slack", type=float, default=0.25)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="numerical verification suites")
    p.add_argument("what", choices=["lemma1", "lemma2", "theta", "power", "fig-reproduce"])
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--snr-db", dest="snr_db_point", type=float, default=10.0)
    p.add_argument("--snr-grid", default="0,5,10,15,20,25,30")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        if args.command == "wer":
            return cmd_simulate(args, "wer")
        if args.command == "outage":
            return cmd_simulate(args, "outage")
        if args.command == "dmt-curve":
            return cmd_dmt_curve(args)
        if args.command == "nvd":
            return cmd_nvd_min_det(args) if args.nvd_command == "min-det" else cmd_nvd_criterion(args)
        return cmd_verify(args)
    except (ConfigError, DeskScaleExceeded) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
