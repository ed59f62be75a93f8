"""Run configuration: TOML-style files, JSON provenance replay, CLI overrides.

A config file has up to four sections::

    [code]
    scheme = "split"            # or "block_diag"
    bits_per_symbol = 1

    [channel]
    N = 2
    nt = 2
    nr = 2
    correlation = "identity"    # identity | taps:L | file:<path>

    [sim]
    mode = "wer"                # wer | outage_fixed | outage_scaling
    snr_db = [0, 5, 10]         # or snr_start / snr_stop / snr_step
    trials = 10000
    min_errors = 100
    seed = 1
    rate = 1.0

    [output]
    path = "runs/split"
    format = "both"             # csv | json | both

Unknown sections or keys are errors.  A JSON document written by a previous
run (it carries a ``config`` object) is accepted in place of a TOML file and
reproduces that run.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tomli

from .channel import ChannelSpec, CorrelationModel
from .codes import CodeSpec, Constellation, Scheme, build_constellation
from .sim import Mode, SimConfig

__all__ = ["ConfigError", "RunConfig", "load_config_file", "resolve", "from_provenance"]

SCHEMA = {
    "code": {"scheme", "bits_per_symbol"},
    "channel": {"N", "nt", "nr", "correlation"},
    "sim": {
        "mode", "snr_db", "snr_start", "snr_stop", "snr_step", "trials", "min_errors",
        "seed", "rate", "mi_denominator", "chunk_trials", "outage_block",
    },
    "output": {"path", "format"},
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig
    output_path: str
    output_format: str = "both"


def _line_of(text: str, section: str | None, key: str) -> int | None:
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if section is None and current == key:
                return lineno
            continue
        if current == section and re.match(rf"\s*{re.escape(key)}\s*=", line):
            return lineno
    return None


def load_config_file(path) -> dict:
    """Parse and schema-check a config file into ``{section: {key: value}}``."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    text = path.read_text()
    if path.suffix == ".json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
        if "config" not in doc:
            raise ConfigError(f"{path}: JSON document has no 'config' object")
        return {"__provenance__": doc["config"]}
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section, values in data.items():
        if section not in SCHEMA or not isinstance(values, dict):
            line = _line_of(text, None, section)
            raise ConfigError(f"{path}: line {line}: unknown section or key '{section}'")
        for key in values:
            if key not in SCHEMA[section]:
                line = _line_of(text, section, key)
                raise ConfigError(f"{path}: line {line}: unknown key '{key}' in [{section}]")
    return data


def _snr_grid(sim: dict) -> list[float]:
    if "snr_db" in sim:
        grid = sim["snr_db"]
        if isinstance(grid, (int, float)):
            grid = [grid]
        return [float(v) for v in grid]
    if {"snr_start", "snr_stop"} <= sim.keys():
        step = float(sim.get("snr_step", 2.0))
        start, stop = float(sim["snr_start"]), float(sim["snr_stop"])
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 10) for k in range(n)]
    raise ConfigError("[sim] needs 'snr_db' or 'snr_start'/'snr_stop'")


def from_provenance(doc: dict) -> SimConfig:
    """Rebuild the exact :class:`SimConfig` recorded by a previous run."""
    try:
        ch = doc["channel"]
        channel = ChannelSpec(
            ch["N"], ch["n_t"], ch["n_r"], _parse_correlation(ch["correlation"], ch["N"])
        )
        code = None
        if doc.get("code"):
            c = doc["code"]
            pts = [complex(re_, im_) for re_, im_ in c["points"]]
            code = CodeSpec(Scheme.parse(c["scheme"]), Constellation(c["constellation"], tuple(pts)),
                            c["N"], c["n_t"], c["T"])
        return SimConfig(
            channel=channel,
            snr_db=tuple(doc["snr_db"]),
            trials=doc["trials"],
            seed=doc["seed"],
            mode=doc["mode"],
            code=code,
            min_errors=doc.get("min_errors"),
            rate=doc.get("rate", 0.0),
            mi_denominator=doc.get("mi_denominator", "nt"),
            chunk_trials=doc.get("chunk_trials", 500),
            outage_block=doc.get("outage_block", 65536),
        )
    except KeyError as exc:
        raise ConfigError(f"provenance config is missing key {exc}") from None


def _parse_correlation(text: str, N: int) -> CorrelationModel:
    if text.startswith("explicit:"):
        rows = [[complex(v) for v in row.split(",")] for row in text[len("explicit:"):].split(";")]
        return CorrelationModel.explicit(rows)
    return CorrelationModel.parse(text, N)


def resolve(file_data: dict | None, overrides: dict, default_mode: str, default_path: str) -> RunConfig:
    """Merge file sections with CLI overrides (``{section: {key: value}}``, None = unset)."""
    file_data = file_data or {}
    out = dict(file_data.get("output", {}))
    out.update({k: v for k, v in overrides.get("output", {}).items() if v is not None})
    fmt = out.get("format", "both")
    if fmt not in ("csv", "json", "both"):
        raise ConfigError(f"[output] format must be csv, json or both, got {fmt!r}")
    path = out.get("path", default_path)

    if "__provenance__" in file_data:
        try:
            sim = from_provenance(file_data["__provenance__"])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return RunConfig(sim, path, fmt)

    merged = {}
    for section in SCHEMA:
        values = dict(file_data.get(section, {}))
        values.update({k: v for k, v in overrides.get(section, {}).items() if v is not None})
        merged[section] = values
    code_s, ch_s, sim_s = merged["code"], merged["channel"], merged["sim"]
    mode = sim_s.get("mode", default_mode)
    try:
        N = int(ch_s.get("N", 2))
        channel = ChannelSpec(
            N, int(ch_s.get("nt", 2)), int(ch_s.get("nr", 2)),
            CorrelationModel.parse(str(ch_s.get("correlation", "identity")), N),
        )
        code = None
        if mode == Mode.WER:
            if "scheme" not in code_s or "bits_per_symbol" not in code_s:
                raise ConfigError("[code] needs 'scheme' and 'bits_per_symbol' for wer runs")
            code = CodeSpec(Scheme.parse(code_s["scheme"]), build_constellation(int(code_s["bits_per_symbol"])))
        min_errors = sim_s.get("min_errors")
        sim = SimConfig(
            channel=channel,
            snr_db=tuple(_snr_grid(sim_s)),
            trials=int(sim_s.get("trials", 10_000)),
            seed=int(sim_s.get("seed", 0)),
            mode=mode,
            code=code,
            min_errors=None if min_errors in (None, 0) else int(min_errors),
            rate=float(sim_s.get("rate", 0.0)),
            mi_denominator=str(sim_s.get("mi_denominator", "nt")),
            chunk_trials=int(sim_s.get("chunk_trials", 500)),
            outage_block=int(sim_s.get("outage_block", 65536)),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return RunConfig(sim, path, fmt)
