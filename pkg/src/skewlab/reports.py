"""Report serialization: stable CSV schemas and self-describing JSON.

Float fields are written with repr (shortest round-trip), keys are sorted,
and row order is fixed, so a given configuration and seed list reproduces
identical bytes.  Every JSON report embeds the canonical configuration
text, its sha256, the RNG name and the seed list.
"""

from __future__ import annotations

import json
import os

from skewlab.config import ExperimentConfig
from skewlab.lyapunov import LyapunovReport, RNG_NAME


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header: list, rows: list) -> None:
    """Plain deterministic CSV; callers pass rows in their canonical order."""
    tmp = [",".join(header)]
    for row in rows:
        tmp.append(",".join(_fmt(v) for v in row))
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(tmp) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def lyapunov_csv_rows(report: LyapunovReport) -> tuple[list, list]:
    """Schema: seed, exponent_index, value; one row per seed and exponent,
    seeds in declared order, exponents descending."""
    rows = []
    for seed, exps in zip(report.seeds, report.per_seed):
        for i, v in enumerate(exps):
            rows.append([seed, i, v])
    return ["seed", "exponent_index", "value"], rows


def ledger_csv_rows(ledger) -> tuple[list, list]:
    """Schema: k, j, class, min_ju, max_ju, length, expansion_integral."""
    rows = []
    for k in sorted(ledger.levels):
        for pc in ledger.levels[k].pieces:
            rows.append([k, pc.index, pc.classification or "-", pc.min_ju,
                         pc.max_ju, pc.length, pc.expansion])
    return ["k", "j", "class", "min_ju", "max_ju", "length",
            "expansion_integral"], rows


def write_json(path, payload: dict, config: ExperimentConfig | None = None,
               seeds=None) -> None:
    body = dict(payload)
    if config is not None:
        body["config"] = config.canonical()
        body["config_sha256"] = config.sha256()
    body.setdefault("rng", RNG_NAME)
    if seeds is not None:
        body["seeds"] = [int(s) for s in seeds]
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(body, fh, sort_keys=True, indent=1)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write JSON to {path}: {exc}") from exc


def emit_report(report, out_dir, stem: str,
                config: ExperimentConfig | None = None) -> dict:
    """Write a report object as CSV + JSON; returns the file paths.

    LyapunovReport instances get the (seed, exponent_index, value) CSV;
    ledger objects the per-piece CSV; anything with as_dict just the JSON.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    if isinstance(report, LyapunovReport):
        header, rows = lyapunov_csv_rows(report)
        csv_path = os.path.join(out_dir, stem + ".csv")
        write_csv(csv_path, header, rows)
        paths["csv"] = csv_path
        payload = report.as_dict()
        seeds = report.seeds
    elif hasattr(report, "levels"):
        header, rows = ledger_csv_rows(report)
        csv_path = os.path.join(out_dir, stem + ".csv")
        write_csv(csv_path, header, rows)
        paths["csv"] = csv_path
        payload = {"sums": {str(k): v for k, v in report.sums.items()},
                   "checks": report.checks}
        seeds = None
    elif hasattr(report, "as_dict"):
        payload = report.as_dict()
        seeds = None
    elif isinstance(report, dict):
        payload = report
        seeds = None
    else:
        raise TypeError(f"cannot serialize {type(report)!r}")
    json_path = os.path.join(out_dir, stem + ".json")
    write_json(json_path, payload, config=config, seeds=seeds)
    paths["json"] = json_path
    return paths
