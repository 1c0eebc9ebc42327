"""Reading and writing experiment results and configs.

A results directory holds::

    results.csv       "# schema_version=1" line, column header, one row per symbol
    summary.json      schema_version, config echo, pooled moments, summary row
    ccdf_before.csv   threshold_db,prob
    ccdf_after.csv    threshold_db,prob
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict
from pathlib import Path
from typing import Union

import yaml

from .errors import ConfigurationError, SchemaError
from .harness import (
    CcdfTable,
    ExperimentConfig,
    ExperimentResult,
    PooledMoments,
    SymbolRecord,
    ccdf,
    summarize,
)

SCHEMA_VERSION = 1
RESULTS_FILE = "results.csv"
SUMMARY_FILE = "summary.json"
COLUMNS = list(SymbolRecord._fields)
_VERSION_LINE = f"# schema_version={SCHEMA_VERSION}"

PathLike = Union[str, Path]


def load_config(path: PathLike) -> dict:
    """Raw mapping from a YAML (or JSON) config file."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"cannot parse config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must be a mapping")
    return data


def write_ccdf(table: CcdfTable, path: PathLike) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["threshold_db", "prob"])
        for t, p in zip(table.threshold_db, table.prob):
            w.writerow([repr(float(t)), repr(float(p))])


def persist(result: ExperimentResult, path: PathLike, ccdf_points: int = 200) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / RESULTS_FILE, "w", newline="") as fh:
        fh.write(_VERSION_LINE + "\n")
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in result.records:
            w.writerow(
                [r.symbol_index, r.seed, repr(r.eta_before), repr(r.eta_after),
                 repr(r.srcm_db_before), repr(r.srcm_db_after), r.elapsed_ns]
            )
    summary = {
        "schema_version": SCHEMA_VERSION,
        "config": result.config.to_dict(),
        "moments": asdict(result.moments),
        "summary": summarize(result),
        "extra": result.extra,
    }
    with open(out / SUMMARY_FILE, "w") as fh:
        json.dump(summary, fh, indent=2)
    write_ccdf(ccdf(result.column("srcm_db_before"), ccdf_points), out / "ccdf_before.csv")
    write_ccdf(ccdf(result.column("srcm_db_after"), ccdf_points), out / "ccdf_after.csv")
    return out


def _read_records(path: Path) -> list[SymbolRecord]:
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\r\n")
        if not first.startswith("# schema_version="):
            raise SchemaError(f"{path}: missing schema_version header")
        version = first.split("=", 1)[1].strip()
        if version != str(SCHEMA_VERSION):
            raise SchemaError(f"{path}: schema_version {version!r}, expected {SCHEMA_VERSION}")
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != COLUMNS:
            raise SchemaError(f"{path}: unexpected columns {header}")
        records = []
        for lineno, row in enumerate(reader, start=3):
            if len(row) != len(COLUMNS):
                raise SchemaError(f"{path}:{lineno}: expected {len(COLUMNS)} fields")
            try:
                records.append(
                    SymbolRecord(int(row[0]), int(row[1]), float(row[2]), float(row[3]),
                                 float(row[4]), float(row[5]), int(row[6]))
                )
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    return records


def load(path: PathLike) -> ExperimentResult:
    src = Path(path)
    records = _read_records(src / RESULTS_FILE)
    with open(src / SUMMARY_FILE) as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{src / SUMMARY_FILE}: {exc}") from None
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"{src / SUMMARY_FILE}: schema_version {meta.get('schema_version')!r}, "
            f"expected {SCHEMA_VERSION}"
        )
    try:
        config = ExperimentConfig.from_dict(meta["config"])
        moments = PooledMoments(**meta["moments"])
    except (KeyError, TypeError, ConfigurationError) as exc:
        raise SchemaError(f"{src / SUMMARY_FILE}: {exc}") from None
    return ExperimentResult(config, records, moments, meta.get("extra", {}))
