"""
Artifact Storage for mcblab

CSV tables (path records, report tables), JSON suite summaries and error
manifests under one output directory. Every CSV starts with a comment
line carrying the tool version, config hash and master seed; floats are
written in shortest round-trip form so reruns are byte-comparable.
"""

import csv
import io
import json
import logging
import math
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterable, Iterator, Optional, Sequence

from .. import __version__
from ..schemas.analysis import TestReport
from ..schemas.dynamics import BatchPath

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# mcblab"


def format_value(value: Any) -> str:
    """Shortest round-trip text for numbers, true/false for booleans."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if hasattr(value, "item") and not isinstance(value, (str, bytes)):
        value = value.item()       # numpy scalar
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def header_line(config_hash: str, seed: int) -> str:
    return f"{HEADER_PREFIX} version={__version__} config_hash={config_hash} seed={seed}"


def parse_header(line: str) -> dict[str, str]:
    """Fields of an artifact header line."""
    if not line.startswith(HEADER_PREFIX):
        return {}
    fields = {}
    for item in line[len(HEADER_PREFIX):].split():
        key, _, value = item.partition("=")
        fields[key] = value
    return fields


class TableWriter:
    """Row sink for one CSV table with a fixed column list."""

    def __init__(self, handle, columns: Sequence[str]):
        self.columns = list(columns)
        self._writer = csv.writer(handle, lineterminator="\n")
        self._writer.writerow(self.columns)
        self.rows = 0

    def write(self, row: dict) -> None:
        self._writer.writerow([format_value(row.get(c)) for c in self.columns])
        self.rows += 1

    def write_many(self, rows: Iterable[dict]) -> None:
        for row in rows:
            self.write(row)


# ============================================================
# ROW BUILDERS
# ============================================================

PATH_COLUMNS = ("replica", "time_model", "time_rescaled", "z1", "z2")
SITE_COLUMNS = ("replica", "time_model", "site", "x1", "x2")
EVENT_COLUMNS = ("replica", "time_model", "site", "axis", "value", "dx1", "dx2")
REPORT_COLUMNS = ("name", "statistic", "threshold", "n", "verdict", "metadata")


def _rescale(batch: BatchPath) -> float:
    """Model time per unit of rescaled time (1 when N < 3)."""
    n = batch.n_sites
    return n / math.log(n) if n >= 3 else 1.0


def path_rows(batch: BatchPath) -> Iterator[dict]:
    """One row per replica and sample time, replicas in index order."""
    beta = _rescale(batch)
    model_times = batch.times * batch.time_scale
    for b in range(batch.n_replicas):
        replica = batch.first_replica + b
        for j, t in enumerate(model_times):
            yield {
                "replica": replica,
                "time_model": float(t),
                "time_rescaled": float(t / beta),
                "z1": float(batch.totals[b, j, 0]),
                "z2": float(batch.totals[b, j, 1]),
            }


def site_rows(batch: BatchPath) -> Iterator[dict]:
    if batch.snapshots is None:
        return
    model_times = batch.times * batch.time_scale
    for b in range(batch.n_replicas):
        for j, t in enumerate(model_times):
            for k in range(batch.n_sites):
                x1, x2 = batch.snapshots[b, j, k]
                yield {
                    "replica": batch.first_replica + b,
                    "time_model": float(t),
                    "site": k,
                    "x1": float(x1),
                    "x2": float(x2),
                }


def event_rows(batch: BatchPath) -> Iterator[dict]:
    if batch.events is None:
        return
    for e in sorted(batch.events, key=lambda e: (e.replica, e.time, e.site)):
        yield {
            "replica": e.replica,
            "time_model": e.time,
            "site": e.site,
            "axis": e.mark.axis.value,
            "value": e.mark.value,
            "dx1": e.displacement[0],
            "dx2": e.displacement[1],
        }


def report_rows(reports: Iterable[TestReport]) -> Iterator[dict]:
    for r in reports:
        yield {
            "name": r.name,
            "statistic": r.statistic,
            "threshold": r.threshold,
            "n": r.n,
            "verdict": r.verdict.value,
            "metadata": json.dumps(r.metadata, sort_keys=True, default=_json_default),
        }


def _json_default(value: Any) -> Any:
    if hasattr(value, "item"):
        return value.item()
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return str(value)


def render_batch_csv(batch: BatchPath, config_hash: str, seed: int) -> str:
    """The path table of a batch as it would be written to disk."""
    buffer = io.StringIO()
    buffer.write(header_line(config_hash, seed) + "\n")
    TableWriter(buffer, PATH_COLUMNS).write_many(path_rows(batch))
    return buffer.getvalue()


# ============================================================
# STORE
# ============================================================

class ArtifactStore:
    """Writes the artifacts of one run into `out_dir`."""

    def __init__(self, out_dir: Path, config_hash: str, seed: int):
        self.out_dir = Path(out_dir)
        self.config_hash = config_hash
        self.seed = seed
        self.written: list[Path] = []
        self.out_dir.mkdir(parents=True, exist_ok=True)

    @contextmanager
    def open_table(self, name: str, columns: Sequence[str]) -> Iterator[TableWriter]:
        """Context manager yielding a TableWriter for `<name>.csv`."""
        path = self.out_dir / f"{name}.csv"
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(header_line(self.config_hash, self.seed) + "\n")
            writer = TableWriter(handle, columns)
            try:
                yield writer
            finally:
                self.written.append(path)
                logger.info("wrote %s (%d rows)", path, writer.rows)

    def write_rows(self, name: str, rows: Sequence[dict]) -> Optional[Path]:
        """Write a list of dict rows; columns in first-seen order."""
        if not rows:
            return None
        columns: list[str] = []
        for row in rows:
            columns.extend(k for k in row if k not in columns)
        with self.open_table(name, columns) as table:
            table.write_many(rows)
        return self.written[-1]

    def write_batch(self, batch: BatchPath, prefix: str = "paths") -> None:
        with self.open_table(prefix, PATH_COLUMNS) as table:
            table.write_many(path_rows(batch))
        if batch.snapshots is not None:
            with self.open_table(f"{prefix}_sites", SITE_COLUMNS) as table:
                table.write_many(site_rows(batch))
        if batch.events is not None:
            with self.open_table(f"{prefix}_events", EVENT_COLUMNS) as table:
                table.write_many(event_rows(batch))

    def write_reports(self, name: str, reports: Sequence[TestReport]) -> None:
        with self.open_table(name, REPORT_COLUMNS) as table:
            table.write_many(report_rows(reports))

    def _write_json(self, name: str, payload: dict) -> Path:
        path = self.out_dir / name
        body = {
            "version": __version__,
            "config_hash": self.config_hash,
            "seed": self.seed,
            **payload,
        }
        path.write_text(
            json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n",
            encoding="utf-8",
        )
        self.written.append(path)
        return path

    def write_summary(self, suite: str, reports: Sequence[TestReport]) -> Path:
        """Machine-readable summary of one suite."""
        failed = [r.name for r in reports if not r.passed]
        return self._write_json(
            f"{suite}_summary.json",
            {
                "suite": suite,
                "passed": not failed,
                "n_reports": len(reports),
                "failed": failed,
            },
        )

    def write_error_manifest(self, error: BaseException) -> Path:
        """Record an aborted run next to whatever it already produced."""
        logger.error("run aborted: %s", error)
        return self._write_json(
            "error_manifest.json",
            {
                "error": type(error).__name__,
                "message": str(error),
                "field_path": getattr(error, "field_path", None),
                "artifacts": sorted(p.name for p in self.written),
            },
        )


def read_table(path: Path) -> tuple[dict[str, str], list[dict]]:
    """Header fields and rows (as strings) of an artifact CSV."""
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as handle:
        first = handle.readline()
        meta = parse_header(first.strip())
        if not meta:
            handle.seek(0)
        rows = list(csv.DictReader(handle))
    return meta, rows
