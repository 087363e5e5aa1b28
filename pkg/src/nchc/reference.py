"""Bundled reference tables and deviation reports against them.

Six tables ship with the package as CSV under ``nchc/data``, keyed by the
source figure they were lifted from (fig3/fig4/fig5, numeric simulation
columns and replica-prediction columns). Each row carries the original
column header as provenance. Values are verbatim; nothing is rounded.

``compare_reference`` joins a results CSV from a distance experiment
against one table on (M, alpha, sigma2-or-1/sigma2) and scores every
matched point with an ``atol + rtol * |reference|`` band. Result rows
with no reference grid point are reported as gaps and fail the
comparison, as does any out-of-band deviation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .experiments import load_results

__all__ = [
    "REFERENCE_SOURCES",
    "ReferenceTable",
    "ReferenceRow",
    "load_reference",
    "compare_reference",
    "ComparisonReport",
]

REFERENCE_SOURCES = (
    "fig3_numeric",
    "fig3_replica",
    "fig4_numeric",
    "fig4_replica",
    "fig5_numeric",
    "fig5_replica",
)

# results.csv column validated by each table
_VALUE_COLUMN = {
    "fig3_numeric": "mean_daa_over_M",
    "fig3_replica": "mean_daa_over_M",
    "fig4_numeric": "var_dab_over_M",
    "fig4_replica": "var_dab_over_M",
    "fig5_numeric": "misclass_rate",
    "fig5_replica": "misclass_rate",
}


@dataclass(frozen=True)
class ReferenceRow:
    key: float  # sigma2 (fig3/fig4) or 1/sigma2 (fig5)
    M: int
    alpha: float
    value: float
    column: str  # provenance: original data column header


@dataclass
class ReferenceTable:
    source: str
    key_name: str  # "sigma2" or "one_over_sigma2"
    rows: list[ReferenceRow]

    def lookup(self, M: int, alpha: float, key: float) -> ReferenceRow | None:
        for row in self.rows:
            if row.M == M and _close(row.alpha, alpha) and _close(row.key, key):
                return row
        return None


def _close(a: float, b: float, rtol: float = 1e-9) -> bool:
    return abs(a - b) <= rtol * max(abs(a), abs(b), 1.0)


def load_reference(source: str) -> ReferenceTable:
    if source not in REFERENCE_SOURCES:
        raise ValueError(f"unknown reference {source!r}; choose from {REFERENCE_SOURCES}")
    data = resources.files("nchc").joinpath(f"data/{source}.csv").read_text()
    reader = csv.DictReader(data.splitlines())
    key_name = "one_over_sigma2" if source.startswith("fig5") else "sigma2"
    rows = [
        ReferenceRow(
            key=float(r[key_name]),
            M=int(r["M"]),
            alpha=float(r["alpha"]),
            value=float(r["value"]),
            column=r["column"],
        )
        for r in reader
    ]
    return ReferenceTable(source=source, key_name=key_name, rows=rows)


@dataclass
class ComparisonEntry:
    M: int
    alpha: float
    key: float
    ours: float
    reference: float
    abs_deviation: float
    rel_deviation: float
    within_tolerance: bool
    column: str


@dataclass
class ComparisonReport:
    source: str
    value_column: str
    rtol: float
    atol: float
    entries: list[ComparisonEntry] = field(default_factory=list)
    gaps: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.gaps and all(e.within_tolerance for e in self.entries)

    def to_text(self) -> str:
        key_label = "1/sigma2" if self.source.startswith("fig5") else "sigma2"
        lines = [
            f"reference comparison: {self.source} ({self.value_column}), "
            f"rtol={self.rtol:g} atol={self.atol:g}",
            f"{'M':>6} {'alpha':>7} {key_label:>10} {'ours':>14} {'reference':>14} "
            f"{'rel_dev':>10}  status",
        ]
        for e in self.entries:
            status = "ok" if e.within_tolerance else "FAIL"
            lines.append(
                f"{e.M:>6} {e.alpha:>7.3g} {e.key:>10.4g} {e.ours:>14.6g} "
                f"{e.reference:>14.6g} {e.rel_deviation:>10.3g}  {status}"
            )
        for gap in self.gaps:
            lines.append(f"gap: {gap}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def compare_reference(
    results: str | Path | list[dict],
    table: ReferenceTable | str,
    rtol: float = 0.02,
    atol: float = 0.0,
) -> ComparisonReport:
    """Score a results CSV (or parsed rows) against one reference table."""
    if isinstance(table, str):
        table = load_reference(table)
    if not isinstance(results, list):
        results = load_results(results)
    value_column = _VALUE_COLUMN[table.source]
    report = ComparisonReport(
        source=table.source, value_column=value_column, rtol=rtol, atol=atol
    )
    for row in results:
        M, alpha, sigma2 = int(row["M"]), float(row["alpha"]), float(row["sigma2"])
        key = 1.0 / sigma2 if table.key_name == "one_over_sigma2" else sigma2
        ref = table.lookup(M, alpha, key)
        if ref is None:
            report.gaps.append(
                f"no {table.source} point for M={M} alpha={alpha:g} {table.key_name}={key:g}"
            )
            continue
        ours = float(row[value_column])
        abs_dev = abs(ours - ref.value)
        rel_dev = abs_dev / abs(ref.value) if ref.value != 0 else math.inf
        ok = math.isfinite(ours) and abs_dev <= atol + rtol * abs(ref.value)
        report.entries.append(
            ComparisonEntry(
                M=M,
                alpha=alpha,
                key=key,
                ours=ours,
                reference=ref.value,
                abs_deviation=abs_dev,
                rel_deviation=rel_dev,
                within_tolerance=ok,
                column=ref.column,
            )
        )
    return report
