"""Report assembly and emission: CSV, JSON summary, plot data, figures.

Identical inputs produce byte-identical CSV/JSON/dat/PNG outputs: floats
are formatted with a fixed %.12g, JSON keys are sorted, and figures render
through the Agg backend with pinned size, dpi, and stripped metadata.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .errors import ValidationError  # noqa: E402

CSV_COLUMNS = ("example_id", "j", "quantity", "p_or_radius", "value",
               "lo", "hi", "method", "tolerance", "verdict")


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return f"{float(x):.12g}"


@dataclass(frozen=True)
class ReportRow:
    example_id: str
    j: int
    quantity: str        # full key, e.g. "lp_dev:2" or "eps_vs:taxi"
    p_or_radius: str     # the parameter part, "" when absent
    value: float
    lo: float | None
    hi: float | None
    method: str          # radial-exact | grid | monte-carlo
    tolerance: float


@dataclass
class ConvergenceReport:
    example_id: str
    params: dict
    rows: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)  # diagnostics.Verdict
    meta: dict = field(default_factory=dict)

    def add(self, row: ReportRow):
        self.rows.append(row)

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: (r.quantity, r.j))

    def series(self, quantity: str):
        """(j list, value list) of one quantity, ordered by j."""
        picked = sorted((r for r in self.rows if r.quantity == quantity),
                        key=lambda r: r.j)
        return [r.j for r in picked], [r.value for r in picked]

    def quantities(self):
        return sorted({r.quantity for r in self.rows})


def quantity_slug(quantity: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", quantity).strip("_")


def _verdict_for(report, quantity):
    for v in report.verdicts:
        if v.claim == quantity:
            return v.status
    return ""


def write_csv(report: ConvergenceReport, path: str):
    lines = [",".join(CSV_COLUMNS)]
    for r in report.sorted_rows():
        lines.append(",".join([
            r.example_id, str(r.j), r.quantity, r.p_or_radius, fmt(r.value),
            fmt(r.lo), fmt(r.hi), r.method, fmt(r.tolerance),
            _verdict_for(report, r.quantity),
        ]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(report: ConvergenceReport, path: str):
    doc = {
        "example_id": report.example_id,
        "params": report.params,
        "meta": report.meta,
        "rows": [
            {
                "j": r.j, "quantity": r.quantity, "p_or_radius": r.p_or_radius,
                "value": r.value, "lo": r.lo, "hi": r.hi,
                "method": r.method, "tolerance": r.tolerance,
            }
            for r in report.sorted_rows()
        ],
        "verdicts": [
            {"claim": v.claim, "status": v.status, "slope": v.slope, "detail": v.detail}
            for v in report.verdicts
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_dat(report: ConvergenceReport, out_dir: str):
    """Two-column (j, value) plot files, one per quantity."""
    paths = []
    for quantity in report.quantities():
        js, vals = report.series(quantity)
        path = os.path.join(out_dir, quantity_slug(quantity) + ".dat")
        with open(path, "w") as fh:
            fh.write(f"# {report.example_id} {quantity}\n")
            for j, v in zip(js, vals):
                fh.write(f"{j} {fmt(v)}\n")
        paths.append(path)
    return paths


def _claim_target(report, quantity):
    for c in report.meta.get("claim_targets", []):
        if c["quantity"] == quantity and isinstance(c.get("target"), (int, float)):
            return float(c["target"])
    return None


def write_figures(report: ConvergenceReport, out_dir: str):
    """One PNG per quantity: value against j, with the claimed limit line."""
    paths = []
    for quantity in report.quantities():
        js, vals = report.series(quantity)
        if not js:
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=120)
        positive = all(v > 0 for v in vals)
        wide = positive and max(vals) / max(min(vals), 1e-300) > 50.0
        plot = ax.loglog if wide else ax.semilogx
        plot(js, vals, "o-", lw=1.2, ms=4, label=quantity)
        target = _claim_target(report, quantity)
        if target is not None and (target > 0 or not wide):
            ax.axhline(target, color="crimson", lw=1.0, ls="--",
                       label=f"claimed limit {target:.6g}")
        ax.set_xlabel("j")
        ax.set_ylabel(quantity)
        ax.set_title(f"{report.example_id}: {quantity}", fontsize=10)
        ax.legend(fontsize=8, loc="best")
        ax.grid(True, which="both", alpha=0.3)
        fig.tight_layout()
        path = os.path.join(out_dir, quantity_slug(quantity) + ".png")
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
        paths.append(path)
    return paths


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def emit(report: ConvergenceReport, out_dir: str,
         formats=("csv", "json", "dat", "png")) -> list:
    """Write the report artifacts; returns the list of file paths."""
    if not report.rows:
        raise ValidationError("cannot emit an empty report")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if "csv" in formats:
        path = os.path.join(out_dir, "report.csv")
        write_csv(report, path)
        paths.append(path)
    if "json" in formats:
        path = os.path.join(out_dir, "summary.json")
        write_json(report, path)
        paths.append(path)
    if "dat" in formats:
        paths.extend(write_dat(report, out_dir))
    if "png" in formats:
        paths.extend(write_figures(report, out_dir))
    return paths
