"""CSV and JSON interchange for mass sequences, models and bound reports.

Mass sequences travel either as a JSON array of reals or as two-column CSV
(index, mass).  PMFs serialise with their tail mass and truncation tolerance
so downstream consumers can reconstruct the reporting interval.  Model files
use ``{"kind": "independent", "probs": [...]}`` or
``{"kind": "joint", "n": k, "atoms": [[bit_0, ..., bit_{k-1}, prob], ...]}``.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from .bcp import BoundReport, IndependentModel, JointModel
from .distributions import DEFAULT_TOL, Pmf

PMF_CSV_SCHEMA = "steindist-pmf-v1"
SWEEP_CSV_SCHEMA = "steindist-sweep-v1"


def load_masses(path: str | Path) -> np.ndarray:
    """Read a mass sequence from a ``.json`` array or ``.csv`` (index, mass) file."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text())
        if not isinstance(data, list):
            raise ValueError("JSON mass file must contain an array of reals")
        return np.asarray(data, dtype=np.float64)
    if path.suffix.lower() == ".csv":
        rows = []
        with path.open(newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    idx, mass = int(row[0]), float(row[1])
                except ValueError:
                    continue  # header row
                rows.append((idx, mass))
        if not rows:
            raise ValueError(f"no (index, mass) rows found in {path}")
        size = max(idx for idx, _ in rows) + 1
        arr = np.zeros(size)
        for idx, mass in rows:
            arr[idx] = mass
        return arr
    raise ValueError(f"unsupported mass-file suffix: {path.suffix!r}")


def pmf_to_json_obj(pmf: Pmf) -> dict:
    return {"masses": pmf.masses.tolist(), "tail_mass": pmf.tail_mass, "tol": pmf.tol}


def pmf_from_json_obj(obj: dict) -> Pmf:
    return Pmf(
        np.asarray(obj["masses"], dtype=np.float64),
        float(obj.get("tail_mass", 0.0)),
        float(obj.get("tol", DEFAULT_TOL)),
    )


def format_pmf(pmf: Pmf, fmt: str = "json") -> str:
    """Render a PMF as deterministic JSON or schema-stamped CSV text."""
    if fmt == "json":
        return json.dumps(pmf_to_json_obj(pmf), sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# {PMF_CSV_SCHEMA} tail_mass={pmf.tail_mass!r} tol={pmf.tol!r}\n")
        buf.write("index,mass\n")
        for j, mass in enumerate(pmf.masses):
            buf.write(f"{j},{mass!r}\n")
        return buf.getvalue()
    raise ValueError("format must be 'json' or 'csv'")


def load_model(path: str | Path):
    """Read an indicator model description from JSON."""
    obj = json.loads(Path(path).read_text())
    kind = obj.get("kind")
    if kind == "independent":
        return IndependentModel(obj["probs"])
    if kind == "joint":
        return JointModel.from_atoms(int(obj["n"]), obj["atoms"])
    raise ValueError(f"unknown model kind {kind!r}")


def format_report(report: BoundReport) -> str:
    return json.dumps(report.to_record(), sort_keys=True, indent=2) + "\n"


REPORT_CSV_FIELDS = (
    "theorem",
    "m",
    "delta",
    "p",
    "alpha",
    "hypotheses_met",
    "total",
    "tv_lower",
    "tv_upper",
    "dominant",
)


def report_csv_row(report: BoundReport, extra: dict | None = None) -> dict:
    row = {
        "theorem": report.theorem,
        "m": report.params.m,
        "delta": repr(report.params.delta),
        "p": repr(report.params.p),
        "alpha": repr(report.params.alpha),
        "hypotheses_met": report.hypotheses_met,
        "total": repr(report.total),
        "tv_lower": repr(report.tv_lower),
        "tv_upper": repr(report.tv_upper),
        "dominant": "" if report.dominant is None else report.dominant,
    }
    if extra:
        row.update(extra)
    return row


def format_sweep_csv(rows: list[dict], fields: list[str]) -> str:
    """Assemble sweep rows into schema-stamped CSV (header always present)."""
    buf = io.StringIO()
    buf.write(f"# {SWEEP_CSV_SCHEMA}\n")
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
