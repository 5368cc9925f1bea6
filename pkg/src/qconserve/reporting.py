"""Deterministic report serialization.

JSON is emitted by a small recursive writer rather than ``json.dump`` so
that float formatting is pinned: every float is rendered with 17
significant digits (lossless double round-trip), keys are sorted, and the
byte stream is a pure function of the data. Time series go to CSV.
"""

from __future__ import annotations

import csv
import json
from dataclasses import is_dataclass, fields

import numpy as np

from .ledger import ConservationReport, MeasurementEvent

SCHEMA_TAG = "qconserve-report/1"


def _format_float(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x!r}")
    out = format(float(x), ".17g")
    # bare integers like '1' are valid JSON numbers; keep them as emitted
    return out


def _normalize(obj):
    """Convert numpy scalars/arrays, complex values and dataclasses to
    plain JSON-ready structures."""
    if obj is None or isinstance(obj, (bool, str, int)):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"imag": float(obj.imag), "real": float(obj.real)}
    if isinstance(obj, np.ndarray):
        return [_normalize(v) for v in obj.tolist()]
    if isinstance(obj, ConservationReport):
        return ledger_report_to_dict(obj)
    if is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _normalize(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, dict):
        return {str(k): _normalize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_normalize(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(_format_float(obj))
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=True))
    elif isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj)):
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, list):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    else:  # pragma: no cover - _normalize rejects these first
        raise TypeError(f"cannot emit {type(obj).__name__}")


def render_json(obj) -> str:
    """Deterministic JSON text: sorted keys, 17-significant-digit floats."""
    out: list = []
    _emit(_normalize(obj), out)
    return "".join(out) + "\n"


def _event_to_dict(event: MeasurementEvent) -> dict:
    return {
        "t": event.t,
        "probabilities": dict(event.probabilities),
        "baseline_values": dict(event.baseline_values),
        "classification": dict(event.classification),
        "audits": {
            name: [
                {
                    "branch": a.branch_label,
                    "probability": a.probability,
                    "global_value": a.global_value,
                    "factor_values": dict(a.factor_values),
                    "factor_deltas": dict(a.factor_deltas),
                    "offset_residual": a.offset_residual,
                    "deviation_from_preinteraction": (
                        a.deviation_from_preinteraction
                    ),
                }
                for a in rows
            ]
            for name, rows in event.audits.items()
        },
    }


def ledger_report_to_dict(report: ConservationReport) -> dict:
    """Stable dict form of a ledger report (entries sorted by name,
    series sorted by time)."""
    entries = []
    for name in report.entry_names:
        rows = sorted(report.series[name], key=lambda r: r["t"])
        entries.append(
            {
                "name": name,
                "conserved": report.conserved_tags[name],
                "commutator_with_h": report.commutators[name],
                "series": [
                    {
                        "t": r["t"],
                        "global": r["global"],
                        "factors": dict(r["factors"]),
                    }
                    for r in rows
                ],
            }
        )
    return {
        "entries": entries,
        "events": [_event_to_dict(ev) for ev in report.events],
        "max_unitary_drift": report.max_unitary_drift,
        "branch_offset_residuals": list(report.branch_offset_residuals),
    }


def series_table(report: ConservationReport) -> tuple[list[str], list[list]]:
    """Rectangular (header, rows) time-series view of a ledger report.

    Columns: t, then one global column per entry and one column per
    (entry, factor) pair, names sorted.
    """
    columns: list[tuple[str, str | None]] = []
    for name in report.entry_names:
        columns.append((name, None))
        factor_labels = sorted(
            {lbl for row in report.series[name] for lbl in row["factors"]}
        )
        for lbl in factor_labels:
            columns.append((name, lbl))
    header = ["t"] + [
        name if lbl is None else f"{name}.{lbl}" for name, lbl in columns
    ]
    times = [row["t"] for row in report.series[report.entry_names[0]]]
    by_entry = {
        name: {row["t"]: row for row in report.series[name]}
        for name in report.entry_names
    }
    rows = []
    for t in times:
        out_row: list = [_format_float(t)]
        for name, lbl in columns:
            row = by_entry[name][t]
            value = row["global"] if lbl is None else row["factors"].get(lbl)
            out_row.append("" if value is None else _format_float(value))
        rows.append(out_row)
    return header, rows


def write_csv(path, report: ConservationReport) -> None:
    header, rows = series_table(report)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
