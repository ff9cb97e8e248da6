"""Replicate-level experiment results and their per-cell summaries.

A report keeps every replicate row keyed by ``(n, k, query, rep)``; cell
statistics are recomputed from the rows in key order, so merging disjoint
replicate sets gives exactly the numbers of a single combined run.
"""
import csv
import io
import json
import math

import numpy as np

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "experiment", "n", "k", "query", "x", "reps", "support_distance",
    "dev_mean", "dev_std", "dev_exceed_freq", "mode_error_freq",
    "radius_tail_freq", "hoeffding_bound",
    "w_mean", "w_std",
    "delta_h_mean", "delta_h_std", "delta_x_mean", "sign_agree_freq", "gate_on_freq",
    "regime_a_freq", "regime_b_freq", "regime_c_freq",
    "l1_mean", "l1_std", "envelope_excess_max",
    "target", "target_delta_x", "limit_l1", "l1_bound",
)

# row metric -> [(column, reducer)]
_REDUCERS = {
    "dev": [("dev_mean", "mean"), ("dev_std", "std")],
    "dev_exceed": [("dev_exceed_freq", "mean")],
    "mode_error": [("mode_error_freq", "mean")],
    "radius_tail": [("radius_tail_freq", "mean")],
    "w": [("w_mean", "mean"), ("w_std", "std")],
    "delta_h": [("delta_h_mean", "mean"), ("delta_h_std", "std")],
    "delta_x": [("delta_x_mean", "mean")],
    "sign_agree": [("sign_agree_freq", "mean")],
    "gate_on": [("gate_on_freq", "mean")],
    "regime_a": [("regime_a_freq", "mean")],
    "regime_b": [("regime_b_freq", "mean")],
    "regime_c": [("regime_c_freq", "mean")],
    "l1": [("l1_mean", "mean"), ("l1_std", "std")],
    "envelope_excess": [("envelope_excess_max", "max")],
}


class SchemaMismatch(ValueError):
    pass


def hoeffding_bound(delta, k, C, radius_tail):
    """``2C exp(-2k (delta/2)^2)`` plus the supplied radius-tail probability."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 <= radius_tail <= 1.0:
        raise ValueError(f"radius tail must lie in [0, 1], got {radius_tail}")
    return 2 * C * math.exp(-2 * k * (delta / 2) ** 2) + radius_tail


def _reduce(values, how):
    arr = np.asarray(values, dtype=np.float64)
    if how == "mean":
        return float(np.mean(arr))
    if how == "max":
        return float(np.max(arr))
    if arr.size < 2:
        return 0.0
    return float(np.std(arr, ddof=1))


class ExperimentReport:
    def __init__(self, experiment, metadata, cell_info, rows):
        self.experiment = experiment
        self.metadata = dict(metadata)
        self.cell_info = {tuple(key): dict(v) for key, v in cell_info.items()}
        self.rows = {tuple(key): dict(v) for key, v in rows.items()}
        for key in self.rows:
            if key[:3] not in self.cell_info:
                raise SchemaMismatch(f"row {key} has no cell description")

    def cell_keys(self):
        return sorted(self.cell_info)

    def cells(self):
        """Per-cell summaries in ``(n, k, query)`` order."""
        by_cell = {}
        for key in sorted(self.rows):
            by_cell.setdefault(key[:3], []).append(self.rows[key])
        out = []
        for ck in self.cell_keys():
            n, k, q = ck
            info = self.cell_info[ck]
            rows = by_cell.get(ck, [])
            cell = {"experiment": self.experiment, "n": n, "k": k, "query": q,
                    "reps": len(rows)}
            cell.update(info)
            metrics = rows[0].keys() if rows else ()
            for m in metrics:
                for col, how in _REDUCERS[m]:
                    cell[col] = _reduce([r[m] for r in rows], how)
            if "radius_tail_freq" in cell:
                cell["hoeffding_bound"] = hoeffding_bound(
                    self.metadata["delta"], k, self.metadata["C"], cell["radius_tail_freq"])
            out.append(cell)
        return out

    def cell(self, n, query):
        for c in self.cells():
            if c["n"] == n and c["query"] == query:
                return c
        raise KeyError((n, query))

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for cell in self.cells():
            writer.writerow([_fmt(cell.get(col)) for col in CSV_COLUMNS])
        return buf.getvalue()

    def to_json(self):
        payload = {
            "schema_version": SCHEMA_VERSION,
            "experiments": {
                self.experiment: {
                    "metadata": self.metadata,
                    "cells": [{k: _jsonable(v) for k, v in c.items()} for c in self.cells()],
                }
            },
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def aggregate(reports):
    """Pool replicate rows of reports that share experiment, grid and metadata."""
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to aggregate")
    first = reports[0]
    rows = {}
    for rep in reports:
        if rep.experiment != first.experiment:
            raise SchemaMismatch(f"cannot pool {rep.experiment!r} with {first.experiment!r}")
        if rep.cell_info != first.cell_info:
            raise SchemaMismatch("reports cover different cells")
        if _shared(rep.metadata) != _shared(first.metadata):
            raise SchemaMismatch("reports differ in scenario or sweep settings")
        for key, row in rep.rows.items():
            if key in rows:
                raise SchemaMismatch(f"replicate {key} appears twice")
            rows[key] = row
    meta = dict(first.metadata)
    meta["replicates"] = sorted({key[3] for key in rows})
    return ExperimentReport(first.experiment, meta, first.cell_info, rows)


def _shared(meta):
    return {k: v for k, v in meta.items() if k != "replicates"}


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty report")
        return reader.fieldnames, list(reader)
