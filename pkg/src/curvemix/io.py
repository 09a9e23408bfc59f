"""Reading curve files and writing fit results.

Two curve layouts are understood:

wide
    first row ``x,<x_1>,...,<x_m>``, then one row ``<curve_id>,<y_1>,...,<y_m>`` per curve
long
    header ``curve_id,x,y`` with an optional ``label`` column, one row per observation

Every number is written with 17 significant digits, which round-trips doubles exactly.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List

import numpy as np

from .model import CurveSet, FitResult, map_partition, max_posterior, mean_curves


class CurveParseError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.line = line


def fmt(v: float) -> str:
    return format(float(v), ".17g")


def _number(cell: str, path, line: int) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise CurveParseError(path, line, f"non-numeric cell {cell!r}") from None
    if not np.isfinite(v):
        raise CurveParseError(path, line, f"non-finite value {cell!r}")
    return v


def _rows(path):
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if row and any(c.strip() for c in row):
                yield lineno, [c.strip() for c in row]


def _parse_wide(path, rows) -> CurveSet:
    (line0, header), *body = rows
    grid = [_number(c, path, line0) for c in header[1:]]
    if not grid:
        raise CurveParseError(path, line0, "wide header holds no grid values")
    ids, ys = [], []
    for lineno, row in body:
        if len(row) != len(grid) + 1:
            raise CurveParseError(path, lineno,
                                  f"expected {len(grid) + 1} cells, found {len(row)}")
        if row[0] in ids:
            raise CurveParseError(path, lineno, f"duplicate curve id {row[0]!r}")
        ids.append(row[0])
        ys.append([_number(c, path, lineno) for c in row[1:]])
    if not ys:
        raise CurveParseError(path, line0, "no curves found")
    x = np.asarray(grid)
    order = np.argsort(x, kind="stable")
    if np.unique(x).size != x.size:
        raise CurveParseError(path, line0, "duplicate x values in the grid")
    return CurveSet(x[order], np.asarray(ys)[:, order], curve_ids=ids)


def _parse_long(path, rows) -> CurveSet:
    (line0, header), *body = rows
    cols = {name: j for j, name in enumerate(header)}
    missing = {"curve_id", "x", "y"} - cols.keys()
    if missing:
        raise CurveParseError(path, line0, f"missing columns {sorted(missing)}")
    has_label = "label" in cols
    points: Dict[str, Dict[float, float]] = {}
    first_line: Dict[str, int] = {}
    labels: Dict[str, int] = {}
    for lineno, row in body:
        if len(row) != len(header):
            raise CurveParseError(path, lineno,
                                  f"expected {len(header)} cells, found {len(row)}")
        cid = row[cols["curve_id"]]
        xv = _number(row[cols["x"]], path, lineno)
        yv = _number(row[cols["y"]], path, lineno)
        curve = points.setdefault(cid, {})
        first_line.setdefault(cid, lineno)
        if xv in curve:
            raise CurveParseError(path, lineno, f"duplicate point ({cid}, {row[cols['x']]})")
        curve[xv] = yv
        if has_label:
            lab = _number(row[cols["label"]], path, lineno)
            if lab != int(lab):
                raise CurveParseError(path, lineno, "label must be an integer")
            if labels.setdefault(cid, int(lab)) != int(lab):
                raise CurveParseError(path, lineno, f"conflicting labels for curve {cid!r}")
    if not points:
        raise CurveParseError(path, line0, "no curves found")
    ids = list(points)
    m = len(points[ids[0]])
    for cid in ids:
        if len(points[cid]) != m:
            raise CurveParseError(path, first_line[cid],
                                  f"curve {cid!r} has {len(points[cid])} points, expected {m}")
    xs = np.array([sorted(points[c]) for c in ids])
    ys = np.array([[points[c][xv] for xv in sorted(points[c])] for c in ids])
    true = np.array([labels[c] for c in ids]) if has_label else None
    return CurveSet(xs, ys, true, curve_ids=ids)


def ingest_curves(path) -> CurveSet:
    """Read a wide or long curve file; the layout is detected from the header."""
    rows = list(_rows(path))
    if not rows:
        raise CurveParseError(path, 1, "empty file")
    header = rows[0][1]
    if header[0] == "x":
        return _parse_wide(path, rows)
    if "curve_id" in header:
        return _parse_long(path, rows)
    raise CurveParseError(path, rows[0][0], "unrecognized header; expected 'x,...' or 'curve_id,x,y'")


def atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def emit_curves(data: CurveSet, path, layout: str = "long") -> None:
    if layout == "wide":
        if not data.shared_grid:
            raise ValueError("wide layout needs a shared grid")
        rows = [[cid] + [fmt(v) for v in yrow] for cid, yrow in zip(data.curve_ids, data.y)]
        text = _csv_text(["x"] + [fmt(v) for v in data.x[0]], rows)
    elif layout == "long":
        header = ["curve_id", "x", "y"]
        if data.true_labels is not None:
            header.append("label")
        rows = []
        for i, cid in enumerate(data.curve_ids):
            for xv, yv in zip(data.x[i], data.y[i]):
                row = [cid, fmt(xv), fmt(yv)]
                if data.true_labels is not None:
                    row.append(str(int(data.true_labels[i])))
                rows.append(row)
        text = _csv_text(header, rows)
    else:
        raise ValueError(f"unknown layout {layout!r}")
    atomic_write(path, text)


def read_labels(path) -> Dict[str, int]:
    """curve_id -> label from a labels file (``cluster`` or ``label`` column) or a long curve file."""
    rows = list(_rows(path))
    if not rows:
        raise CurveParseError(path, 1, "empty file")
    header = rows[0][1]
    if header[0] == "x" or {"x", "y"} <= set(header):
        data = ingest_curves(path)
        if data.true_labels is None:
            raise CurveParseError(path, rows[0][0], "curve file carries no label column")
        return dict(zip(data.curve_ids, data.true_labels.tolist()))
    cols = {name: j for j, name in enumerate(header)}
    key = "cluster" if "cluster" in cols else "label" if "label" in cols else None
    if "curve_id" not in cols or key is None:
        raise CurveParseError(path, rows[0][0], "expected columns curve_id and cluster|label")
    out = {}
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise CurveParseError(path, lineno, f"expected {len(header)} cells, found {len(row)}")
        v = _number(row[cols[key]], path, lineno)
        if row[cols["curve_id"]] in out:
            raise CurveParseError(path, lineno, f"duplicate curve id {row[cols['curve_id']]!r}")
        out[row[cols["curve_id"]]] = int(v)
    return out


@dataclass
class ResultBundle:
    labels: Path
    params: Path
    trace: Path
    means: Path
    figures: List[Path]


def evaluation_grid(data: CurveSet) -> np.ndarray:
    return np.unique(data.x)


def emit_results(result: FitResult, data: CurveSet, out_dir) -> ResultBundle:
    """Write labels.csv, params.json, trace.csv and means.csv into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = ResultBundle(out / "labels.csv", out / "params.json", out / "trace.csv",
                         out / "means.csv", [])

    labels = map_partition(result.tau)
    post = max_posterior(result.tau)
    atomic_write(paths.labels, _csv_text(
        ["curve_id", "cluster", "max_posterior"],
        [[cid, int(z), fmt(p)] for cid, z, p in zip(data.curve_ids, labels, post)]))

    p = result.params
    last = result.trace.records[-1]
    doc = {
        "engine": result.engine,
        "K": p.K,
        "n": data.n,
        "m": data.m,
        "pi": p.pi.tolist(),
        "beta": p.beta.tolist(),
        "sigma2": p.sigma2.tolist(),
        "basis": result.basis.to_dict(),
        "basis_bounds": [float(data.x.min()), float(data.x.max())],
        "converged": bool(result.converged),
        "iterations": int(result.n_iter),
        "final_lambda": float(last.lam),
        "loglik": float(last.loglik),
        "warnings": result.trace.warnings,
    }
    atomic_write(paths.params, json.dumps(doc, indent=2) + "\n")

    atomic_write(paths.trace, _csv_text(
        ["iter", "K", "lambda", "loglik", "penalized_loglik"],
        [[r.iteration, r.K, fmt(r.lam), fmt(r.loglik), fmt(r.penalized_loglik)]
         for r in result.trace]))

    grid = evaluation_grid(data)
    bounds = (float(data.x.min()), float(data.x.max()))
    means = mean_curves(p, result.basis, grid, bounds=bounds)
    atomic_write(paths.means, _csv_text(
        ["x"] + [f"cluster_{k + 1}" for k in range(p.K)],
        [[fmt(xv)] + [fmt(v) for v in row] for xv, row in zip(grid, means)]))
    return paths
