"""CSV and Tecplot-ASCII writers.

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly; row order is deterministic.
"""
import csv
import os
from pathlib import Path

import numpy as np

from .constitutive import GEN_LABELS
from .fields import FIELD_COLUMNS, FieldSnapshot
from .homogenization import REPORT_LABELS, EffectiveTangents

SWEEP_COLUMNS = ("variable", "value", "status") + tuple(REPORT_LABELS)


def fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    return path


def write_effective(tangents: EffectiveTangents, path):
    """11x11 tangent; first column names the generalized stress component."""
    C = tangents.Cbig if isinstance(tangents, EffectiveTangents) else np.asarray(tangents)
    rows = [[name] + list(C[i]) for i, name in enumerate(GEN_LABELS)]
    return _write_rows(path, ["component"] + list(GEN_LABELS), rows)


def read_effective(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ["component"] + list(GEN_LABELS):
        raise ValueError(f"{path}: unexpected header")
    return np.array([[float(x) for x in r[1:]] for r in rows[1:]])


def write_report(report: dict, path):
    return _write_rows(path, ["coefficient", "value"], [[k, report[k]] for k in REPORT_LABELS])


def write_sweep(rows, path):
    return _write_rows(path, SWEEP_COLUMNS, [[r.get(c, "") for c in SWEEP_COLUMNS] for r in rows])


def write_sweep_row(row, path):
    """Single-row staging file for one sweep case."""
    return write_sweep([row], path)


def merge_sweep_staging(paths, path):
    """Concatenate staging files (in the given order) into one sweep table."""
    body = []
    for p in paths:
        with open(p, newline="") as fh:
            rows = list(csv.reader(fh))
        if tuple(rows[0]) != SWEEP_COLUMNS:
            raise ValueError(f"{p}: unexpected header")
        body.extend(rows[1:])
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        w.writerows(body)
    for p in paths:
        os.remove(p)
    return path


def read_sweep(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        d = dict(r)
        for k in REPORT_LABELS:
            d[k] = float(d[k])
        out.append(d)
    return out


def _tecplot_zone(snap: FieldSnapshot):
    if snap.triangles is None:
        raise ValueError(f"snapshot {snap.name!r} has no connectivity; Tecplot zones need triangles")
    lines = [
        f'ZONE T="{snap.name}", N={snap.n_points}, E={len(snap.triangles)}, F=FEPOINT, ET=TRIANGLE',
    ]
    lines += [" ".join(fmt(v) for v in row) for row in snap.values]
    lines += [" ".join(str(int(i) + 1) for i in tri) for tri in snap.triangles]
    return lines


def write_fields(snapshots, path, format="tecplot", title="flexohom fields"):
    """One Tecplot zone (or CSV block tagged by zone name) per snapshot."""
    if isinstance(snapshots, FieldSnapshot):
        snapshots = [snapshots]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if format == "tecplot":
        lines = [f'TITLE = "{title}"', "VARIABLES = " + ", ".join(f'"{c}"' for c in FIELD_COLUMNS)]
        for s in snapshots:
            lines += _tecplot_zone(s)
        path.write_text("\n".join(lines) + "\n")
        return path
    if format == "csv":
        rows = [[s.name] + list(row) for s in snapshots for row in s.values]
        return _write_rows(path, ("zone",) + FIELD_COLUMNS, rows)
    raise ValueError(f"unknown field format {format!r}")


def read_fields_csv(path):
    """Snapshots from a CSV mirror (connectivity is not stored)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != ("zone",) + FIELD_COLUMNS:
        raise ValueError(f"{path}: unexpected header")
    zones = {}
    for r in rows[1:]:
        zones.setdefault(r[0], []).append([float(x) for x in r[1:]])
    return [FieldSnapshot(name, np.array(v)) for name, v in zones.items()]


def read_tecplot(path):
    """Minimal reader for files produced by :func:`write_fields`."""
    text = Path(path).read_text().splitlines()
    variables = [v.strip().strip('"') for v in text[1].split("=", 1)[1].split(",")]
    zones = []
    i = 2
    while i < len(text):
        head = text[i]
        if not head.startswith("ZONE"):
            raise ValueError(f"{path}:{i + 1}: expected ZONE")
        name = head.split('T="', 1)[1].split('"', 1)[0]
        n = int(head.split("N=", 1)[1].split(",", 1)[0])
        e = int(head.split("E=", 1)[1].split(",", 1)[0])
        vals = np.array([[float(x) for x in text[i + 1 + k].split()] for k in range(n)])
        tris = np.array([[int(x) - 1 for x in text[i + 1 + n + k].split()] for k in range(e)], dtype=int)
        zones.append(FieldSnapshot(name, vals, tris))
        i += 1 + n + e
    if tuple(variables) != FIELD_COLUMNS:
        raise ValueError(f"{path}: unexpected variables")
    return zones
