"""Plain-text emitters. Floats go through ``repr`` so output is byte-stable."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .reports import CheckReport


def _f(x):
    return repr(float(x))


def trajectory_rows(traj):
    times, values = traj.knots()
    sides = traj.sides()
    header = ["t", "side"] + [f"v_{j}" for j in range(values.shape[1])]
    rows = [[_f(t), s] + [_f(v) for v in vals] for t, s, vals in zip(times, sides, values)]
    return header, rows


def history_rows(history):
    theta, values = history.theta, history.values
    sides = np.full(theta.size, "", dtype=object)
    dup = np.flatnonzero(np.diff(theta) == 0)
    sides[dup], sides[dup + 1] = "L", "R"
    header = ["theta", "side"] + [f"v_{j}" for j in range(values.shape[1])]
    rows = [[_f(t), s] + [_f(v) for v in vals] for t, s, vals in zip(theta, sides, values)]
    return header, rows


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_trajectory(path, traj):
    return _write_csv(path, *trajectory_rows(traj))


def write_history(path, history):
    return _write_csv(path, *history_rows(history))


def read_trajectory(path):
    """``(t, side, values)`` arrays from a trajectory file."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        next(r)
        rows = list(r)
    t = np.array([float(row[0]) for row in rows])
    side = np.array([row[1] for row in rows], dtype=object)
    v = np.array([[float(x) for x in row[2:]] for row in rows])
    return t, side, v


def write_reports(path, reports):
    """Concatenate key-value report blocks."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blocks = []
    for rep in reports:
        if isinstance(rep, CheckReport):
            blocks.append(rep.to_text())
        else:
            name, items = rep
            lines = [f"[{name}]"] + [f"{k} = {_fmt(v)}" for k, v in items.items()]
            blocks.append("\n".join(lines) + "\n")
    path.write_text("\n".join(blocks))
    return path


def write_table(path, rows, columns):
    return _write_csv(path, list(columns), [[_fmt(r[c]) for c in columns] for r in rows])


def format_table(rows, columns):
    cells = [[str(c) for c in columns]] + [[_fmt(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    return "\n".join("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in cells) + "\n"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)
