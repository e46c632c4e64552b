"""Readers for the simulator's CSV artifacts, with named schema errors.

Each reader validates the header before touching a single row and
reports the first missing column by name, because the most common
failure mode is pointing a figure kind at the wrong artifact (a curve
CSV where a metrics CSV belongs) and the fix starts with knowing which
column the renderer wanted.
"""

import numpy as np


class SchemaError(Exception):
    """A CSV does not match the producing module's documented header."""


METRICS_COLUMNS = (
    "round",
    "slice",
    "mode",
    "train_loss",
    "mean_recall",
    "mean_log_odds",
    "feasible_fraction",
)
CURVE_COLUMNS = ("top_p", "log_odds")


def _read_rows(path):
    try:
        with open(path) as fh:
            lines = [line for line in fh.read().splitlines() if line.strip()]
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read input ({exc})") from exc
    if not lines:
        raise SchemaError(f"{path}: empty file, expected a CSV header")
    header = [name.strip() for name in lines[0].split(",")]
    return header, [line.split(",") for line in lines[1:]]


def _require(header, needed, path):
    missing = [name for name in needed if name not in header]
    if missing:
        raise SchemaError(f"{path}: missing column '{missing[0]}'")
    return {name: header.index(name) for name in needed}


def _float_or_none(text):
    text = text.strip()
    return None if not text else float(text)


def read_metrics(path):
    """Per-slice training history from a metrics CSV.

    Returns (slices, mode) where slices maps each slice name, in file
    order, to a dict of numpy columns: rounds, train_loss, mean_recall,
    and mean_log_odds (None when the file came from a vanilla run,
    which leaves that column empty).
    """
    header, rows = _read_rows(path)
    at = _require(header, METRICS_COLUMNS, path)
    slices = {}
    modes = set()
    for number, fields in enumerate(rows, start=2):
        if len(fields) != len(header):
            raise SchemaError(
                f"{path}:{number}: expected {len(header)} fields, "
                f"got {len(fields)}"
            )
        name = fields[at["slice"]]
        entry = slices.setdefault(
            name, {"rounds": [], "train_loss": [], "mean_recall": [],
                   "mean_log_odds": []}
        )
        try:
            entry["rounds"].append(int(fields[at["round"]]))
            entry["train_loss"].append(float(fields[at["train_loss"]]))
            entry["mean_recall"].append(float(fields[at["mean_recall"]]))
            entry["mean_log_odds"].append(
                _float_or_none(fields[at["mean_log_odds"]])
            )
        except ValueError as exc:
            raise SchemaError(f"{path}:{number}: {exc}") from exc
        modes.add(fields[at["mode"]])
    if not slices:
        raise SchemaError(f"{path}: no data rows")
    for entry in slices.values():
        entry["rounds"] = np.asarray(entry["rounds"])
        entry["train_loss"] = np.asarray(entry["train_loss"])
        entry["mean_recall"] = np.asarray(entry["mean_recall"])
        if any(v is None for v in entry["mean_log_odds"]):
            entry["mean_log_odds"] = None
        else:
            entry["mean_log_odds"] = np.asarray(entry["mean_log_odds"])
    mode = modes.pop() if len(modes) == 1 else "mixed"
    return slices, mode


def read_curve(path):
    """(top_p, log_odds) arrays from a masked log-odds curve CSV."""
    header, rows = _read_rows(path)
    at = _require(header, CURVE_COLUMNS, path)
    p_values, thetas = [], []
    for number, fields in enumerate(rows, start=2):
        try:
            p_values.append(float(fields[at["top_p"]]))
            thetas.append(float(fields[at["log_odds"]]))
        except (IndexError, ValueError) as exc:
            raise SchemaError(f"{path}:{number}: {exc}") from exc
    if not p_values:
        raise SchemaError(f"{path}: no data rows")
    return np.asarray(p_values), np.asarray(thetas)


def read_correlation(path):
    """(labels, matrix) from a correlation CSV with named rows.

    The header's first cell is empty (it sits above the row names);
    row names must repeat the header labels in order, so a transposed
    or truncated file fails loudly.
    """
    header, rows = _read_rows(path)
    if header[0] != "":
        raise SchemaError(
            f"{path}: expected an empty first header cell above the "
            f"row names, got '{header[0]}'"
        )
    labels = header[1:]
    if len(rows) != len(labels):
        raise SchemaError(
            f"{path}: {len(labels)} labelled columns but {len(rows)} rows"
        )
    matrix = np.empty((len(labels), len(labels)))
    for i, fields in enumerate(rows):
        if fields[0] != labels[i]:
            raise SchemaError(
                f"{path}: row {i + 2} is named '{fields[0]}', "
                f"expected '{labels[i]}'"
            )
        if len(fields) != len(labels) + 1:
            raise SchemaError(
                f"{path}: row {i + 2} has {len(fields) - 1} values, "
                f"expected {len(labels)}"
            )
        try:
            matrix[i] = [float(v) for v in fields[1:]]
        except ValueError as exc:
            raise SchemaError(f"{path}: row {i + 2}: {exc}") from exc
    return labels, matrix
