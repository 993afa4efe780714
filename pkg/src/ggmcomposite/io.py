"""File formats: dataset CSV, edge lists and JSON for models, traces and reports.

Every writer goes through :func:`atomic_write` (temporary file in the target
directory, then rename). Floats are written with 17 significant digits in
CSV and with ``repr`` precision in JSON, so a read-back reproduces the exact
binary values.
"""

import csv
import io
import json
import os
import tempfile

import numpy as np

from .explore import ExplorationTrace
from .gauss import Dataset, SpdPair
from .graphs import Graph
from .mle import MleFit

FLOAT_FORMAT = "%.17g"


class FormatError(ValueError):
    """Input file is malformed."""


def atomic_write(path, text):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(x):
    return FLOAT_FORMAT % x


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def dataset_to_csv(data):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(data.column_names)
    for row in data.values:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_dataset(path, data):
    atomic_write(path, dataset_to_csv(data))


def read_dataset(path):
    """Read a header + rows CSV into a :class:`Dataset`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r]
    if not rows:
        raise FormatError(f"{path}: empty CSV")
    header, body = rows[0], rows[1:]
    values = []
    for lineno, row in enumerate(body, 2):
        if len(row) != len(header):
            raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            values.append([float(v) for v in row])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: non-numeric field ({exc})") from None
    try:
        return Dataset(np.array(values, dtype=float).reshape(len(values), len(header)), header)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


def table_to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return str(v)


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


def write_graph(path, graph):
    atomic_write(path, f"# p={graph.p}\n" + graph.to_edge_list())


def read_graph(path, p=None):
    """Read an edge list; ``p`` may come from a ``# p=<int>`` header line."""
    with open(path) as fh:
        text = fh.read()
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#") and "p=" in line:
            try:
                header_p = int(line.split("p=", 1)[1].split()[0])
            except ValueError:
                continue
            if p is not None and p != header_p:
                raise FormatError(f"{path}: graph has p={header_p}, expected {p}")
            p = header_p
            break
    if p is None:
        raise FormatError(f"{path}: vertex count unknown (no '# p=' header)")
    try:
        return Graph.from_edge_list(text, p)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def _matrix(m):
    return [[float(v) for v in row] for row in np.asarray(m)]


def spd_to_dict(model):
    return {"sigma": _matrix(model.sigma), "kappa": _matrix(model.kappa)}


def spd_from_dict(d):
    try:
        return SpdPair(np.array(d["sigma"], dtype=float), np.array(d["kappa"], dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad SpdPair record: {exc}") from None


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=1, allow_nan=True) + "\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def read_spd(path):
    return spd_from_dict(read_json(path))


def trace_to_dict(trace, meta=None):
    return {
        "meta": dict(meta or {}),
        "p": trace.graphs[0].p,
        "graphs": [[list(e) for e in g.sorted_edges()] for g in trace.graphs],
        "fits": [
            {**spd_to_dict(f.model), "iterations": f.iterations, "converged": f.converged,
             "residual": f.residual}
            for f in trace.fits
        ],
        "step_logs": trace.step_logs,
        "validation_rows": [int(i) for i in trace.validation_rows],
        "exploration_rows": [int(i) for i in trace.exploration_rows],
    }


def _step_log(entry):
    entry = dict(entry)
    if "proposals" in entry:  # JSON object keys are strings
        entry["proposals"] = {int(a): int(c) for a, c in entry["proposals"].items()}
    return entry


def trace_from_dict(d):
    try:
        p = int(d["p"])
        graphs = [Graph(p, frozenset(tuple(e) for e in edges)) for edges in d["graphs"]]
        fits = [
            MleFit(spd_from_dict(f), g, int(f["iterations"]), bool(f["converged"]), float(f["residual"]))
            for f, g in zip(d["fits"], graphs)
        ]
        if len(fits) != len(graphs):
            raise ValueError("graphs and fits differ in length")
        return ExplorationTrace(
            graphs, fits, [_step_log(e) for e in d.get("step_logs", [])],
            np.array(d["validation_rows"], dtype=int), np.array(d["exploration_rows"], dtype=int),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad trace record: {exc}") from None


def read_trace(path):
    d = read_json(path)
    return trace_from_dict(d), d.get("meta", {})
