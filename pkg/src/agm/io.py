"""Text formats: LibSVM data, QP instances, model vectors and traces."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .solvers import TRACE_COLUMNS, ConvergenceTrace
from .subproblems import BoxHyperplaneQP


class ParseError(ValueError):
    """Malformed input; the message carries the 1-based line number."""

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


def read_libsvm(path, n_features=None):
    """Read ``<label> <idx>:<val> ...`` lines (1-based indices) into dense (X, y)."""
    labels, rows = [], []
    width = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                label = float(tokens[0])
            except ValueError:
                raise ParseError(path, lineno, f"bad label {tokens[0]!r}") from None
            entries = {}
            for tok in tokens[1:]:
                idx, sep, val = tok.partition(":")
                try:
                    i, v = int(idx), float(val)
                except ValueError:
                    raise ParseError(path, lineno, f"bad feature {tok!r}") from None
                if not sep or i < 1:
                    raise ParseError(path, lineno, f"bad feature {tok!r}")
                if not math.isfinite(v):
                    raise ParseError(path, lineno, f"non-finite value in {tok!r}")
                entries[i - 1] = v
                width = max(width, i)
            labels.append(label)
            rows.append(entries)
    if not rows:
        raise ParseError(path, 0, "no examples")
    p = width if n_features is None else n_features
    if width > p:
        raise ParseError(path, 0, f"feature index {width} exceeds {p}")
    X = np.zeros((len(rows), p))
    for r, entries in enumerate(rows):
        for i, v in entries.items():
            X[r, i] = v
    return X, np.asarray(labels)


def write_libsvm(path, X, y):
    with open(path, "w", encoding="utf-8") as fh:
        for label, row in zip(y, X):
            feats = " ".join(f"{i + 1}:{v:.17g}" for i, v in enumerate(row) if v != 0)
            lab = f"{int(label):d}" if float(label).is_integer() else f"{label:.17g}"
            fh.write(f"{lab} {feats}".rstrip() + "\n")


def read_qp(path):
    """QP instance: header ``n z`` then n lines ``d m l u sigma``."""
    with open(path, encoding="utf-8") as fh:
        lines = [(i, ln.split("#", 1)[0].split()) for i, ln in enumerate(fh, start=1)]
    lines = [(i, t) for i, t in lines if t]
    if not lines:
        raise ParseError(path, 0, "empty QP file")
    head_no, head = lines[0]
    try:
        n, z = int(head[0]), float(head[1])
    except (ValueError, IndexError):
        raise ParseError(path, head_no, "header must be 'n z'") from None
    body = lines[1:]
    if len(body) != n:
        raise ParseError(path, head_no, f"expected {n} rows, found {len(body)}")
    data = np.empty((n, 5))
    for r, (lineno, toks) in enumerate(body):
        if len(toks) != 5:
            raise ParseError(path, lineno, "rows must be 'd m l u sigma'")
        try:
            data[r] = [float(t) for t in toks]
        except ValueError:
            raise ParseError(path, lineno, "non-numeric entry") from None
    d, m, l, u, s = data.T
    return BoxHyperplaneQP.build(d, m, l, u, s, z)


def write_qp(path, qp: BoxHyperplaneQP):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{qp.m.shape[0]} {qp.z:.17g}\n")
        for row in zip(qp.d, qp.m, qp.l, qp.u, qp.sigma):
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_vector(path):
    """Whitespace-separated numbers, ignoring ``#`` comments."""
    text = Path(path).read_text(encoding="utf-8")
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        for tok in line.split("#", 1)[0].split():
            try:
                values.append(float(tok))
            except ValueError:
                raise ParseError(path, lineno, f"bad number {tok!r}") from None
    return np.asarray(values)


def write_model(path, w, lam, bias):
    """Header line ``p λ b`` followed by one weight per line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{w.shape[0]} {lam:.17g} {bias:.17g}\n")
        for v in w:
            fh.write(f"{v:.17g}\n")


def read_model(path):
    with open(path, encoding="utf-8") as fh:
        head = fh.readline().split()
        try:
            p, lam, bias = int(head[0]), float(head[1]), float(head[2])
        except (ValueError, IndexError):
            raise ParseError(path, 1, "header must be 'p lambda b'") from None
        w = np.array([float(x) for x in fh.read().split()])
    if w.shape[0] != p:
        raise ParseError(path, 1, f"header says {p} weights, found {w.shape[0]}")
    return w, lam, bias


def _cell(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def write_trace_csv(path, trace: ConvergenceTrace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for row in trace:
            writer.writerow([repr(x) if isinstance(x, float) else x for x in (getattr(row, c) for c in TRACE_COLUMNS)])


def write_trace_jsonl(path, trace: ConvergenceTrace):
    with open(path, "w", encoding="utf-8") as fh:
        for row in trace:
            record = {c: _cell(getattr(row, c)) for c in TRACE_COLUMNS}
            fh.write(json.dumps(record) + "\n")


def read_trace_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [{k: float(v) for k, v in row.items()} for row in reader]
