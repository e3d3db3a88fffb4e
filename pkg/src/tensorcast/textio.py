"""Plain-text file formats.

Tensor (``.txt``)::

    F T N
    x[0,0,0] x[1,0,0] ... x[F-1,0,0]
    x[0,1,0] ...

One line per mode-1 fiber, lines ordered by ``t`` then ``n``, so reading the
values left to right, top to bottom gives the linear order ``f + F*t + F*T*n``.
Masks and ground-truth occupancy use the same layout with ``0``/``1`` values.

Matrix::

    rows cols
    one row per line

Factor set::

    F T N R
    A F R
    <F rows>
    B T R
    <T rows>
    C N R
    <N rows>

Floats are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import csv

import numpy as np

from .cp import FactorSet
from .tensor import as_tensor

_FMT = "%.17g"


def _fmt_row(values, integer=False):
    if integer:
        return " ".join(str(int(v)) for v in values)
    return " ".join(_FMT % v for v in values)


def format_tensor(x, integer=False):
    x = np.asarray(x)
    if x.ndim != 3:
        raise ValueError(f"expected a 3-way array, got shape {x.shape}")
    F, T, N = x.shape
    lines = [f"{F} {T} {N}"]
    fibers = np.reshape(x, (F, T * N), order="F").T
    lines += [_fmt_row(row, integer) for row in fibers]
    return "\n".join(lines) + "\n"


def parse_tensor(text, dtype=np.float64):
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError("tensor file is missing its 'F T N' header")
    dims = tuple(int(t) for t in tokens[:3])
    if min(dims) < 1:
        raise ValueError(f"bad tensor dimensions {dims}")
    values = tokens[3:]
    if len(values) != dims[0] * dims[1] * dims[2]:
        raise ValueError(f"expected {dims[0] * dims[1] * dims[2]} values for {dims}, found {len(values)}")
    return np.array(values, dtype=np.float64).reshape(dims, order="F").astype(dtype)


def write_tensor(path, x):
    with open(path, "w") as fh:
        fh.write(format_tensor(as_tensor(x)))


def read_tensor(path):
    with open(path) as fh:
        return parse_tensor(fh.read())


def write_mask(path, mask):
    with open(path, "w") as fh:
        fh.write(format_tensor(np.asarray(mask, dtype=np.int8), integer=True))


def read_mask(path):
    with open(path) as fh:
        arr = parse_tensor(fh.read())
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{path}: mask entries must be 0 or 1")
    return arr.astype(bool)


def format_matrix(m):
    m = np.atleast_2d(np.asarray(m, dtype=np.float64))
    lines = [f"{m.shape[0]} {m.shape[1]}"] + [_fmt_row(row) for row in m]
    return "\n".join(lines) + "\n"


def parse_matrix(text):
    tokens = text.split()
    rows, cols = int(tokens[0]), int(tokens[1])
    values = tokens[2:]
    if len(values) != rows * cols:
        raise ValueError(f"expected {rows * cols} matrix values, found {len(values)}")
    return np.array(values, dtype=np.float64).reshape(rows, cols)


def format_factors(fs):
    F, T, N = fs.dims
    parts = [f"{F} {T} {N} {fs.rank}\n"]
    for label, mat in zip("ABC", fs):
        parts.append(f"{label} {format_matrix(mat)}")
    return "".join(parts)


def parse_factors(text):
    lines = text.splitlines()
    F, T, N, R = (int(v) for v in lines[0].split())
    pos = 1
    mats = {}
    for label, rows in zip("ABC", (F, T, N)):
        head = lines[pos].split()
        if head[0] != label or int(head[1]) != rows or int(head[2]) != R:
            raise ValueError(f"expected block header '{label} {rows} {R}', got {lines[pos]!r}")
        body = lines[pos + 1:pos + 1 + rows]
        mats[label] = np.array([row.split() for row in body], dtype=np.float64).reshape(rows, R)
        pos += 1 + rows
    return FactorSet(mats["A"], mats["B"], mats["C"])


def write_factors(path, fs):
    with open(path, "w") as fh:
        fh.write(format_factors(fs))


def read_factors(path):
    with open(path) as fh:
        return parse_factors(fh.read())


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (_FMT % v if isinstance(v, float) else v) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
