"""Readers and writers for row streams, sketches and run manifests.

Two input formats are understood:

* MatrixMarket coordinate (``%%MatrixMarket matrix coordinate real general``),
  1-based, with entries grouped by row in non-decreasing row order.
* A plain row-per-line format: ``col:value`` pairs, 0-based, separated by
  spaces.  ``#`` starts a comment; a header comment must carry ``d=<cols>``
  (``n=<rows>`` is optional).  An empty line is an all-zero row.
"""

from __future__ import annotations

import io
import json
import re
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .sparse_core import SparseRow

MM_BANNER = "%%matrixmarket"
PLAIN_BANNER = "# sparse-rows"


class FormatError(ValueError):
    """Malformed input, including rows that arrive out of order."""


class ForwardOnlyReader(io.TextIOBase):
    """Line reader that refuses to seek, so a single pass is guaranteed."""

    def __init__(self, fh):
        self._fh = fh
        self.lines_read = 0

    def readable(self):
        return True

    def seekable(self):
        return False

    def seek(self, *args, **kwargs):
        raise io.UnsupportedOperation("stream input is forward-only")

    def readline(self, size=-1):
        line = self._fh.readline()
        if line:
            self.lines_read += 1
        return line

    def __iter__(self):
        return self

    def __next__(self):
        line = self.readline()
        if not line:
            raise StopIteration
        return line

    def close(self):
        self._fh.close()
        super().close()


@dataclass
class RowStream:
    """Header information plus a lazy, single-use row iterator."""

    d: int
    n: int | None
    rows: Iterator[SparseRow]
    fmt: str


def _make_row(cols, vals, d, where) -> SparseRow:
    idx = np.asarray(cols, dtype=np.int64)
    val = np.asarray(vals, dtype=np.float64)
    order = np.argsort(idx, kind="stable")
    idx, val = idx[order], val[order]
    if len(idx) > 1 and np.any(np.diff(idx) == 0):
        raise FormatError(f"{where}: duplicate column index")
    if len(idx) and (idx[0] < 0 or idx[-1] >= d):
        raise FormatError(f"{where}: column index out of range [0, {d})")
    if not np.all(np.isfinite(val)):
        raise FormatError(f"{where}: non-finite value")
    return SparseRow(idx, val)


def _mm_rows(reader, n, d, nnz, pattern) -> Iterator[SparseRow]:
    current = 0  # 0-based row whose entries are being collected
    cols, vals = [], []
    seen = 0
    for line in reader:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        parts = s.split()
        try:
            i = int(parts[0]) - 1
            j = int(parts[1]) - 1
            v = 1.0 if pattern else float(parts[2])
        except (IndexError, ValueError):
            raise FormatError(f"line {reader.lines_read}: bad entry {s!r}") from None
        if not 0 <= i < n:
            raise FormatError(f"line {reader.lines_read}: row {i + 1} out of range")
        if i < current:
            raise FormatError(
                f"line {reader.lines_read}: row {i + 1} after row {current + 1}; "
                "entries must be grouped by row in non-decreasing order"
            )
        while current < i:
            yield _make_row(cols, vals, d, f"row {current + 1}")
            cols, vals = [], []
            current += 1
        cols.append(j)
        vals.append(v)
        seen += 1
    if seen != nnz:
        raise FormatError(f"header promised {nnz} entries, found {seen}")
    if n:
        yield _make_row(cols, vals, d, f"row {current + 1}")
        current += 1
    while current < n:
        yield SparseRow(np.empty(0, np.int64), np.empty(0))
        current += 1


def _plain_rows(lines, d, start=1) -> Iterator[SparseRow]:
    for lineno, line in enumerate(lines, start=start):
        if line.lstrip().startswith("#"):
            continue
        cols, vals = [], []
        for tok in line.split("#", 1)[0].split():
            try:
                c, v = tok.split(":")
                cols.append(int(c))
                vals.append(float(v))
            except ValueError:
                raise FormatError(f"line {lineno}: bad token {tok!r}") from None
        yield _make_row(cols, vals, d, f"line {lineno}")


_KV = re.compile(r"\b([nd])\s*=\s*(\d+)")


def open_stream(path, d: int | None = None) -> RowStream:
    """Open a row stream for a single forward pass."""
    reader = ForwardOnlyReader(open(path, "r"))
    first = reader.readline()
    if first.lower().startswith(MM_BANNER):
        banner = first.lower().split()
        if len(banner) < 5 or banner[1] != "matrix" or banner[2] != "coordinate":
            raise FormatError("only 'matrix coordinate' MatrixMarket files are supported")
        if banner[4] != "general":
            raise FormatError("only general (non-symmetric) MatrixMarket storage is supported")
        pattern = banner[3] == "pattern"
        if banner[3] not in ("real", "integer", "pattern"):
            raise FormatError(f"unsupported MatrixMarket field {banner[3]!r}")
        for line in reader:
            s = line.strip()
            if s and not s.startswith("%"):
                break
        else:
            raise FormatError("missing MatrixMarket size line")
        try:
            n, cols, nnz = (int(x) for x in s.split()[:3])
        except ValueError:
            raise FormatError(f"bad size line {s!r}") from None
        return RowStream(cols, n, _mm_rows(reader, n, cols, nnz, pattern), "mm")

    header = dict((k, int(v)) for k, v in _KV.findall(first)) if first.startswith("#") else {}
    width = header.get("d", d)
    if width is None:
        raise FormatError("plain row files need a '# sparse-rows n=<rows> d=<cols>' header")

    def rows():
        if first and not first.startswith("#"):
            # the first line was already a data row
            yield from _plain_rows([first], width)
        yield from _plain_rows(reader, width, start=2)

    return RowStream(width, header.get("n"), rows(), "plain")


def write_plain(rows, n: int, d: int, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{PLAIN_BANNER} n={n} d={d}\n")
        for row in rows:
            fh.write(" ".join(f"{c}:{v:.17g}" for c, v in zip(row.indices, row.values)))
            fh.write("\n")


def write_matrix_market(rows, n: int, d: int, path) -> None:
    rows = list(rows)
    nnz = sum(r.nnz for r in rows)
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{n} {d} {nnz}\n")
        for i, row in enumerate(rows, start=1):
            for c, v in zip(row.indices, row.values):
                fh.write(f"{i} {c + 1} {v:.17g}\n")


def write_sketch(B: np.ndarray, path) -> None:
    """Dense CSV, one sketch row per line, 17 significant digits."""
    with open(path, "w") as fh:
        for row in np.atleast_2d(B):
            fh.write(",".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_sketch(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for line in fh:
            s = line.strip()
            if s:
                rows.append([float(x) for x in s.split(",")])
    if not rows:
        raise FormatError(f"{path}: empty sketch file")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise FormatError(f"{path}: ragged sketch rows")
    return np.array(rows, dtype=np.float64)


def manifest_path(output) -> str:
    return f"{output}.manifest.json"


def write_manifest(output, manifest: dict) -> str:
    path = manifest_path(output)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path) -> dict:
    with open(path) as fh:
        return json.load(fh)
