"""Dataset readers/writers and synthetic data.

Formats
-------
fvecs   per vector: little-endian int32 ``d`` then ``d`` float32
bvecs   per vector: little-endian int32 ``d`` then ``d`` uint8
csv     one vector per line, comma separated; with ``labels_last`` the
        final column is an integer class id
triplet header ``n d nnz`` then ``nnz`` lines ``row col value`` (0-based)
"""
import csv
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .data import Dataset
from .errors import DataError, InvalidConfigurationError, ParseError


class FileFormat(str, Enum):
    FVECS = "fvecs"
    BVECS = "bvecs"
    CSV = "csv"
    SPARSE_TRIPLET = "triplet"


_EXTENSIONS = {
    ".fvecs": FileFormat.FVECS,
    ".bvecs": FileFormat.BVECS,
    ".csv": FileFormat.CSV,
    ".triplet": FileFormat.SPARSE_TRIPLET,
}


def infer_format(path, fmt=None):
    if fmt:
        try:
            return FileFormat(str(fmt).lower())
        except ValueError:
            raise InvalidConfigurationError(
                f"unknown format {fmt!r} (choose from {', '.join(f.value for f in FileFormat)})") from None
    ext = Path(path).suffix.lower()
    if ext not in _EXTENSIONS:
        raise InvalidConfigurationError(f"cannot infer format of {path}; pass --format")
    return _EXTENSIONS[ext]


def _read_vecs(path, item_dtype, item_size):
    raw = Path(path).read_bytes()
    if not raw:
        raise ParseError(path, 0, "empty file", unit="byte")
    if len(raw) < 4:
        raise ParseError(path, 0, "truncated dimension header", unit="byte")
    d = int(np.frombuffer(raw[:4], dtype="<i4")[0])
    if d < 1:
        raise ParseError(path, 0, f"invalid dimension {d}", unit="byte")
    rec = 4 + d * item_size
    n, tail = divmod(len(raw), rec)
    buf = np.frombuffer(raw[: n * rec], dtype=np.uint8).reshape(n, rec)
    dims = buf[:, :4].copy().view("<i4").ravel()
    bad = np.flatnonzero(dims != d)
    if bad.size:
        i = int(bad[0])
        raise ParseError(path, i * rec, f"vector {i} declares d={int(dims[i])}, expected {d}", unit="byte")
    if tail:
        raise ParseError(path, n * rec, f"truncated record ({tail} trailing bytes, record size {rec})", unit="byte")
    return buf[:, 4:].copy().view(item_dtype).reshape(n, d)


def read_fvecs(path):
    return _read_vecs(path, "<f4", 4)


def read_bvecs(path):
    return _read_vecs(path, np.uint8, 1)


def write_fvecs(path, X):
    X = np.asarray(X, dtype="<f4")
    n, d = X.shape
    out = np.empty((n, d + 1), dtype="<f4")
    out[:, 0] = np.array([d], dtype="<i4").view("<f4")[0]
    out[:, 1:] = X
    Path(path).write_bytes(out.tobytes())


def write_bvecs(path, X):
    X = np.asarray(X)
    if X.min(initial=0) < 0 or X.max(initial=0) > 255 or not np.all(X == np.round(X)):
        raise DataError("bvecs holds integers in [0, 255] only")
    n, d = X.shape
    out = np.empty((n, d + 4), dtype=np.uint8)
    out[:, :4] = np.frombuffer(np.array([d], dtype="<i4").tobytes(), dtype=np.uint8)
    out[:, 4:] = X.astype(np.uint8)
    Path(path).write_bytes(out.tobytes())


def read_csv(path, labels_last=False):
    rows, labels = [], []
    d = None
    with open(path, newline="") as f:
        for lineno, rec in enumerate(csv.reader(f), start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if labels_last:
                if len(rec) < 2:
                    raise ParseError(path, lineno, "need at least one value and a class column")
                try:
                    labels.append(int(rec[-1]))
                except ValueError:
                    raise ParseError(path, lineno, f"class id {rec[-1]!r} is not an integer") from None
                rec = rec[:-1]
            try:
                vals = [float(c) for c in rec]
            except ValueError as exc:
                raise ParseError(path, lineno, str(exc)) from None
            if d is None:
                d = len(vals)
            elif len(vals) != d:
                raise ParseError(path, lineno, f"expected {d} values, found {len(vals)}")
            rows.append(vals)
    if not rows:
        raise ParseError(path, 1, "no data rows")
    return np.array(rows, dtype=np.float64), (np.array(labels, dtype=np.int64) if labels_last else None)


def write_csv(path, X, labels=None):
    X = np.asarray(X)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        for i, row in enumerate(X):
            vals = [repr(float(v)) for v in row]
            if labels is not None:
                vals.append(str(int(labels[i])))
            w.writerow(vals)


def read_triplet(path):
    with open(path) as f:
        header = f.readline()
        parts = header.split()
        if len(parts) != 3:
            raise ParseError(path, 1, "header must be 'n d nnz'")
        try:
            n, d, nnz = (int(p) for p in parts)
        except ValueError:
            raise ParseError(path, 1, "header values must be integers") from None
        if n < 1 or d < 1 or nnz < 0:
            raise ParseError(path, 1, f"invalid header n={n} d={d} nnz={nnz}")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        count = 0
        lineno = 1
        for lineno, line in enumerate(f, start=2):
            parts = line.split()
            if not parts:
                continue
            if count >= nnz:
                raise ParseError(path, lineno, f"more entries than the declared nnz={nnz}")
            if len(parts) != 3:
                raise ParseError(path, lineno, "expected 'row col value'")
            try:
                r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise ParseError(path, lineno, "malformed entry") from None
            if not 0 <= r < n:
                raise ParseError(path, lineno, f"row {r} outside [0, {n})")
            if not 0 <= c < d:
                raise ParseError(path, lineno, f"column {c} outside [0, {d})")
            rows[count], cols[count], vals[count] = r, c, v
            count += 1
        if count != nnz:
            raise ParseError(path, lineno + 1, f"declared nnz={nnz} but found {count} entries")
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, d))


def write_triplet(path, X):
    X = sp.coo_matrix(X)
    with open(path, "w") as f:
        f.write(f"{X.shape[0]} {X.shape[1]} {X.nnz}\n")
        for r, c, v in zip(X.row, X.col, X.data):
            f.write(f"{r} {c} {float(v)!r}\n")


def read_label_file(path):
    """One integer class id per line."""
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            s = line.strip()
            if not s:
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise ParseError(path, lineno, f"class id {s!r} is not an integer") from None
    return np.array(out, dtype=np.int64)


def load(path, fmt=None, labels_last=False, normalize=False, labels_path=None):
    """Read a dataset from disk into a ``Dataset`` (float64, squared norms precomputed)."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    fmt = infer_format(path, fmt)
    labels = None
    if fmt is FileFormat.FVECS:
        X = read_fvecs(path)
    elif fmt is FileFormat.BVECS:
        X = read_bvecs(path)
    elif fmt is FileFormat.CSV:
        X, labels = read_csv(path, labels_last=labels_last)
    else:
        X = read_triplet(path)
    if labels_last and fmt is not FileFormat.CSV:
        raise InvalidConfigurationError("--labels-last applies to csv input only")
    if labels_path is not None:
        labels = read_label_file(labels_path)
    ds = Dataset(X, labels_true=labels)
    return ds.normalized() if normalize else ds


def generate_synthetic(n, d, k_true, separation, seed):
    """Isotropic unit-variance Gaussian blobs.

    Centers are uniform in ``[0, separation]^d``; class sizes differ by at
    most one and the sample order is shuffled.
    """
    n, d, k_true = int(n), int(d), int(k_true)
    if d < 1 or k_true < 1 or n < k_true:
        raise InvalidConfigurationError(f"need n >= k_true >= 1 and d >= 1 (n={n}, d={d}, k_true={k_true})")
    if separation < 0:
        raise InvalidConfigurationError("separation must be non-negative")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, 1.0, size=(k_true, d)) * float(separation)
    labels = rng.permutation(np.arange(n) % k_true)
    X = centers[labels] + rng.standard_normal((n, d))
    return Dataset(X, labels_true=labels)
