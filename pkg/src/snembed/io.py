"""Readers and writers for the on-disk formats used by the command line."""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .model import SignedNetwork
from .optimizer import FitConfig

EDGE_HEADER = ("i", "j", "sign")


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")


def fmt(x) -> str:
    """Lossless text form of a number (17 significant digits for floats)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_edges(path, Y: SignedNetwork):
    """Edge list: a ``# nodes: n`` line, the header, then ``i<TAB>j<TAB>sign``."""
    lines = [f"# nodes: {Y.n}", "\t".join(EDGE_HEADER)]
    lines += [f"{i}\t{j}\t{s}" for i, j, s in Y.edges()]
    _atomic_write(path, "\n".join(lines) + "\n")


def read_edges(path, n: int | None = None) -> SignedNetwork:
    """Parse an edge list; node count from ``n``, the ``# nodes:`` line, or max id + 1."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ParseError(path, None, "file not found") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(path, None, str(exc)) from None
    declared = None
    records = []
    seen = {}
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("nodes:"):
                try:
                    declared = int(body.split(":", 1)[1])
                except ValueError:
                    raise ParseError(path, lineno, "bad node count") from None
            continue
        fields = line.split("\t") if "\t" in line else line.split()
        if not header_seen:
            header_seen = True
            if tuple(f.strip() for f in fields) == EDGE_HEADER:
                continue
        if len(fields) != 3:
            raise ParseError(path, lineno, f"expected 3 fields, got {len(fields)}")
        try:
            i, j, s = (int(f) for f in fields)
        except ValueError:
            raise ParseError(path, lineno, "non-integer field") from None
        if i < 0 or j < 0:
            raise ParseError(path, lineno, "negative node id")
        if i == j:
            raise ParseError(path, lineno, f"self-edge at node {i}")
        if s not in (-1, 1):
            raise ParseError(path, lineno, f"sign must be -1 or 1, got {s}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ParseError(path, lineno, f"duplicate pair {key} (first on line {seen[key]})")
        seen[key] = lineno
        records.append((key[0], key[1], s))
    size = n if n is not None else declared
    top = max((r[1] for r in records), default=-1) + 1
    if size is None:
        size = top
    if top > size:
        raise ParseError(path, None, f"node id {top - 1} out of range for {size} nodes")
    if size < 1:
        raise ParseError(path, None, "no nodes")
    return SignedNetwork.from_pairs(size, records)


def read_config(path) -> FitConfig:
    """Flat ``key = value`` file with :class:`FitConfig` field names; ``#`` comments."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(path, None, str(exc)) from None
    types = {f.name: f.type for f in dataclasses.fields(FitConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(path, lineno, "expected key = value")
        key, val = (p.strip() for p in line.split("=", 1))
        if key not in types:
            raise ParseError(path, lineno, f"unknown key {key!r}")
        try:
            values[key] = _coerce(types[key], val)
        except ValueError as exc:
            raise ParseError(path, lineno, f"{key}: {exc}") from None
    try:
        return FitConfig(**values)
    except ValueError as exc:
        raise ParseError(path, None, str(exc)) from None


def _coerce(typ, val: str):
    typ = str(typ)
    if val.lower() in ("none", "") and "None" in typ:
        return None
    if typ.startswith("int"):
        return int(val)
    if typ.startswith("float"):
        return float(val)
    if typ.startswith("bool"):
        low = val.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {val!r}")
    if typ.startswith("str"):
        return val
    raise ValueError(f"unsupported field type {typ}")


def write_config(path, config: FitConfig):
    lines = []
    for key, val in config.to_dict().items():
        lines.append(f"{key} = {'none' if val is None else fmt(val) if isinstance(val, (int, float)) else val}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_csv(path, header, rows):
    import io

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, (int, float, np.number)) else v for v in row])
    _atomic_write(path, buf.getvalue())


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_matrix(path, X, prefix="col"):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    header = ["node"] + [f"{prefix}{k}" for k in range(X.shape[1])]
    write_csv(path, header, ([i, *row] for i, row in enumerate(X)))


def read_matrix(path) -> np.ndarray:
    header, rows = read_csv(path)
    if not rows:
        return np.zeros((0, max(len(header) - 1, 0)))
    return np.array([[float(v) for v in r[1:]] for r in rows], dtype=float).reshape(
        len(rows), len(header) - 1
    )


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, Path):
        return str(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")
