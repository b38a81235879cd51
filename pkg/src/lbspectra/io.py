"""File formats: CSV tables, matrix dumps and gridded mode blocks."""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MATRIX_MAGIC = b"LBHM"
MATRIX_VERSION = 1
# magic, version, N, V0, 16-byte geometry tag; little-endian, then N*N float64 row-major
_HEADER = struct.Struct("<4sIQd16s")


def fmt(x) -> str:
    """17 significant digits: enough for an exact float64 round trip."""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.17g}"


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    lines += [",".join(fmt(v) for v in row) for row in rows]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_matrix_binary(path, entries: np.ndarray, V0: float, geometry_tag: str) -> Path:
    A = np.ascontiguousarray(entries, dtype="<f8")
    n = A.shape[0]
    tag = geometry_tag.encode("ascii")[:16].ljust(16, b"\0")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MATRIX_MAGIC, MATRIX_VERSION, n, float(V0), tag))
        fh.write(A.tobytes(order="C"))
    return path


def read_matrix_binary(path) -> tuple[np.ndarray, float, str]:
    with open(path, "rb") as fh:
        magic, version, n, V0, tag = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MATRIX_MAGIC or version != MATRIX_VERSION:
            raise ValueError(f"{path} is not a version-{MATRIX_VERSION} matrix dump")
        A = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n)
    return A.copy(), V0, tag.rstrip(b"\0").decode("ascii")


def write_matrix_csv(path, entries: np.ndarray) -> Path:
    return write_csv(path, [f"c{j}" for j in range(entries.shape[1])], entries.tolist())


def write_mode(directory, j: int, columns: dict[str, np.ndarray], shape, meta: dict) -> tuple[Path, Path]:
    """Write mode ``j`` as a point CSV and a gridded JSON block with metadata."""
    directory = Path(directory)
    names = list(columns)
    rows = zip(*(columns[k] for k in names))
    csv_path = write_csv(directory / f"mode_{j:03d}.csv", names, rows)
    values = np.asarray(columns["value"]).reshape(shape)
    block = dict(meta, mode=j, shape=list(shape), values=[[float(v) for v in r] for r in values])
    json_path = write_json(directory / f"mode_{j:03d}.json", block)
    return csv_path, json_path
