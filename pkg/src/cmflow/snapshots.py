"""Bit-stable on-disk artifacts: field snapshots, time series, state files.

Snapshot layout: a short text header of ``key: value`` lines closed by an
``end_header`` line, then the raw payload as little-endian float64 in row-
major order (ncomp * nx * ny values).  Payloads round-trip bit for bit.
"""

from __future__ import annotations

import os

import numpy as np

from .diagnostics import TimeSeriesRecord
from .hermite import GridSpec

SNAPSHOT_MAGIC = "cmflow-snapshot v1"
STATE_MAGIC = "cmflow-state-field v1"
_END = "end_header"


def _write_header_and_payload(path, magic, meta, payload):
    payload = np.ascontiguousarray(payload, dtype="<f8")
    lines = [magic]
    for key, value in meta.items():
        value = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{key}: {value}")
    lines.append(_END)
    with open(path, "wb") as fh:
        fh.write(("\n".join(lines) + "\n").encode("utf-8"))
        fh.write(payload.tobytes(order="C"))


def _read_header(fh, magic):
    first = fh.readline().decode("utf-8").rstrip("\n")
    if first != magic:
        raise ValueError(f"bad or unsupported format: expected {magic!r}, got {first!r}")
    meta = {}
    while True:
        raw = fh.readline()
        if not raw:
            raise ValueError("truncated header: no end_header line")
        line = raw.decode("utf-8").rstrip("\n")
        if line == _END:
            return meta
        key, _, value = line.partition(":")
        meta[key.strip()] = value.strip()


def _read_payload(fh, count):
    data = fh.read(count * 8)
    if len(data) != count * 8:
        raise ValueError(f"truncated payload: expected {count} float64 values")
    if fh.read(1):
        raise ValueError("trailing bytes after payload")
    return np.frombuffer(data, dtype="<f8").astype(np.float64, copy=True)


def write_snapshot(path, field_name: str, t: float, payload, grid: GridSpec,
                   problem: str = "", extra: dict | None = None) -> None:
    """Write a scalar (nx, ny) or vector (2, nx, ny) field snapshot."""
    payload = np.asarray(payload, dtype=np.float64)
    if payload.ndim == 2:
        payload = payload[None]
    if payload.ndim != 3 or payload.shape[0] not in (1, 2):
        raise ValueError(f"payload must be (nx, ny) or (2, nx, ny), got {payload.shape}")
    if payload.shape[1:] != grid.shape:
        raise ValueError(f"payload shape {payload.shape[1:]} does not match grid {grid.shape}")
    meta = {
        "problem": problem,
        "field": field_name,
        "t": float(t),
        "nx": grid.nx,
        "ny": grid.ny,
        "lx": grid.lx,
        "ly": grid.ly,
        "ncomp": payload.shape[0],
    }
    if extra:
        meta.update(extra)
    _write_header_and_payload(path, SNAPSHOT_MAGIC, meta, payload)


def read_snapshot(path):
    """Read a snapshot; returns (meta dict, payload of shape (ncomp, nx, ny))."""
    with open(path, "rb") as fh:
        meta = _read_header(fh, SNAPSHOT_MAGIC)
        nx, ny, ncomp = int(meta["nx"]), int(meta["ny"]), int(meta["ncomp"])
        if nx <= 0 or ny <= 0 or ncomp not in (1, 2):
            raise ValueError(f"bad snapshot dimensions: {nx}x{ny}, ncomp={ncomp}")
        flat = _read_payload(fh, ncomp * nx * ny)
    meta["t"] = float(meta.get("t", "nan"))
    return meta, flat.reshape(ncomp, nx, ny)


def write_state_field(path, name: str, data, grid: GridSpec, extra: dict | None = None) -> None:
    """Internal container for solver state: arbitrary plane count per grid."""
    data = np.asarray(data, dtype=np.float64)
    planes = int(np.prod(data.shape[:-2], dtype=int)) if data.ndim > 2 else 1
    if data.shape[-2:] != grid.shape:
        raise ValueError(f"state field shape {data.shape} does not match grid {grid.shape}")
    meta = {"name": name, "planes": planes, "shape": ",".join(str(s) for s in data.shape),
            "nx": grid.nx, "ny": grid.ny, "lx": grid.lx, "ly": grid.ly}
    if extra:
        meta.update(extra)
    _write_header_and_payload(path, STATE_MAGIC, meta, data.reshape(planes, grid.nx, grid.ny))


def read_state_field(path):
    with open(path, "rb") as fh:
        meta = _read_header(fh, STATE_MAGIC)
        shape = tuple(int(s) for s in meta["shape"].split(","))
        flat = _read_payload(fh, int(np.prod(shape, dtype=int)))
    return meta, flat.reshape(shape)


def append_timeseries(path, record: TimeSeriesRecord) -> None:
    """Append one CSV row; writes the header row on first use.

    Columns: t and dt in solver time units, energies/helicity/potential in
    the domain-averaged normalization, max_u and max_j grid maxima,
    n_submaps the current submap count (frozen + live head).
    """
    columns = TimeSeriesRecord.columns()
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8") as fh:
        if fresh:
            fh.write(",".join(columns) + "\n")
        vals = []
        for c in columns:
            v = getattr(record, c)
            vals.append(repr(float(v)) if not isinstance(v, int) else str(v))
        fh.write(",".join(vals) + "\n")


def read_timeseries(path):
    """Read a time-series CSV back into a dict of column -> array."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header != TimeSeriesRecord.columns():
        raise ValueError(f"unexpected time-series columns: {header}")
    data = np.array([[float(v) for v in row] for row in rows]) if rows else \
        np.zeros((0, len(header)))
    return {name: data[:, k] for k, name in enumerate(header)}
