"""Binary field snapshots and CSV report files.

Snapshot layout ("SGF1"):

* magic bytes ``SGF1``;
* little-endian uint32: version (=1), M1, M2, M3, ncomp, ntimes;
* little-endian float64: L1, L2, L3, rho, t_final;
* payload: ntimes * ncomp * M1 * M2 * M3 little-endian float64 values,
  ordered time-major, then component, then x1, x2, x3 with x3 fastest.

Write-then-read reproduces the in-memory array bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .verify import ReportRow

__all__ = ["FieldSnapshot", "write_snapshot", "read_snapshot", "write_report_csv", "write_manifest"]

_MAGIC = b"SGF1"
_VERSION = 1


@dataclass
class FieldSnapshot:
    """In-memory mirror of one snapshot file."""

    values: np.ndarray  # (ntimes, ncomp, M1, M2, M3)
    lengths: tuple[float, float, float]
    rho: float
    t_final: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype="<f8")
        if self.values.ndim != 5:
            raise ValueError(
                f"snapshot payload must be 5-dimensional, got {self.values.shape}"
            )


def write_snapshot(path, snap: FieldSnapshot) -> None:
    ntimes, ncomp, m1, m2, m3 = snap.values.shape
    header = _MAGIC + struct.pack("<6I", _VERSION, m1, m2, m3, ncomp, ntimes)
    header += struct.pack("<5d", *snap.lengths, snap.rho, snap.t_final)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(snap.values, dtype="<f8").tobytes())


def read_snapshot(path) -> FieldSnapshot:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not a field snapshot (magic {magic!r})")
        version, m1, m2, m3, ncomp, ntimes = struct.unpack("<6I", fh.read(24))
        if version != _VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        l1, l2, l3, rho, t_final = struct.unpack("<5d", fh.read(40))
        count = ntimes * ncomp * m1 * m2 * m3
        payload = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
        extra = fh.read(1)
    if extra:
        raise ValueError("snapshot has trailing bytes; header dims inconsistent")
    values = payload.reshape(ntimes, ncomp, m1, m2, m3)
    return FieldSnapshot(values.copy(), (l1, l2, l3), rho, t_final)


CSV_COLUMNS = [
    "suite", "case", "N", "M", "K", "metric", "value", "normalization", "order_estimate",
]


def write_report_csv(path, rows: list[ReportRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            res = row.resolution
            writer.writerow(
                [
                    row.suite,
                    row.case,
                    res.n_modes if res else "",
                    res.grid_points if res else "",
                    res.time_steps if res else "",
                    row.metric,
                    repr(float(row.value)),
                    "" if row.normalization is None else repr(float(row.normalization)),
                    "" if row.order_estimate is None else repr(float(row.order_estimate)),
                ]
            )


def write_manifest(path, config_text: str, artifacts: list[Path]) -> None:
    """Config echo plus sha256 checksums of every produced artifact."""
    entries = {}
    for art in artifacts:
        digest = hashlib.sha256(Path(art).read_bytes()).hexdigest()
        entries[Path(art).name] = digest
    manifest = {"config": config_text, "artifacts": entries}
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
