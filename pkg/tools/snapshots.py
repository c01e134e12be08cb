"""Binary snapshot codec and trajectory reload.

Layout (little-endian): <i4 d, <i4 n_box, <f8 L, <f8 alpha, then the
row-major <f8 values, then <f8 tail_amp.
"""
import struct
from pathlib import Path
from typing import List, Tuple

import numpy as np

from models.errors import ScenarioError
from models.fields import TailedField
from models.grid import Grid
from tools.artifacts import read_ndjson

HEADER = struct.Struct("<iidd")
TRAJECTORY_INDEX = "trajectory.ndjson"
SNAPSHOT_DIR = "snapshots"


def snapshot_name(index: int) -> str:
    return f"{SNAPSHOT_DIR}/snap_{index:05d}.bin"


def encode_snapshot(field: TailedField) -> bytes:
    g = field.grid
    header = HEADER.pack(g.d, g.n_box, g.L, field.alpha_tag)
    body = np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")
    return header + body + struct.pack("<d", field.tail_amp)


def decode_snapshot(data: bytes, n_cell: int) -> TailedField:
    if len(data) < HEADER.size + 8:
        raise ScenarioError("truncated snapshot", field_path="snapshot")
    d, n_box, L, alpha = HEADER.unpack_from(data, 0)
    count = n_box ** d
    expected = HEADER.size + 8 * count + 8
    if len(data) != expected:
        raise ScenarioError(f"snapshot holds {len(data)} bytes, layout needs {expected}", field_path="snapshot")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=HEADER.size).reshape((n_box,) * d)
    (tail_amp,) = struct.unpack_from("<d", data, HEADER.size + 8 * count)
    return TailedField(values.astype(float), Grid(d, L, n_box, n_cell), alpha, tail_amp)


def load_snapshots(out_dir: Path, n_cell: int) -> List[Tuple[float, TailedField]]:
    """(t, field) pairs in the order recorded by trajectory.ndjson."""
    out_dir = Path(out_dir)
    index = out_dir / TRAJECTORY_INDEX
    if not index.exists():
        raise ScenarioError(f"no trajectory in {out_dir}; run simulate first", field_path="out_dir")
    snapshots = []
    for row in read_ndjson(index):
        data = (out_dir / row["snapshot"]).read_bytes()
        snapshots.append((float(row["t"]), decode_snapshot(data, n_cell)))
    return snapshots
