"""Artifact persistence: sorted-key JSON, NDJSON, CSV and the run manifest, all written atomically."""
import csv
import hashlib
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import orjson

from config.config import LIB_VERSION

logger = logging.getLogger(__name__)

JSON_OPTIONS = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_INDENT_2


def _default(obj: Any):
    if hasattr(obj, "item"):
        return obj.item()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(document: Any, indent: bool = True) -> bytes:
    options = JSON_OPTIONS if indent else orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
    return orjson.dumps(document, default=_default, option=options)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class ArtifactWriter:
    """Writes artifacts into out_dir through temp files renamed into place and keeps their hashes."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.hashes: Dict[str, str] = {}

    def write_bytes(self, name: str, data: bytes) -> Path:
        target = self.out_dir / name
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=target.parent)
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(data)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        self.hashes[name] = sha256_bytes(data)
        logger.debug("wrote %s (%d bytes)", target, len(data))
        return target

    def write_json(self, name: str, document: Any) -> Path:
        return self.write_bytes(name, dumps(document) + b"\n")

    def write_ndjson(self, name: str, rows: Iterable[dict]) -> Path:
        return self.write_bytes(name, b"".join(dumps(row, indent=False) + b"\n" for row in rows))

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(v) for v in row])
        return self.write_bytes(name, buffer.getvalue().encode("utf-8"))

    def write_manifest(self, subcommand: str, config_sha256: str, wall_time: float,
                       status: str = "ok", error: Optional[str] = None) -> Path:
        artifacts: List[dict] = [{"name": k, "sha256": v} for k, v in sorted(self.hashes.items())]
        manifest = {
            "subcommand": subcommand,
            "config_sha256": config_sha256,
            "lib_version": LIB_VERSION,
            "artifacts": artifacts,
            "wall_time_s": round(float(wall_time), 3),
            "status": status,
        }
        if error is not None:
            manifest["error"] = error
        data = dumps(manifest) + b"\n"
        target = self.out_dir / "manifest.json"
        fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=self.out_dir)
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, target)
        return target


def _csv_cell(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def read_ndjson(path: Path) -> List[dict]:
    rows = []
    for line in Path(path).read_bytes().splitlines():
        if line.strip():
            rows.append(orjson.loads(line))
    return rows
