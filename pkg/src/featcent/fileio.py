"""Bit-exact persistence.

Binary embedding layout (all integers little-endian):

    offset  size  field
    0       4     magic, ASCII "P2ID"
    4       4     version, u32 = 1
    8       8     n, u64
    16      8     d, u64
    24      n*d*4 features, float32 LE, row-major

A sidecar at ``path + ".meta.jsonl"`` carries one JSON object per row, in
row order: {"id": int, "cam": int|null, "name": str|null}. Auxiliary
bundles reuse the same binary layout with n*M rows and an extra "aux_m"
field per metadata line. Keypoints are JSON Lines:
{"name": str, "keypoints": [[x, y, c] * 18]}.

Readers reject rather than repair: every failure carries a byte offset or
line number.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .centralize import AuxFeatureSet
from .cleanse import PoseRecord
from .core import FeatureSet
from .errors import (
    BadKeypointCount,
    BadMagic,
    HeaderMismatch,
    MetadataLengthMismatch,
    Misalignment,
    ParseError,
    RaggedRow,
    TruncatedFile,
    VersionUnsupported,
)

MAGIC = b"P2ID"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def _meta_path(path) -> Path:
    return Path(str(path) + ".meta.jsonl")


def _write_binary(path, features: np.ndarray):
    n, d = features.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, d))
        fh.write(np.ascontiguousarray(features, dtype="<f4").tobytes())


def _read_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{path}: file shorter than header ({len(raw)} < {_HEADER.size} bytes)")
    magic, version, n, d = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r} at byte 0")
    if version != VERSION:
        raise VersionUnsupported(f"{path}: version {version} at byte 4, expected {VERSION}")
    expected = _HEADER.size + n * d * 4
    if len(raw) != expected:
        raise TruncatedFile(f"{path}: expected {expected} bytes, got {len(raw)} (payload at byte {_HEADER.size})")
    return np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, d).copy()


def _read_meta(path, n: int) -> list[dict]:
    meta_path = _meta_path(path)
    records = []
    with open(meta_path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"{meta_path}: invalid JSON at line {lineno}: {exc}") from exc
    if len(records) != n:
        raise MetadataLengthMismatch(f"{meta_path}: {len(records)} metadata lines for n={n}")
    return records


def write_embeddings(fset: FeatureSet, path):
    """Write the binary feature file and its metadata sidecar."""
    _write_binary(path, fset.features)
    with open(_meta_path(path), "w", encoding="utf-8") as fh:
        for i in range(fset.n):
            fh.write(json.dumps({
                "id": int(fset.ids[i]),
                "cam": None if fset.cams is None else int(fset.cams[i]),
                "name": None if fset.names is None else fset.names[i],
            }) + "\n")


def read_embeddings(path, normalized: bool = False) -> FeatureSet:
    features = _read_binary(path)
    records = _read_meta(path, features.shape[0])
    ids = np.array([r.get("id", -1) for r in records], dtype=np.int64)
    cam_vals = [r.get("cam") for r in records]
    cams = None if all(c is None for c in cam_vals) else np.array(
        [-1 if c is None else int(c) for c in cam_vals], dtype=np.int64
    )
    name_vals = [r.get("name") for r in records]
    names = None if all(v is None for v in name_vals) else tuple(str(v) for v in name_vals)
    return FeatureSet(features, ids, cams, names, normalized=normalized)


def read_csv_embeddings(path) -> FeatureSet:
    """Parse "id,cam,f0,...,f{d-1}" CSV; values round-trip through float32."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        cols = header.split(",")
        d = len(cols) - 2
        if d < 1 or cols[:2] != ["id", "cam"] or cols[2:] != [f"f{i}" for i in range(d)]:
            raise HeaderMismatch(f"{path}: header {header!r} is not 'id,cam,f0,...'")
        ids, cams, rows = [], [], []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(",")
            if len(parts) != d + 2:
                raise RaggedRow(lineno, f"{path}: line {lineno} has {len(parts)} fields, expected {d + 2}")
            try:
                ids.append(int(parts[0]))
                cams.append(None if parts[1] == "" else int(parts[1]))
                rows.append(np.array(parts[2:], dtype=np.float32))
            except ValueError as exc:
                raise ParseError(lineno, f"{path}: line {lineno}: {exc}") from exc
    if not rows:
        raise ParseError(1, f"{path}: no data rows")
    features = np.stack(rows)
    cam_arr = None if all(c is None for c in cams) else np.array(
        [-1 if c is None else c for c in cams], dtype=np.int64
    )
    return FeatureSet(features, np.array(ids, dtype=np.int64), cam_arr)


def write_aux(aux: AuxFeatureSet, fset: FeatureSet, path):
    """Write an auxiliary bundle: n*M rows, sample-major, with per-row aux_m."""
    n, m, d = aux.aux.shape
    if n != fset.n:
        raise Misalignment(f"aux n={n} does not match set n={fset.n}")
    _write_binary(path, aux.aux.reshape(n * m, d))
    with open(_meta_path(path), "w", encoding="utf-8") as fh:
        for i in range(n):
            for j in range(m):
                fh.write(json.dumps({
                    "name": None if fset.names is None else fset.names[i],
                    "aux_m": j,
                    "source": aux.source_tag,
                }) + "\n")


def read_aux(path) -> AuxFeatureSet:
    """Read an auxiliary bundle written by :func:`write_aux`."""
    flat = _read_binary(path)
    records = _read_meta(path, flat.shape[0])
    ms = np.array([r.get("aux_m", -1) for r in records], dtype=np.int64)
    if flat.shape[0] == 0:
        return AuxFeatureSet(flat.reshape(0, 0, flat.shape[1]))
    m = int(ms.max()) + 1
    if m < 1 or flat.shape[0] % m != 0:
        raise Misalignment(f"{path}: {flat.shape[0]} rows do not group into bundles of M={m}")
    n = flat.shape[0] // m
    if not np.array_equal(ms, np.tile(np.arange(m), n)):
        first = records[int(np.argmax(ms != np.tile(np.arange(m), n)))]
        raise Misalignment(f"{path}: aux_m sequence broken near sample {first.get('name')!r}")
    tag = records[0].get("source", "unknown")
    return AuxFeatureSet(flat.reshape(n, m, flat.shape[1]), source_tag=str(tag))


def read_keypoints(path) -> list[PoseRecord]:
    """Read pose records from JSON Lines."""
    poses = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"{path}: invalid JSON at line {lineno}: {exc}") from exc
            name = str(rec.get("name", f"line{lineno}"))
            kps = rec.get("keypoints", [])
            if len(kps) != 18 or any(len(t) != 3 for t in kps):
                raise BadKeypointCount(name, len(kps))
            poses.append(PoseRecord(name, np.asarray(kps, dtype=np.float64)))
    return poses
