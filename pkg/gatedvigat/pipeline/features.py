"""
특징 파일 I/O.

<video_id>.gvgf (little-endian):
  magic "GVGF" | u16 version | u32 P | u32 F | u32 K | u32 n_labels | u32 labels[n_labels]
  float32 global[P×F]
  frame block × P: float32 doc[K] (내림차순) | float32 objects[K×F]

metadata.jsonl: {"video_id", "object_names", "object_boxes", "tags"} 한 줄에 한 비디오 (선택)
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from gatedvigat.config import LabelMode
from gatedvigat.errors import FeatureFileError, InvalidInputError
from gatedvigat.pipeline.records import VideoRecord, validate_record

MAGIC = b"GVGF"
FORMAT_VERSION = 1
SUFFIX = ".gvgf"
METADATA_FILE = "metadata.jsonl"

_HEADER = struct.Struct("<4sHIIII")
_VIDEO_ID = re.compile(r"^[A-Za-z0-9_.\-]+$")


@dataclass
class ScanResult:
    records: List[VideoRecord] = field(default_factory=list)
    rejections: List[FeatureFileError] = field(default_factory=list)


def encode_record(rec: VideoRecord) -> bytes:
    p, f = rec.global_feats.shape
    k = rec.num_objects
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, p, f, k, len(rec.labels)),
        struct.pack(f"<{len(rec.labels)}I", *rec.labels),
        np.ascontiguousarray(rec.global_feats, dtype="<f4").tobytes(),
    ]
    for t in range(p):
        parts.append(np.ascontiguousarray(rec.object_docs[t], dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(rec.object_feats[t], dtype="<f4").tobytes())
    return b"".join(parts)


def decode_record(data: bytes, path: str, video_id: str) -> VideoRecord:
    def fail(fld: str, detail: str) -> FeatureFileError:
        return FeatureFileError(path, fld, detail, video_id=video_id)

    if len(data) < _HEADER.size:
        raise fail("header", f"truncated header ({len(data)} bytes)")
    magic, version, p, f, k, n_labels = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise fail("magic", f"expected {MAGIC!r}, got {magic!r}")
    if version != FORMAT_VERSION:
        raise fail("version", f"unsupported format version {version}")
    if p < 1 or f < 1 or k < 1:
        raise fail("header", f"P, F, K must be >= 1 (P={p}, F={f}, K={k})")

    off = _HEADER.size
    if len(data) < off + 4 * n_labels:
        raise fail("labels", "truncated label block")
    labels = struct.unpack_from(f"<{n_labels}I", data, off)
    off += 4 * n_labels

    expected = off + 4 * (p * f + p * (k + k * f))
    if len(data) != expected:
        # K가 프레임마다 다르거나 잘린 파일
        raise fail("object_feats", f"size {len(data)} does not match P={p}, F={f}, K={k} (expected {expected})")

    global_feats = np.frombuffer(data, dtype="<f4", count=p * f, offset=off).reshape(p, f).astype(np.float64)
    off += 4 * p * f
    docs = np.empty((p, k))
    objects = np.empty((p, k, f))
    for t in range(p):
        docs[t] = np.frombuffer(data, dtype="<f4", count=k, offset=off)
        off += 4 * k
        objects[t] = np.frombuffer(data, dtype="<f4", count=k * f, offset=off).reshape(k, f)
        off += 4 * k * f

    return VideoRecord(
        video_id=video_id,
        labels=tuple(int(c) for c in labels),
        global_feats=global_feats,
        object_feats=objects,
        object_docs=docs,
    )


def _metadata_line(rec: VideoRecord) -> Optional[Dict[str, Any]]:
    if rec.object_names is None and rec.object_boxes is None and not rec.tags:
        return None
    return {
        "video_id": rec.video_id,
        "object_names": rec.object_names,
        "object_boxes": None if rec.object_boxes is None else np.asarray(rec.object_boxes).tolist(),
        "tags": dict(sorted(rec.tags.items())),
    }


def save_dataset(records: Sequence[VideoRecord], path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    meta_lines: List[str] = []
    for rec in records:
        if not _VIDEO_ID.match(rec.video_id):
            raise InvalidInputError(f"video id {rec.video_id!r} is not a safe file name")
        validate_record(rec, "multi", path=str(out / f"{rec.video_id}{SUFFIX}"))
        (out / f"{rec.video_id}{SUFFIX}").write_bytes(encode_record(rec))
        line = _metadata_line(rec)
        if line is not None:
            meta_lines.append(json.dumps(line, ensure_ascii=False, sort_keys=True))
    meta = out / METADATA_FILE
    if meta_lines:
        meta.write_text("\n".join(meta_lines) + "\n", encoding="utf-8")
    elif meta.exists():
        meta.unlink()
    logger.info(f"[features] saved videos={len(records)} dir={out}")
    return out


def _load_metadata(path: Path) -> Dict[str, Dict[str, Any]]:
    meta: Dict[str, Dict[str, Any]] = {}
    fp = path / METADATA_FILE
    if not fp.exists():
        return meta
    with fp.open("r", encoding="utf-8") as handle:
        for idx, line in enumerate(handle, 1):
            raw = line.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FeatureFileError(str(fp), f"line {idx}", f"invalid JSON: {exc}") from exc
            if "video_id" not in obj:
                raise FeatureFileError(str(fp), f"line {idx}", "missing video_id")
            meta[str(obj["video_id"])] = obj
    return meta


def _attach_metadata(rec: VideoRecord, obj: Optional[Dict[str, Any]]) -> VideoRecord:
    if not obj:
        return rec
    boxes = obj.get("object_boxes")
    return VideoRecord(
        video_id=rec.video_id,
        labels=rec.labels,
        global_feats=rec.global_feats,
        object_feats=rec.object_feats,
        object_docs=rec.object_docs,
        object_names=obj.get("object_names"),
        object_boxes=None if boxes is None else np.asarray(boxes, dtype=np.float64),
        tags={str(k): str(v) for k, v in (obj.get("tags") or {}).items()},
    )


def scan_dataset(path: str, label_mode: LabelMode = "single", num_classes: Optional[int] = None) -> ScanResult:
    """파일별로 검증; 위반 파일은 거부 목록에 모으고 나머지는 계속 읽는다."""
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    result = ScanResult()
    files = sorted(root.glob(f"*{SUFFIX}"))
    if not files:
        logger.warning(f"[features] no {SUFFIX} files in {root}; empty dataset")
        return result

    meta = _load_metadata(root)
    for fp in files:
        video_id = fp.name[: -len(SUFFIX)]
        try:
            rec = decode_record(fp.read_bytes(), str(fp), video_id)
            rec = _attach_metadata(rec, meta.get(video_id))
            result.records.append(validate_record(rec, label_mode, num_classes, path=str(fp)))
        except FeatureFileError as exc:
            logger.warning(f"[features] rejected file={fp.name} field={exc.field} detail={exc.detail}")
            result.rejections.append(exc)
    logger.info(f"[features] loaded videos={len(result.records)} rejected={len(result.rejections)} dir={root}")
    return result


def load_dataset(path: str, label_mode: LabelMode = "single", num_classes: Optional[int] = None) -> List[VideoRecord]:
    return scan_dataset(path, label_mode, num_classes).records


def dataset_shape(records: Sequence[VideoRecord]) -> Tuple[int, int]:
    """(F, K). 비어 있거나 F가 섞여 있으면 에러."""
    if not records:
        raise InvalidInputError("dataset is empty")
    fs = {r.feature_dim for r in records}
    if len(fs) != 1:
        raise InvalidInputError(f"mixed feature dims in dataset: {sorted(fs)}")
    return fs.pop(), records[0].num_objects
