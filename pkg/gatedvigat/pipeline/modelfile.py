"""
모델 파일 (.gvgm):
  magic "GVGM" | u16 version | u32 header_len | header(JSON, sort_keys) | float64 LE 배열들(manifest 순서)

header: config_hash, seed, label_mode, feature_dim, num_classes, schedule{q, beta, threshold}, arrays[{name, shape}]
같은 내용이면 바이트 단위로 같은 파일이 나온다 (타임스탬프 없음).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from gatedvigat.errors import ModelFileError
from gatedvigat.gating.gates import GateParams, GateSchedule
from gatedvigat.head.head import HeadParams

MAGIC = b"GVGM"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sHI")


@dataclass(frozen=True)
class ModelBundle:
    head: HeadParams
    gates: Sequence[GateParams]
    schedule: GateSchedule
    config_hash: str
    seed: int = 0

    @property
    def has_gates(self) -> bool:
        return len(self.gates) > 0


def _arrays(bundle: ModelBundle) -> Dict[str, np.ndarray]:
    arrays = {f"head.{k}": v for k, v in bundle.head.flat().items()}
    for g in bundle.gates:
        arrays.update(g.flat())
    return arrays


def encode_model(bundle: ModelBundle) -> bytes:
    arrays = _arrays(bundle)
    names = sorted(arrays)
    header = {
        "config_hash": bundle.config_hash,
        "seed": bundle.seed,
        "label_mode": bundle.head.label_mode,
        "feature_dim": bundle.head.feature_dim,
        "num_classes": bundle.head.num_classes,
        "num_gates": len(bundle.gates),
        "schedule": {
            "q": list(bundle.schedule.q),
            "beta": bundle.schedule.beta,
            "threshold": bundle.schedule.threshold,
        },
        "arrays": [{"name": n, "shape": list(arrays[n].shape)} for n in names],
    }
    raw = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = b"".join(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes() for n in names)
    return _PREFIX.pack(MAGIC, FORMAT_VERSION, len(raw)) + raw + body


def decode_model(data: bytes, source: str = "<bytes>") -> ModelBundle:
    if len(data) < _PREFIX.size:
        raise ModelFileError(f"{source}: truncated model file")
    magic, version, header_len = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise ModelFileError(f"{source}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelFileError(f"{source}: unsupported model format version {version}")
    start = _PREFIX.size
    try:
        header = json.loads(data[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFileError(f"{source}: unreadable header: {exc}") from exc

    off = start + header_len
    arrays: Dict[str, np.ndarray] = {}
    for entry in header.get("arrays", []):
        shape = tuple(int(x) for x in entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        if off + 8 * count > len(data):
            raise ModelFileError(f"{source}: truncated array {entry['name']}")
        arrays[entry["name"]] = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(shape).astype(np.float64)
        off += 8 * count
    if off != len(data):
        raise ModelFileError(f"{source}: {len(data) - off} trailing bytes")

    try:
        head = HeadParams.from_flat(
            {k[len("head.") :]: v for k, v in arrays.items() if k.startswith("head.")},
            label_mode=header["label_mode"],
            seed=int(header.get("seed", 0)),
        )
        sched = header["schedule"]
        schedule = GateSchedule(q=tuple(sched["q"]), beta=float(sched["beta"]), threshold=float(sched["threshold"]))
        gates: List[GateParams] = [GateParams.from_flat(s, arrays) for s in range(1, int(header["num_gates"]) + 1)]
    except KeyError as exc:
        raise ModelFileError(f"{source}: missing entry {exc}") from exc
    return ModelBundle(head=head, gates=gates, schedule=schedule, config_hash=header["config_hash"], seed=int(header.get("seed", 0)))


def save_model(bundle: ModelBundle, path: str) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(encode_model(bundle))
    logger.info(f"[modelfile] saved path={p} gates={len(bundle.gates)} config_hash={bundle.config_hash[:10]}")
    return p


def load_model(path: str, expected_hash: Optional[str] = None) -> ModelBundle:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"model file not found: {p}")
    bundle = decode_model(p.read_bytes(), source=str(p))
    if expected_hash is not None and bundle.config_hash != expected_hash:
        logger.warning(f"[modelfile] config hash mismatch model={bundle.config_hash[:10]} config={expected_hash[:10]}")
    return bundle
