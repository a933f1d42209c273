from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from gatedvigat.config import LabelMode
from gatedvigat.errors import FeatureFileError


@dataclass(frozen=True)
class VideoRecord:
    """
    비디오 한 개의 사전 추출 특징.
    - global_feats: P×F (프레임별 γ)
    - object_feats: P×K×F (프레임별 객체 특징, DoC 내림차순)
    - object_docs: P×K
    - object_names / object_boxes / tags: 설명(export)용 메타데이터 (선택)
    """

    video_id: str
    labels: Tuple[int, ...]
    global_feats: np.ndarray
    object_feats: np.ndarray
    object_docs: np.ndarray
    object_names: Optional[List[List[str]]] = None
    object_boxes: Optional[np.ndarray] = None
    tags: Dict[str, str] = field(default_factory=dict)

    @property
    def num_frames(self) -> int:
        return int(self.global_feats.shape[0])

    @property
    def feature_dim(self) -> int:
        return int(self.global_feats.shape[1])

    @property
    def num_objects(self) -> int:
        return int(self.object_feats.shape[1])

    @property
    def difficulty(self) -> Optional[str]:
        return self.tags.get("difficulty")

    @property
    def has_metadata(self) -> bool:
        return self.object_names is not None


def validate_record(
    rec: VideoRecord,
    label_mode: LabelMode = "single",
    num_classes: Optional[int] = None,
    path: str = "<memory>",
) -> VideoRecord:
    """불변식 위반은 FeatureFileError(파일, 필드)로 보고."""

    def fail(fld: str, detail: str) -> FeatureFileError:
        return FeatureFileError(path, fld, detail, video_id=rec.video_id)

    g = rec.global_feats
    if g.ndim != 2 or g.shape[0] < 1 or g.shape[1] < 1:
        raise fail("global_feats", f"expected P×F with P,F ≥ 1, got shape={g.shape}")
    p, f = g.shape
    o = rec.object_feats
    if o.ndim != 3:
        raise fail("object_feats", f"expected P×K×F, got shape={o.shape}")
    if o.shape[0] != p or o.shape[2] != f:
        raise fail("object_feats", f"shape {o.shape} does not match P={p}, F={f}")
    k = o.shape[1]
    if k < 1:
        raise fail("object_feats", "K must be ≥ 1")
    if rec.object_docs.shape != (p, k):
        raise fail("object_docs", f"expected {(p, k)}, got shape={rec.object_docs.shape}")

    for name, arr in (("global_feats", g), ("object_feats", o), ("object_docs", rec.object_docs)):
        if not np.all(np.isfinite(arr)):
            raise fail(name, "non-finite values")
    if np.any(np.linalg.norm(g, axis=-1) == 0):
        raise fail("global_feats", "zero-norm frame feature")
    if np.any(np.linalg.norm(o, axis=-1) == 0):
        raise fail("object_feats", "zero-norm object feature")
    if k > 1 and np.any(np.diff(rec.object_docs, axis=1) > 0):
        raise fail("object_docs", "DoC values must be sorted in descending order")

    labels: Sequence[int] = rec.labels
    if not labels:
        raise fail("labels", "at least one label required")
    if len(set(labels)) != len(labels):
        raise fail("labels", f"duplicate labels {list(labels)}")
    if label_mode == "single" and len(labels) != 1:
        raise fail("labels", f"single-label mode needs exactly one label, got {list(labels)}")
    if any(c < 0 for c in labels) or (num_classes is not None and any(c >= num_classes for c in labels)):
        raise fail("labels", f"label out of range for {num_classes} classes: {list(labels)}")

    if rec.object_names is not None:
        if len(rec.object_names) != p or any(len(row) != k for row in rec.object_names):
            raise fail("object_names", "expected P rows of K names")
    if rec.object_boxes is not None and rec.object_boxes.shape != (p, k, 4):
        raise fail("object_boxes", f"expected {(p, k, 4)}, got shape={rec.object_boxes.shape}")
    return rec
