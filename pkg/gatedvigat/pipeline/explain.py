from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from gatedvigat.errors import InvalidInputError
from gatedvigat.gating.infer import ExitRecord
from gatedvigat.head.head import HeadParams, local_frame
from gatedvigat.pipeline.records import VideoRecord


@dataclass
class FrameExplanation:
    frame: int
    objects: List[int] = field(default_factory=list)
    object_wids: List[float] = field(default_factory=list)
    names: Optional[List[str]] = None
    boxes: Optional[List[List[float]]] = None


@dataclass
class Explanation:
    video_id: str
    exit_gate: int
    frames: List[FrameExplanation]

    def to_dict(self) -> Dict:
        return asdict(self)


def rank_objects(obj_wids: np.ndarray) -> np.ndarray:
    """φ 내림차순 객체 순위 (동점이면 DoC 순서, 즉 작은 인덱스 먼저)."""
    return np.lexsort((np.arange(len(obj_wids)), -obj_wids))


def explain_record(head: HeadParams, exit_rec: ExitRecord, rec: VideoRecord, top_frames: int = 2, top_objects: int = 3) -> Explanation:
    if top_frames < 1 or top_objects < 1:
        raise InvalidInputError("top_frames and top_objects must be >= 1")
    frames: List[FrameExplanation] = []
    for p in exit_rec.frames_used[:top_frames]:
        if not rec.has_metadata:
            frames.append(FrameExplanation(frame=int(p)))
            continue
        phi = local_frame(head, rec.object_feats[p]).obj_wids
        order = [int(j) for j in rank_objects(phi)[:top_objects]]
        frames.append(
            FrameExplanation(
                frame=int(p),
                objects=order,
                object_wids=[float(phi[j]) for j in order],
                names=[rec.object_names[p][j] for j in order],
                boxes=None if rec.object_boxes is None else [rec.object_boxes[p][j].tolist() for j in order],
            )
        )
    return Explanation(video_id=exit_rec.video_id, exit_gate=exit_rec.exit_gate, frames=frames)


def export_explanations(
    records: Sequence[ExitRecord],
    dataset: Sequence[VideoRecord],
    head: HeadParams,
    top_frames: int = 2,
    top_objects: int = 3,
    out_path: Optional[str] = None,
) -> List[Explanation]:
    """
    비디오별로 정책이 고른 앞쪽 top_frames 프레임, 프레임별로 φ 상위 top_objects 객체.
    메타데이터(객체 이름)가 없는 비디오는 프레임만 내보낸다.
    """
    by_id = {r.video_id: r for r in dataset}
    out: List[Explanation] = []
    missing = []
    for er in records:
        rec = by_id.get(er.video_id)
        if rec is None:
            raise InvalidInputError(f"exit record for unknown video {er.video_id}")
        if not rec.has_metadata:
            missing.append(er.video_id)
        out.append(explain_record(head, er, rec, top_frames, top_objects))
    if missing:
        logger.warning(f"[explain] no object metadata for {len(missing)} videos; frames-only explanations (first={missing[0]})")

    if out_path is not None:
        p = Path(out_path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text("".join(json.dumps(e.to_dict(), sort_keys=True, ensure_ascii=False) + "\n" for e in out), encoding="utf-8")
    return out
