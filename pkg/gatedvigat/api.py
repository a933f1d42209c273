from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path
from typing import Dict

import numpy as np
from dotenv import load_dotenv
from fastapi import APIRouter, Depends, HTTPException
from loguru import logger

from gatedvigat.config import RunConfig, config_hash, load_config
from gatedvigat.errors import GvgError
from gatedvigat.gating.infer import ExitRecord, infer
from gatedvigat.pipeline.cost import CostModel
from gatedvigat.pipeline.explain import explain_record
from gatedvigat.pipeline.features import load_dataset
from gatedvigat.pipeline.modelfile import ModelBundle, load_model
from gatedvigat.pipeline.records import VideoRecord
from gatedvigat.schemas import ExplainRequest, ExplainResponse, FrameItem, InferRequest, InferResponse

load_dotenv()

router = APIRouter()

TRACE_FILE = "infer.jsonl"
_trace_lock = threading.Lock()


@dataclass
class ServingState:
    bundle: ModelBundle
    videos: Dict[str, VideoRecord]
    config: RunConfig

    @property
    def cost_model(self) -> CostModel:
        return CostModel.from_config(self.config.cost)


@lru_cache(maxsize=1)
def get_serving_state() -> ServingState:
    model_path = os.getenv("GVG_MODEL_PATH", "./data/model.gvgm")
    data_dir = os.getenv("GVG_DATA_DIR", "./data/features")
    cfg = load_config(os.getenv("GVG_CONFIG_PATH") or None)
    bundle = load_model(model_path, expected_hash=config_hash(cfg))
    videos = {r.video_id: r for r in load_dataset(data_dir, label_mode=cfg.label_mode, num_classes=cfg.num_classes)}
    logger.info(f"[serve] model={model_path} videos={len(videos)} gates={len(bundle.gates)}")
    return ServingState(bundle=bundle, videos=videos, config=cfg)


def _video(state: ServingState, video_id: str) -> VideoRecord:
    rec = state.videos.get(video_id)
    if rec is None:
        raise HTTPException(status_code=404, detail=f"unknown video_id: {video_id}")
    return rec


def _infer(state: ServingState, rec: VideoRecord, use_cache: bool = True) -> ExitRecord:
    b = state.bundle
    if not b.has_gates:
        raise HTTPException(status_code=400, detail="model has no trained gates")
    try:
        return infer(b.head, b.gates, b.schedule, rec, cost_model=state.cost_model, use_cache=use_cache)
    except GvgError as e:
        raise HTTPException(status_code=400, detail=e.to_dict()) from e


def trace_exit(er: ExitRecord) -> None:
    """TRACE_ENABLE이 켜져 있으면 서빙 추론 한 건을 TRACE_DIR/infer.jsonl 끝에 붙인다."""
    if os.getenv("TRACE_ENABLE", "1").strip().lower() not in ("1", "true"):
        return
    out = Path(os.getenv("TRACE_DIR", "./data/traces"))
    out.mkdir(parents=True, exist_ok=True)
    row = {
        "ts": datetime.now(timezone.utc).isoformat(),
        "video_id": er.video_id,
        "exit_gate": er.exit_gate,
        "frames": len(er.frames_used),
        "cost_units": er.cost_units,
    }
    with _trace_lock, (out / TRACE_FILE).open("a", encoding="utf-8") as handle:
        handle.write(json.dumps(row, ensure_ascii=False) + "\n")


def _predicted(scores: np.ndarray, label_mode: str) -> list:
    if label_mode == "multi":
        return [int(i) for i in np.flatnonzero(scores > 0.5)]
    return [int(np.argmax(scores))]


@router.get("/health")
def health():
    return {"ok": True}


@router.post("/infer", response_model=InferResponse)
def infer_video(req: InferRequest, state: ServingState = Depends(get_serving_state)):
    rec = _video(state, req.video_id)
    er = _infer(state, rec, use_cache=req.use_cache)
    trace_exit(er)
    return InferResponse(
        video_id=er.video_id,
        exit_gate=er.exit_gate,
        frames_used=list(er.frames_used),
        scores=[float(x) for x in er.scores],
        predicted=_predicted(er.scores, state.bundle.head.label_mode),
        gate_outputs=list(er.gate_outputs),
        cost_units=er.cost_units,
    )


@router.post("/explain", response_model=ExplainResponse)
def explain_video(req: ExplainRequest, state: ServingState = Depends(get_serving_state)):
    rec = _video(state, req.video_id)
    er = _infer(state, rec)
    exp = explain_record(state.bundle.head, er, rec, req.top_frames, req.top_objects)
    return ExplainResponse(
        video_id=exp.video_id,
        exit_gate=exp.exit_gate,
        frames=[FrameItem(**vars(f)) for f in exp.frames],
    )
