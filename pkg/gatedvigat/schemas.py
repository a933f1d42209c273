from typing import List, Optional

from pydantic import BaseModel, Field


class InferRequest(BaseModel):
    video_id: str = Field(..., description="GVG_DATA_DIR 안의 비디오 id (<video_id>.gvgf)")
    use_cache: bool = Field(True, description="게이트 간 η 캐시 사용 여부")


class InferResponse(BaseModel):
    video_id: str
    exit_gate: int
    frames_used: List[int]
    scores: List[float]
    predicted: List[int] = Field(default_factory=list, description="single: argmax, multi: score > 0.5")
    gate_outputs: List[float]
    cost_units: float


class ExplainRequest(BaseModel):
    video_id: str = Field(..., description="설명할 비디오 id")
    top_frames: int = Field(2, ge=1, le=50, description="정책 순서 상위 프레임 수")
    top_objects: int = Field(3, ge=1, le=100, description="프레임별 φ 상위 객체 수")


class FrameItem(BaseModel):
    frame: int
    objects: List[int] = []
    object_wids: List[float] = []
    names: Optional[List[str]] = None
    boxes: Optional[List[List[float]]] = None


class ExplainResponse(BaseModel):
    video_id: str
    exit_gate: int
    frames: List[FrameItem]
