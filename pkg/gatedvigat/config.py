from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from gatedvigat.errors import InvalidInputError

LabelMode = Literal["single", "multi"]
OptimizerName = Literal["sgd", "adam"]
PolicyName = Literal["random", "wid_topk", "random_local", "wid_local", "proposed", "gated"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class HeadConfig(_Strict):
    epochs: int = Field(30, ge=1, description="head 학습 epoch 수")
    lr: float = Field(1e-2, gt=0, description="초기 learning rate")
    lr_milestones: List[int] = Field(default_factory=list, description="lr 감쇠 epoch(0-based)")
    lr_gamma: float = Field(0.1, gt=0, le=1)
    batch_size: int = Field(16, ge=1)
    optimizer: OptimizerName = "adam"


class GateConfig(_Strict):
    schedule: List[int] = Field(default_factory=lambda: [2, 4, 6, 8, 10], description="gate별 프레임 수 Q^(s)")
    beta: float = Field(0.3, gt=0, description="epsilon^(s) = beta * exp(s/2)")
    threshold: float = Field(0.5, ge=0, lt=1, description="gate exit 임계값(초과 시 exit)")
    epochs: int = Field(40, ge=1)
    lr: float = Field(1e-4, gt=0)
    lr_milestones: List[int] = Field(default_factory=lambda: [16, 35])
    lr_gamma: float = Field(0.1, gt=0, le=1)
    batch_size: int = Field(32, ge=1)
    optimizer: OptimizerName = "adam"

    @field_validator("schedule")
    @classmethod
    def _ascending(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("schedule must contain at least one gate")
        if any(q < 1 for q in v):
            raise ValueError("schedule counts must be >= 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("schedule must be strictly ascending")
        return v


class SynthConfig(_Strict):
    num_videos: int = Field(400, ge=1)
    num_frames: int = Field(30, ge=1)
    difficulty_mix: float = Field(0.3, ge=0, le=1, description="hard 비디오 비율")
    event_amplitude: float = Field(1.5, gt=0)
    object_amplitude: float = Field(2.0, gt=0)
    noise: float = Field(0.1, ge=0)
    second_label_prob: float = Field(0.3, ge=0, le=1, description="multi 모드에서 두 번째 라벨 확률")


class CostConfig(_Strict):
    # GFLOP 단위. 기본값은 ViGAT 대비 비율(×4, ×5.5)에 맞춘 값
    cost_backbone_frame: float = Field(24.4, ge=0)
    cost_detector_frame: float = Field(246.0, ge=0)
    cost_backbone_object: float = Field(17.5, ge=0)
    cost_head_block: float = Field(0.05, ge=0)
    cost_gate: float = Field(0.01, ge=0)


class AblationConfig(_Strict):
    policies: List[PolicyName] = Field(
        default_factory=lambda: ["random", "wid_topk", "random_local", "wid_local", "proposed", "gated"]
    )
    budgets: List[int] = Field(default_factory=lambda: [10, 20, 30])
    beta_grid: List[float] = Field(default_factory=list, description="gated 행의 beta sweep 후보(비우면 주어진 gate 사용)")
    frame_tolerance: float = Field(1.0, ge=0)

    @field_validator("budgets")
    @classmethod
    def _positive(cls, v: List[int]) -> List[int]:
        if any(b < 1 for b in v):
            raise ValueError("ablation budgets must be >= 1")
        return v


class ExplainConfig(_Strict):
    top_frames: int = Field(2, ge=1)
    top_objects: int = Field(3, ge=1)


class RunConfig(_Strict):
    seed: int = Field(0, ge=0)
    label_mode: LabelMode = "single"
    num_classes: int = Field(4, ge=1, description="G")
    feature_dim: int = Field(64, ge=1, description="F")
    num_objects: int = Field(8, ge=1, description="K")
    head: HeadConfig = Field(default_factory=HeadConfig)
    gates: GateConfig = Field(default_factory=GateConfig)
    synth: SynthConfig = Field(default_factory=SynthConfig)
    cost: CostConfig = Field(default_factory=CostConfig)
    ablation: AblationConfig = Field(default_factory=AblationConfig)
    explain: ExplainConfig = Field(default_factory=ExplainConfig)


def load_config(path: Optional[str] = None) -> RunConfig:
    if not path:
        return RunConfig()
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config not found: {p}")
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"Invalid JSON in {p}: {exc}") from exc
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise InvalidInputError(f"Invalid config {p}: {exc}") from exc


def canonical_json(cfg: RunConfig) -> str:
    return json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha1(canonical_json(cfg).encode("utf-8")).hexdigest()
