"""
추상 FLOP 비용 모델 (단위: GFLOP).

기본 상수는 K=50에서
- 프레임당 global 특징(backbone) ≈ 24.4
- 프레임당 local 분기(detector + K개 객체 backbone) ≈ 246 + 50·17.5 = 1121
로 잡아서, P=30/평균 7프레임과 P=120/평균 20프레임의 baseline/gated 비율이
각각 약 4.0배, 5.4배가 되도록 맞춘 값이다.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from gatedvigat.config import CostConfig

if TYPE_CHECKING:
    from gatedvigat.gating.infer import ExitRecord


@dataclass(frozen=True)
class CostModel:
    cost_backbone_frame: float = 24.4
    cost_detector_frame: float = 246.0
    cost_backbone_object: float = 17.5
    cost_head_block: float = 0.05
    cost_gate: float = 0.01

    @classmethod
    def from_config(cls, cc: CostConfig) -> "CostModel":
        return cls(**cc.model_dump())

    def local_frame_cost(self, k: int) -> float:
        return self.cost_detector_frame + k * self.cost_backbone_object


@dataclass(frozen=True)
class CostBreakdown:
    heavy: float
    head: float
    gate: float

    @property
    def total(self) -> float:
        return self.heavy + self.head + self.gate

    def __add__(self, other: "CostBreakdown") -> "CostBreakdown":
        return CostBreakdown(self.heavy + other.heavy, self.head + other.head, self.gate + other.gate)


def gated_cost(model: CostModel, p: int, k: int, frames_used: int, exit_gate: int) -> CostBreakdown:
    # head: ω1 + 사용 프레임마다 ω2 + 최종 ω3
    # gate: 게이트 네트워크 s*개 + exit 전 게이트들의 중간 ρ (ω3)
    heavy = p * model.cost_backbone_frame + frames_used * model.local_frame_cost(k)
    head = model.cost_head_block * (2 + frames_used)
    gate = exit_gate * model.cost_gate + (exit_gate - 1) * model.cost_head_block
    return CostBreakdown(heavy=heavy, head=head, gate=gate)


def account_cost(model: CostModel, record: "ExitRecord", p: int, k: int) -> CostBreakdown:
    return gated_cost(model, p, k, len(record.frames_used), record.exit_gate)


def baseline_cost(model: CostModel, p: int, k: int) -> CostBreakdown:
    """모든 P 프레임에 local 분기를 돌리는 게이트 없는 head."""
    heavy = p * model.cost_backbone_frame + p * model.local_frame_cost(k)
    return CostBreakdown(heavy=heavy, head=model.cost_head_block * (1 + p + 1), gate=0.0)


def total_cost(parts: Iterable[CostBreakdown]) -> CostBreakdown:
    acc = CostBreakdown(0.0, 0.0, 0.0)
    for part in parts:
        acc = acc + part
    return acc
