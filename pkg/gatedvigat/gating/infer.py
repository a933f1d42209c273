from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gatedvigat.errors import ContractError
from gatedvigat.gating.gates import GateInput, GateParams, GateSchedule, gate_forward
from gatedvigat.head.head import HeadParams, classify, global_path, local_frame, local_video
from gatedvigat.pipeline.cost import CostModel, account_cost
from gatedvigat.pipeline.records import VideoRecord
from gatedvigat.policy.selection import initial_state, select_for_gate


@dataclass(frozen=True)
class ExitRecord:
    video_id: str
    exit_gate: int
    frames_used: Tuple[int, ...]
    scores: np.ndarray
    gate_outputs: Tuple[float, ...]
    cost_units: float
    num_frames: int
    num_objects: int
    labels: Tuple[int, ...] = ()
    tags: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "video_id": self.video_id,
            "exit_gate": self.exit_gate,
            "frames_used": list(self.frames_used),
            "scores": [float(x) for x in self.scores],
            "gate_outputs": [float(x) for x in self.gate_outputs],
            "cost_units": float(self.cost_units),
            "num_frames": self.num_frames,
            "num_objects": self.num_objects,
            "labels": list(self.labels),
            "tags": dict(sorted(self.tags.items())),
        }

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ExitRecord":
        return cls(
            video_id=str(d["video_id"]),
            exit_gate=int(d["exit_gate"]),
            frames_used=tuple(int(i) for i in d["frames_used"]),
            scores=np.asarray(d["scores"], dtype=np.float64),
            gate_outputs=tuple(float(x) for x in d["gate_outputs"]),
            cost_units=float(d["cost_units"]),
            num_frames=int(d["num_frames"]),
            num_objects=int(d["num_objects"]),
            labels=tuple(int(c) for c in d.get("labels", [])),
            tags={str(k): str(v) for k, v in (d.get("tags") or {}).items()},
        )


def infer(
    head: HeadParams,
    gates: Sequence[GateParams],
    schedule: GateSchedule,
    rec: VideoRecord,
    cost_model: Optional[CostModel] = None,
    use_cache: bool = True,
) -> ExitRecord:
    """
    Early-exit 추론.
    - global path는 P 프레임 전체에 한 번
    - 게이트 s마다 선택을 Q^(s)까지 늘리고, 새 프레임의 η만 계산 (use_cache=False면 매번 전부 재계산)
    - 첫 번째로 threshold를 초과한 게이트에서 exit, 마지막 게이트는 무조건 분류
    """
    if len(gates) != schedule.num_gates:
        raise ContractError(f"schedule has {schedule.num_gates} gates but {len(gates)} gate networks were given")

    gs = global_path(head, rec.global_feats)
    state = initial_state(gs.wids, rec.global_feats)
    cache: Dict[int, np.ndarray] = {}
    rhos: List[np.ndarray] = []
    outputs: List[float] = []
    indices: List[int] = []
    exit_gate = schedule.num_gates

    for s, q_s in enumerate(schedule.q, start=1):
        indices, state = select_for_gate(state, q_s)
        if not use_cache:
            cache = {}
        for p in indices:
            if p not in cache:
                cache[p] = local_frame(head, rec.object_feats[p]).eta
        rhos.append(local_video(head, np.vstack([cache[p] for p in indices])))
        out = gate_forward(gates[s - 1], GateInput.build(gs.delta, rhos))
        outputs.append(out)
        if out > schedule.threshold:
            exit_gate = s
            break

    record = ExitRecord(
        video_id=rec.video_id,
        exit_gate=exit_gate,
        frames_used=tuple(indices),
        scores=classify(head, gs.delta, rhos[-1]),
        gate_outputs=tuple(outputs),
        cost_units=0.0,
        num_frames=rec.num_frames,
        num_objects=rec.num_objects,
        labels=tuple(rec.labels),
        tags=dict(rec.tags),
    )
    cost = account_cost(cost_model or CostModel(), record, rec.num_frames, rec.num_objects)
    return replace(record, cost_units=float(cost.total))


def infer_all(
    head: HeadParams,
    gates: Sequence[GateParams],
    schedule: GateSchedule,
    dataset: Sequence[VideoRecord],
    cost_model: Optional[CostModel] = None,
) -> List[ExitRecord]:
    return [infer(head, gates, schedule, rec, cost_model=cost_model) for rec in dataset]
