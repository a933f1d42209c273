from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from gatedvigat.config import LabelMode
from gatedvigat.errors import EmptyInputError, InvalidInputError
from gatedvigat.gating.gates import GateSchedule
from gatedvigat.gating.infer import ExitRecord
from gatedvigat.pipeline.cost import CostModel, account_cost, baseline_cost, total_cost
from gatedvigat.pipeline.metrics import metric_for, metric_name

PER_GATE_COLUMNS = ["gate", "q", "videos", "avg_frames", "metric"]


@dataclass
class GateStats:
    gate: int
    q: int
    videos: int
    avg_frames: float
    metric: Optional[float]


@dataclass
class RunReport:
    num_videos: int
    metric_name: str
    overall_metric: float
    all_frames_metric: Optional[float]
    avg_frames: float
    avg_exit_gate: float
    per_gate: List[GateStats]
    cost: Dict[str, float]
    per_difficulty: Dict[str, Dict[str, float]] = field(default_factory=dict)
    config_hash: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, ensure_ascii=False)


def _safe_metric(label_mode: LabelMode, scores: List[np.ndarray], labels: List[Sequence[int]]) -> Optional[float]:
    if not scores:
        return None
    try:
        return metric_for(label_mode, np.vstack(scores), labels)
    except EmptyInputError:
        return None


def build_report(
    records: Sequence[ExitRecord],
    schedule: GateSchedule,
    label_mode: LabelMode,
    cost_model: Optional[CostModel] = None,
    all_frames_metric: Optional[float] = None,
    config_hash: str = "",
) -> RunReport:
    """exit record 스트림(데이터셋 순서)을 하나의 RunReport로 모은다."""
    if not records:
        raise EmptyInputError("build_report: no exit records")
    model = cost_model or CostModel()
    n = len(records)

    per_gate: List[GateStats] = []
    for s, q_s in enumerate(schedule.q, start=1):
        members = [r for r in records if r.exit_gate == s]
        per_gate.append(
            GateStats(
                gate=s,
                q=q_s,
                videos=len(members),
                avg_frames=float(np.mean([len(r.frames_used) for r in members])) if members else 0.0,
                metric=_safe_metric(label_mode, [r.scores for r in members], [r.labels for r in members]),
            )
        )

    gated = total_cost(account_cost(model, r, r.num_frames, r.num_objects) for r in records)
    base = total_cost(baseline_cost(model, r.num_frames, r.num_objects) for r in records)
    cost = {
        "gated_heavy": gated.heavy,
        "gated_head": gated.head,
        "gated_gate": gated.gate,
        "gated_total": gated.total,
        "gated_per_video": gated.total / n,
        "baseline_heavy": base.heavy,
        "baseline_total": base.total,
        "baseline_per_video": base.total / n,
        "ratio_heavy": base.heavy / gated.heavy if gated.heavy > 0 else 0.0,
        "ratio_total": base.total / gated.total if gated.total > 0 else 0.0,
    }

    per_difficulty: Dict[str, Dict[str, float]] = {}
    for tag in sorted({r.tags.get("difficulty") for r in records if r.tags.get("difficulty")}):
        members = [r for r in records if r.tags.get("difficulty") == tag]
        per_difficulty[tag] = {
            "videos": float(len(members)),
            "avg_exit_gate": float(np.mean([r.exit_gate for r in members])),
            "avg_frames": float(np.mean([len(r.frames_used) for r in members])),
        }

    report = RunReport(
        num_videos=n,
        metric_name=metric_name(label_mode),
        overall_metric=metric_for(label_mode, np.vstack([r.scores for r in records]), [r.labels for r in records]),
        all_frames_metric=all_frames_metric,
        avg_frames=float(np.mean([len(r.frames_used) for r in records])),
        avg_exit_gate=float(np.mean([r.exit_gate for r in records])),
        per_gate=per_gate,
        cost=cost,
        per_difficulty=per_difficulty,
        config_hash=config_hash,
    )
    logger.info(
        f"[report] videos={n} {report.metric_name}={report.overall_metric:.4f} "
        f"avg_frames={report.avg_frames:.2f} ratio_total={cost['ratio_total']:.2f}"
    )
    return report


def write_report(report: RunReport, out_dir: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json() + "\n", encoding="utf-8")
    with (out / "per_gate.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PER_GATE_COLUMNS)
        for g in report.per_gate:
            writer.writerow([g.gate, g.q, g.videos, f"{g.avg_frames:.6f}", "" if g.metric is None else f"{g.metric:.6f}"])
    return out


def write_exit_records(records: Sequence[ExitRecord], path: str) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps(r.to_dict(), sort_keys=True, ensure_ascii=False) for r in records]
    p.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return p


def read_exit_records(path: str) -> List[ExitRecord]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"exit records not found: {p}")
    records: List[ExitRecord] = []
    with p.open("r", encoding="utf-8") as handle:
        for idx, line in enumerate(handle, 1):
            raw = line.strip()
            if not raw:
                continue
            try:
                records.append(ExitRecord.from_dict(json.loads(raw)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise InvalidInputError(f"Invalid exit record on line {idx}: {exc}") from exc
    return records
