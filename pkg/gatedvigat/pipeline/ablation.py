"""
프레임 선택 정책 비교표 (정책 × 프레임 예산 Θ).

- random / wid_topk: 선택된 Θ 프레임만으로 global(δ)과 local(ρ) 모두 계산
- random_local / wid_local / proposed: δ는 P 프레임 전체, ρ는 선택된 Θ 프레임
- gated: beta를 sweep해서 평균 사용 프레임이 Θ에 가장 가까운 게이트를 고른다
- frame_exit: 외부 정책이라 빈 칸으로 남긴다
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from gatedvigat.config import RunConfig
from gatedvigat.errors import InvalidInputError
from gatedvigat.gating.gates import GateParams, GateSchedule
from gatedvigat.gating.infer import infer
from gatedvigat.gating.train import GateTrainingItem, fit_gates, precompute_gate_inputs
from gatedvigat.head.head import HeadParams, classify, global_path, local_frame, local_video
from gatedvigat.pipeline.cost import CostModel
from gatedvigat.pipeline.metrics import metric_for
from gatedvigat.pipeline.records import VideoRecord
from gatedvigat.policy.baselines import PolicyKind, PolicyVariant, baseline_select

GATED = "gated"
FRAME_EXIT = "frame_exit"


@dataclass
class AblationCell:
    policy: str
    budget: int
    metric: Optional[float]
    avg_frames: Optional[float]
    beta: Optional[float] = None
    within_tolerance: Optional[bool] = None


@dataclass
class AblationTable:
    budgets: List[int]
    cells: List[AblationCell] = field(default_factory=list)

    def policies(self) -> List[str]:
        seen: List[str] = []
        for c in self.cells:
            if c.policy not in seen:
                seen.append(c.policy)
        return seen

    def get(self, policy: str, budget: int) -> AblationCell:
        for c in self.cells:
            if c.policy == policy and c.budget == budget:
                return c
        raise KeyError(f"no cell for policy={policy} budget={budget}")

    def to_dict(self) -> Dict:
        return {"budgets": list(self.budgets), "cells": [asdict(c) for c in self.cells]}


def policy_scores(head: HeadParams, rec: VideoRecord, kind: PolicyKind, theta: int, seed: int) -> Tuple[np.ndarray, List[int]]:
    gs = global_path(head, rec.global_feats)
    frames = baseline_select(kind, gs.wids, rec.global_feats, theta, seed=seed)
    delta = gs.delta if kind.global_on_all else global_path(head, rec.global_feats[frames]).delta
    etas = np.vstack([local_frame(head, rec.object_feats[p]).eta for p in frames])
    return classify(head, delta, local_video(head, etas)), frames


def _policy_cell(head: HeadParams, dataset: Sequence[VideoRecord], variant: PolicyVariant, budget: int, config: RunConfig) -> AblationCell:
    kind = PolicyKind(variant=variant, budget=budget)
    scores, used = [], []
    clamped = 0
    for i, rec in enumerate(dataset):
        theta = min(budget, rec.num_frames)
        clamped += int(theta < budget)
        s, frames = policy_scores(head, rec, kind, theta, seed=config.seed + i)
        scores.append(s)
        used.append(len(frames))
    if clamped:
        logger.warning(f"[ablation] policy={variant.value} budget={budget} clamped to P for {clamped} videos")
    metric = metric_for(config.label_mode, np.vstack(scores), [r.labels for r in dataset])
    return AblationCell(policy=variant.value, budget=budget, metric=metric, avg_frames=float(np.mean(used)))


def _gated_runs(
    head: HeadParams,
    gates: Sequence[GateParams],
    dataset: Sequence[VideoRecord],
    schedule: GateSchedule,
    config: RunConfig,
    items: Optional[Sequence[GateTrainingItem]],
) -> List[Tuple[Optional[float], float, float]]:
    """(beta, avg_frames, metric) 목록. beta_grid가 비면 주어진 게이트 한 번."""
    cost_model = CostModel.from_config(config.cost)
    grid = list(config.ablation.beta_grid)
    candidates: List[Tuple[Optional[float], Sequence[GateParams], GateSchedule]] = []
    if not grid:
        candidates.append((None, gates, schedule))
    else:
        if items is None:
            items = precompute_gate_inputs(head, dataset, schedule)
        for beta in grid:
            sched_b = schedule.with_beta(beta)
            candidates.append((beta, fit_gates(items, sched_b, config, head.feature_dim), sched_b))

    runs = []
    for beta, gs, sched in candidates:
        records = [infer(head, gs, sched, rec, cost_model=cost_model) for rec in dataset]
        avg = float(np.mean([len(r.frames_used) for r in records]))
        metric = metric_for(config.label_mode, np.vstack([r.scores for r in records]), [r.labels for r in dataset])
        logger.info(f"[ablation] gated beta={beta} avg_frames={avg:.2f} metric={metric:.4f}")
        runs.append((beta, avg, metric))
    return runs


def ablation_run(
    dataset: Sequence[VideoRecord],
    head: HeadParams,
    gates: Sequence[GateParams],
    schedule: GateSchedule,
    config: RunConfig,
    policies: Optional[Sequence[str]] = None,
    budgets: Optional[Sequence[int]] = None,
    items: Optional[Sequence[GateTrainingItem]] = None,
) -> AblationTable:
    policies = list(policies if policies is not None else config.ablation.policies)
    budgets = [int(b) for b in (budgets if budgets is not None else config.ablation.budgets)]
    if any(b < 1 for b in budgets):
        raise InvalidInputError(f"ablation budgets must be >= 1, got {budgets}")
    table = AblationTable(budgets=budgets)

    for name in policies:
        if name == GATED:
            runs = _gated_runs(head, gates, dataset, schedule, config, items)
            for budget in budgets:
                # 동률이면 grid 앞쪽 beta
                beta, avg, metric = min(runs, key=lambda r: abs(r[1] - budget))
                table.cells.append(
                    AblationCell(
                        policy=GATED,
                        budget=budget,
                        metric=metric,
                        avg_frames=avg,
                        beta=beta,
                        within_tolerance=abs(avg - budget) <= config.ablation.frame_tolerance,
                    )
                )
            continue
        variant = PolicyVariant(name)
        for budget in budgets:
            table.cells.append(_policy_cell(head, dataset, variant, budget, config))

    for budget in budgets:
        table.cells.append(AblationCell(policy=FRAME_EXIT, budget=budget, metric=None, avg_frames=None))
    return table


def write_ablation(table: AblationTable, out_dir: str) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "ablation.json").write_text(json.dumps(table.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    with (out / "ablation.csv").open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["policy"] + [str(b) for b in table.budgets])
        for policy in table.policies():
            row = [policy]
            for b in table.budgets:
                m = table.get(policy, b).metric
                row.append("" if m is None else f"{m:.6f}")
            writer.writerow(row)
    return out
