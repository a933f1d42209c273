from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger

from gatedvigat.config import RunConfig
from gatedvigat.errors import ContractError, EmptyInputError
from gatedvigat.gating.gates import GateParams, GateSchedule, epsilon, gate_forward_t, gate_loss, pseudolabel
from gatedvigat.head.head import HeadParams, gate_stage_loss, global_path, local_frame, local_video
from gatedvigat.numkernel import ops
from gatedvigat.numkernel.optim import StepSchedule, make_optimizer, minibatches
from gatedvigat.numkernel.tape import Tape, grad
from gatedvigat.pipeline.records import VideoRecord
from gatedvigat.policy.selection import initial_state, select_for_gate


@dataclass(frozen=True)
class GateTrainingItem:
    """frozen head로 한 번 계산해 두는 비디오별 게이트 학습 입력."""

    video_id: str
    z_full: np.ndarray  # (S+1)×F, Z^(s) = z_full[: s+1]
    losses: np.ndarray  # S, 게이트별 분류 손실 l^(s)
    frames: tuple  # 게이트별 선택 프레임 수


def stage_features(head: HeadParams, rec: VideoRecord, q: Sequence[int]):
    """
    Proposed 정책으로 Q^(1..S)까지 프레임을 늘려가며 (δ, [ρ^(s)], [frames^(s)]) 계산.
    η는 새로 추가된 프레임에 대해서만 계산한다.
    """
    gs = global_path(head, rec.global_feats)
    state = initial_state(gs.wids, rec.global_feats)
    etas: Dict[int, np.ndarray] = {}
    rhos: List[np.ndarray] = []
    frames: List[List[int]] = []
    for q_s in q:
        indices, state = select_for_gate(state, q_s)
        for p in indices:
            if p not in etas:
                etas[p] = local_frame(head, rec.object_feats[p]).eta
        rhos.append(local_video(head, np.vstack([etas[p] for p in indices])))
        frames.append(indices)
    return gs.delta, rhos, frames


def precompute_gate_inputs(head: HeadParams, dataset: Sequence[VideoRecord], schedule: GateSchedule) -> List[GateTrainingItem]:
    items: List[GateTrainingItem] = []
    for rec in dataset:
        delta, rhos, frames = stage_features(head, rec, schedule.q)
        losses = np.array([gate_stage_loss(head, delta, rho, rec.labels) for rho in rhos])
        items.append(
            GateTrainingItem(
                video_id=rec.video_id,
                z_full=np.vstack([delta] + rhos),
                losses=losses,
                frames=tuple(len(f) for f in frames),
            )
        )
    return items


def pseudolabels_for(items: Sequence[GateTrainingItem], schedule: GateSchedule) -> np.ndarray:
    eps = [epsilon(schedule, s) for s in range(1, schedule.num_gates + 1)]
    return np.array([[pseudolabel(float(l), e) for l, e in zip(it.losses, eps)] for it in items], dtype=np.float64)


def fit_gates(
    items: Sequence[GateTrainingItem],
    schedule: GateSchedule,
    config: RunConfig,
    feature_dim: int,
    history: Optional[List[float]] = None,
) -> List[GateParams]:
    """precompute된 입력과 schedule의 ε로 pseudolabel을 만들고 S개 게이트를 함께 학습."""
    if not items:
        raise EmptyInputError("train_gates: empty dataset")
    gc = config.gates
    s_count = schedule.num_gates
    labels = pseudolabels_for(items, schedule)
    logger.info(
        f"[train_gates] videos={len(items)} gates={s_count} beta={schedule.beta:g} "
        f"open_rate={np.round(labels.mean(axis=0), 3).tolist()}"
    )

    rng = np.random.default_rng(config.seed + 2)
    gates = [GateParams.init(feature_dim, s, rng) for s in range(1, s_count + 1)]
    flat: Dict[str, np.ndarray] = {}
    for g in gates:
        flat.update({k: np.array(v, dtype=np.float64) for k, v in g.flat().items()})
    opt = make_optimizer(gc.optimizer, flat)
    lr_schedule = StepSchedule(gc.lr, tuple(gc.lr_milestones), gc.lr_gamma)
    z_all = np.stack([it.z_full for it in items])
    n = len(items)

    for epoch in range(gc.epochs):
        lr = lr_schedule.lr_at(epoch)
        epoch_loss = 0.0
        for idxs in minibatches(n, gc.batch_size, rng):
            tape = Tape()
            leaves = tape.leaves(flat)
            z = z_all[idxs]
            outs = ops.stack([gate_forward_t(leaves, g.prefix, z[:, : g.gate_index + 1]) for g in gates], axis=1)
            loss = gate_loss(outs, labels[idxs])
            opt.step(grad(tape, loss).of(leaves), lr)
            epoch_loss += float(loss.value) * len(idxs)
        epoch_loss /= n
        if history is not None:
            history.append(epoch_loss)
        logger.debug(f"[train_gates] epoch={epoch} loss={epoch_loss:.4f} lr={lr:g}")

    return [GateParams.from_flat(s, flat) for s in range(1, s_count + 1)]


def train_gates(
    head: HeadParams,
    dataset: Sequence[VideoRecord],
    schedule: GateSchedule,
    config: RunConfig,
    history: Optional[List[float]] = None,
    items: Optional[Sequence[GateTrainingItem]] = None,
) -> List[GateParams]:
    """
    head는 고정, 게이트만 학습.
    모든 게이트의 Z^(s)를 비디오마다 한 번에 계산(teacher forcing)한 뒤 minibatch 학습.
    """
    if not dataset:
        raise EmptyInputError("train_gates: empty dataset")
    before = head.checksum()
    if items is None:
        items = precompute_gate_inputs(head, dataset, schedule)
    gates = fit_gates(items, schedule, config, head.feature_dim, history=history)
    if head.checksum() != before:
        raise ContractError("head parameters changed during gate training")
    return gates
