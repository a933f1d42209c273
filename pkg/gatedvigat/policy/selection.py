"""
WiD + dissimilarity 프레임 선택.

한 번의 반복:
1) p* = argmax(u_work), 이미 고른 프레임은 제외, 동점이면 가장 작은 인덱스
2) alpha_p = (1 - <γ̃_p*, γ̃_p>) / 2   (γ̃ = L2 정규화된 global 특징)
3) u_work ← minmax(u_work) ⊙ minmax(alpha)

게이트가 늘어날 때는 같은 state에서 이어서 고르므로 앞 게이트의 목록이 항상 prefix.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import List, Tuple

import numpy as np
from loguru import logger

from gatedvigat.errors import ExhaustedError, InvalidInputError, ShapeError
from gatedvigat.numkernel.ops import as_mat, as_vec, l2_normalize_rows, minmax_norm


@dataclass(frozen=True)
class PolicyState:
    selected: Tuple[int, ...]
    u_work: np.ndarray
    gamma: np.ndarray
    rng_seed: int = 0
    warnings: Tuple[str, ...] = ()

    @property
    def num_frames(self) -> int:
        return int(self.u_work.shape[0])


def initial_state(u, gamma, rng_seed: int = 0) -> PolicyState:
    uv = as_vec(u, "u")
    g = as_mat(gamma, "gamma")
    if g.shape[0] != uv.shape[0]:
        raise ShapeError(f"u has {uv.shape[0]} entries but gamma has {g.shape[0]} rows")
    # zero-norm 행은 여기서 거부
    l2_normalize_rows(g)
    return PolicyState(selected=(), u_work=uv.copy(), gamma=g, rng_seed=rng_seed)


def frame_dissimilarities(gamma: np.ndarray, pick: int) -> np.ndarray:
    unit = l2_normalize_rows(gamma)
    return np.clip((1.0 - unit @ unit[pick]) / 2.0, 0.0, 1.0)


def select_next(state: PolicyState) -> Tuple[int, PolicyState]:
    p = state.num_frames
    if len(state.selected) >= p:
        raise ExhaustedError(f"all {p} frames already selected")

    masked = state.u_work.copy()
    masked[np.asarray(state.selected, dtype=np.intp)] = -np.inf
    pick = int(np.argmax(masked))

    alpha = frame_dissimilarities(state.gamma, pick)
    u_next = minmax_norm(state.u_work) * minmax_norm(alpha)
    return pick, replace(state, selected=state.selected + (pick,), u_work=u_next)


def select_for_gate(state: PolicyState, q_target: int) -> Tuple[List[int], PolicyState]:
    p = state.num_frames
    if q_target > p:
        msg = f"q_target={q_target} exceeds P={p}; clamped to {p}"
        logger.warning(f"[policy] {msg}")
        state = replace(state, warnings=state.warnings + (msg,))
        q_target = p
    if q_target < len(state.selected):
        raise InvalidInputError(f"q_target={q_target} is below the {len(state.selected)} frames already selected")

    while len(state.selected) < q_target:
        _, state = select_next(state)
    return list(state.selected), state
