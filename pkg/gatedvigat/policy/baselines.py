from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from gatedvigat.errors import InvalidInputError
from gatedvigat.numkernel.ops import as_vec
from gatedvigat.policy.selection import initial_state, select_for_gate


class PolicyVariant(str, Enum):
    RANDOM = "random"
    WID_TOPK = "wid_topk"
    RANDOM_LOCAL = "random_local"
    WID_LOCAL = "wid_local"
    PROPOSED = "proposed"


@dataclass(frozen=True)
class PolicyKind:
    variant: PolicyVariant
    budget: Optional[int] = None
    schedule: Tuple[int, ...] = ()

    @property
    def global_on_all(self) -> bool:
        """False면 δ도 선택된 Θ 프레임만으로 다시 계산한다."""
        return self.variant not in (PolicyVariant.RANDOM, PolicyVariant.WID_TOPK)

    @property
    def is_random(self) -> bool:
        return self.variant in (PolicyVariant.RANDOM, PolicyVariant.RANDOM_LOCAL)


def baseline_select(kind: PolicyKind, u, gamma, theta: int, seed: int = 0) -> List[int]:
    uv = as_vec(u, "u")
    p = uv.shape[0]
    if theta < 0 or theta > p:
        raise InvalidInputError(f"theta={theta} must be within [0, P={p}]")

    if kind.is_random:
        rng = np.random.default_rng(seed)
        return [int(i) for i in rng.choice(p, size=theta, replace=False)]
    if kind.variant in (PolicyVariant.WID_TOPK, PolicyVariant.WID_LOCAL):
        return [int(i) for i in np.argsort(-uv, kind="stable")[:theta]]
    indices, _ = select_for_gate(initial_state(uv, gamma, rng_seed=seed), theta)
    return indices
