from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from gatedvigat.errors import InvalidInputError


@dataclass(frozen=True)
class StepSchedule:
    """초기 lr에 milestone(0-based epoch)마다 gamma를 곱하는 계단형 스케줄."""

    lr: float
    milestones: Tuple[int, ...] = ()
    gamma: float = 0.1

    def lr_at(self, epoch: int) -> float:
        passed = sum(1 for m in self.milestones if epoch >= m)
        return self.lr * (self.gamma ** passed)


class SGD:
    def __init__(self, params: Dict[str, np.ndarray]):
        self.params = params

    def step(self, grads: Dict[str, np.ndarray], lr: float) -> None:
        for k, g in grads.items():
            self.params[k] -= lr * g


@dataclass
class Adam:
    params: Dict[str, np.ndarray]
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def step(self, grads: Dict[str, np.ndarray], lr: float) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for k in sorted(grads):
            g = grads[k]
            m = self.m.get(k)
            v = self.v.get(k)
            m = self.beta1 * (np.zeros_like(g) if m is None else m) + (1.0 - self.beta1) * g
            v = self.beta2 * (np.zeros_like(g) if v is None else v) + (1.0 - self.beta2) * g * g
            self.m[k], self.v[k] = m, v
            self.params[k] -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(name: str, params: Dict[str, np.ndarray]):
    key = (name or "").strip().lower()
    if key == "sgd":
        return SGD(params)
    if key == "adam":
        return Adam(params)
    raise InvalidInputError(f"Unsupported optimizer: {name}")


def minibatches(n: int, batch_size: int, rng: np.random.Generator, shuffle: bool = True) -> Sequence[np.ndarray]:
    order = rng.permutation(n) if shuffle else np.arange(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]
