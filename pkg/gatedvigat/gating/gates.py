"""
Gate g^(s): Z^(s) ((s+1)×F) → [0,1].

conv1d(kernel 3, same-padding, F→F) → relu → GAT block → pooled → dense(F→1) → sigmoid
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from gatedvigat.config import GateConfig
from gatedvigat.errors import InvalidInputError, ShapeError
from gatedvigat.head.gat import NUM_LAYERS, GatBlockParams, block_forward, init_uniform
from gatedvigat.numkernel import ops
from gatedvigat.numkernel.ops import Operand


@dataclass(frozen=True)
class GateSchedule:
    q: Tuple[int, ...]
    beta: float = 0.3
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if not self.q:
            raise InvalidInputError("gate schedule needs at least one gate")
        if any(c < 1 for c in self.q):
            raise InvalidInputError(f"gate frame counts must be >= 1, got {list(self.q)}")
        if any(b <= a for a, b in zip(self.q, self.q[1:])):
            raise InvalidInputError(f"gate frame counts must be strictly ascending, got {list(self.q)}")
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise InvalidInputError(f"beta must be > 0, got {self.beta}")

    @property
    def num_gates(self) -> int:
        return len(self.q)

    @classmethod
    def from_config(cls, gc: GateConfig) -> "GateSchedule":
        return cls(q=tuple(gc.schedule), beta=gc.beta, threshold=gc.threshold)

    def with_beta(self, beta: float) -> "GateSchedule":
        return GateSchedule(q=self.q, beta=beta, threshold=self.threshold)


@dataclass(frozen=True)
class GateInput:
    """Z^(s) = [δ, ρ^(1), …, ρ^(s)], 0행은 항상 δ."""

    z: np.ndarray

    def __post_init__(self) -> None:
        if self.z.ndim != 2 or self.z.shape[0] < 2:
            raise ShapeError(f"gate input must be (s+1)×F with s >= 1, got shape={self.z.shape}")

    @property
    def gate_index(self) -> int:
        return int(self.z.shape[0]) - 1

    @classmethod
    def build(cls, delta, rhos: Sequence[np.ndarray]) -> "GateInput":
        return cls(np.vstack([np.asarray(delta, dtype=np.float64)] + [np.asarray(r, dtype=np.float64) for r in rhos]))


@dataclass(frozen=True)
class GateParams:
    conv_kernel: np.ndarray  # 3F×F
    conv_bias: np.ndarray  # F
    gat: GatBlockParams
    dense: np.ndarray  # F
    dense_bias: np.ndarray  # (1,)
    gate_index: int = 1

    @property
    def feature_dim(self) -> int:
        return int(self.conv_kernel.shape[1])

    @property
    def prefix(self) -> str:
        return gate_prefix(self.gate_index)

    @classmethod
    def init(cls, feature_dim: int, gate_index: int, rng: np.random.Generator) -> "GateParams":
        f = feature_dim
        return cls(
            conv_kernel=init_uniform(rng, 3 * f, (3 * f, f)),
            conv_bias=init_uniform(rng, 3 * f, (f,)),
            gat=GatBlockParams.init(f, 0, rng=rng),
            dense=init_uniform(rng, f, (f,)),
            dense_bias=init_uniform(rng, f, (1,)),
            gate_index=gate_index,
        )

    @classmethod
    def zeros(cls, feature_dim: int, gate_index: int) -> "GateParams":
        f = feature_dim
        return cls(np.zeros((3 * f, f)), np.zeros(f), GatBlockParams.zeros(f), np.zeros(f), np.zeros(1), gate_index)

    def flat(self) -> Dict[str, np.ndarray]:
        p = self.prefix
        out = {f"{p}.conv": self.conv_kernel, f"{p}.conv_bias": self.conv_bias}
        out.update(self.gat.flat(f"{p}.gat"))
        out[f"{p}.dense"] = self.dense
        out[f"{p}.dense_bias"] = self.dense_bias
        return out

    @classmethod
    def from_flat(cls, gate_index: int, d: Mapping[str, np.ndarray]) -> "GateParams":
        p = gate_prefix(gate_index)

        def arr(k: str) -> np.ndarray:
            return np.array(d[f"{p}.{k}"], dtype=np.float64)

        return cls(
            conv_kernel=arr("conv"),
            conv_bias=arr("conv_bias"),
            gat=GatBlockParams.from_flat(f"{p}.gat", d),
            dense=arr("dense"),
            dense_bias=arr("dense_bias").reshape(1),
            gate_index=gate_index,
        )


def gate_prefix(gate_index: int) -> str:
    return f"gate{gate_index}"


def gate_forward_t(p: Mapping[str, Operand], prefix: str, z: Operand):
    """gate forward 본체. z는 (..., s+1, F), 결과는 (...,) 또는 (1,)."""
    conv = ops.relu(ops.add(ops.matmul(ops.unfold3(z), p[f"{prefix}.conv"]), p[f"{prefix}.conv_bias"]))
    layers = [p[f"{prefix}.gat.w{i}"] for i in range(NUM_LAYERS)]
    pooled, _, _ = block_forward(p[f"{prefix}.gat.attn"], layers, conv)
    logit = ops.add(ops.matmul(pooled, p[f"{prefix}.dense"]), p[f"{prefix}.dense_bias"])
    return ops.sigmoid(logit)


def gate_forward(params: GateParams, z) -> float:
    zv = z.z if isinstance(z, GateInput) else np.asarray(z, dtype=np.float64)
    expected = (params.gate_index + 1, params.feature_dim)
    if zv.shape != expected:
        raise ShapeError(f"gate {params.gate_index} expects Z of shape {expected}, got {zv.shape}")
    out = gate_forward_t(params.flat(), params.prefix, zv)
    return float(np.asarray(out).reshape(-1)[0])


def epsilon(schedule: GateSchedule, s: int) -> float:
    if not 1 <= s <= schedule.num_gates:
        raise IndexError(f"gate index {s} out of range 1..{schedule.num_gates}")
    return schedule.beta * math.exp(s / 2.0)


def pseudolabel(loss: float, eps: float) -> int:
    if not (loss >= 0 and math.isfinite(loss)):
        raise InvalidInputError(f"loss must be finite and >= 0, got {loss}")
    return 1 if loss <= eps else 0


def gate_loss(gate_outputs: Operand, pseudolabels) -> Operand:
    """모든 게이트의 BCE 평균. 입력이 (B,S)면 배치 전체 평균."""
    out_shape = ops._val(gate_outputs).shape
    labels = np.asarray(pseudolabels, dtype=np.float64)
    if out_shape != labels.shape:
        raise ShapeError(f"gate outputs {out_shape} and pseudolabels {labels.shape} differ")
    if labels.size == 0:
        raise ShapeError("gate_loss needs at least one gate")
    loss = ops.mean_all(ops.bce(gate_outputs, labels))
    if isinstance(loss, np.ndarray):
        return float(loss)
    return loss


def gate_outputs_all(gates: Sequence[GateParams], z_full: np.ndarray, upto: Optional[int] = None) -> np.ndarray:
    """Z 전체(S+1 행)에서 게이트 1..upto 출력 (teacher-forcing 평가용)."""
    n = len(gates) if upto is None else upto
    return np.array([gate_forward(g, z_full[: g.gate_index + 1]) for g in gates[:n]])
