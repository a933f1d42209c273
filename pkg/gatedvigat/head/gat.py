"""
GAT block: 노드 집합 → (pooled 벡터, 노드별 WiD).

- adjacency A = row_softmax((X W_a)(X W_a)^T / sqrt(F))
- 노드 갱신 X ← relu(A X W_l), L=2 layer, 같은 A 공유
- WiD_j = mean_i A_ij → minmax_norm
- pooled = Σ_j wid_j x_j / Σ_j wid_j, wid가 전부 0이면 단순 평균
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from gatedvigat.errors import EmptyInputError, ShapeError
from gatedvigat.numkernel import ops
from gatedvigat.numkernel.ops import Operand

NUM_LAYERS = 2


def init_uniform(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


@dataclass(frozen=True)
class GatBlockParams:
    attn_proj: np.ndarray
    layer_weights: Tuple[np.ndarray, ...]
    seed: int = 0

    @property
    def feature_dim(self) -> int:
        return int(self.attn_proj.shape[0])

    @classmethod
    def init(cls, feature_dim: int, seed: int, rng: np.random.Generator = None) -> "GatBlockParams":
        rng = rng if rng is not None else np.random.default_rng(seed)
        f = feature_dim
        attn = init_uniform(rng, f, (f, f))
        layers = tuple(init_uniform(rng, f, (f, f)) for _ in range(NUM_LAYERS))
        return cls(attn_proj=attn, layer_weights=layers, seed=seed)

    @classmethod
    def zeros(cls, feature_dim: int) -> "GatBlockParams":
        f = feature_dim
        return cls(np.zeros((f, f)), tuple(np.zeros((f, f)) for _ in range(NUM_LAYERS)))

    def flat(self, prefix: str) -> Dict[str, np.ndarray]:
        out = {f"{prefix}.attn": self.attn_proj}
        for i, w in enumerate(self.layer_weights):
            out[f"{prefix}.w{i}"] = w
        return out

    @classmethod
    def from_flat(cls, prefix: str, d: Mapping[str, np.ndarray], seed: int = 0) -> "GatBlockParams":
        layers = tuple(np.array(d[f"{prefix}.w{i}"], dtype=np.float64) for i in range(NUM_LAYERS))
        return cls(np.array(d[f"{prefix}.attn"], dtype=np.float64), layers, seed)


def block_forward(attn: Operand, layers: Sequence[Operand], x: Operand):
    """
    gat_block 본체 (배열/Var 겸용, 앞쪽 배치 축 허용).
    반환: (pooled (..., F), wids (..., M), adjacency (..., M, M))
    """
    xv = ops._val(x)
    m, f = xv.shape[-2], xv.shape[-1]
    if m == 0:
        raise EmptyInputError("gat_block needs at least one node")
    if ops._val(attn).shape[0] != f:
        raise ShapeError(f"attn_proj expects F={ops._val(attn).shape[0]}, nodes have F={f}")

    q = ops.matmul(x, attn)
    scores = ops.mul(ops.matmul(q, ops.transpose(q)), 1.0 / np.sqrt(f))
    adj = ops.row_softmax(scores)
    wids = ops.minmax_norm(ops.mean_axis(adj, axis=-2))

    h = x
    for w in layers:
        h = ops.relu(ops.matmul(ops.matmul(adj, h), w))

    # wid 합이 0인 행(대칭 입력)은 단순 평균으로 대체
    total = ops.sum_axis(wids, axis=-1, keepdims=True)
    degenerate = (ops._val(total) == 0).astype(np.float64)
    weights = ops.add(ops.div(wids, ops.add(total, degenerate)), degenerate / m)
    lead = ops._val(weights).shape[:-1]
    pooled = ops.sum_axis(ops.mul(ops.reshape(weights, lead + (m, 1)), h), axis=-2)
    return pooled, wids, adj


def gat_block(params: GatBlockParams, nodes) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(nodes, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"nodes must be M×F, got shape={x.shape}")
    if x.shape[0] == 0:
        raise EmptyInputError("gat_block needs at least one node")
    pooled, wids, _ = block_forward(params.attn_proj, params.layer_weights, x)
    return pooled, wids


def adjacency(params: GatBlockParams, nodes) -> np.ndarray:
    x = np.asarray(nodes, dtype=np.float64)
    _, _, adj = block_forward(params.attn_proj, params.layer_weights, x)
    return adj
