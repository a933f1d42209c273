"""
ViGAT head: GAT block ω1(global), ω2(objects), ω3(frame-local) + dense classifier.

파라미터는 flat dict(이름 → 배열)로도 다룰 수 있어서, 같은 forward 코드가
배열(추론)과 Tape Var(학습) 양쪽에서 그대로 돈다.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np

from gatedvigat.config import LabelMode
from gatedvigat.errors import EmptyInputError, InvalidInputError, ShapeError
from gatedvigat.head.gat import NUM_LAYERS, GatBlockParams, block_forward, init_uniform
from gatedvigat.numkernel import ops
from gatedvigat.numkernel.ops import Operand

BLOCKS = ("omega1", "omega2", "omega3")


@dataclass(frozen=True)
class GlobalSummary:
    delta: np.ndarray
    wids: np.ndarray


@dataclass(frozen=True)
class FrameLocalSummary:
    eta: np.ndarray
    obj_wids: np.ndarray


@dataclass(frozen=True)
class HeadParams:
    omega1: GatBlockParams
    omega2: GatBlockParams
    omega3: GatBlockParams
    classifier: np.ndarray  # 2F×G
    bias: np.ndarray  # G
    label_mode: LabelMode = "single"

    def __post_init__(self) -> None:
        f = self.omega1.feature_dim
        if self.classifier.ndim != 2 or self.classifier.shape[0] != 2 * f:
            raise ShapeError(f"classifier must be 2F×G with F={f}, got shape={self.classifier.shape}")
        if self.bias.shape != (self.classifier.shape[1],):
            raise ShapeError(f"bias must have length G={self.classifier.shape[1]}, got shape={self.bias.shape}")

    @property
    def feature_dim(self) -> int:
        return self.omega1.feature_dim

    @property
    def num_classes(self) -> int:
        return int(self.classifier.shape[1])

    @classmethod
    def init(cls, feature_dim: int, num_classes: int, seed: int, label_mode: LabelMode = "single") -> "HeadParams":
        rng = np.random.default_rng(seed)
        f, g = feature_dim, num_classes
        blocks = [GatBlockParams.init(f, seed, rng=rng) for _ in BLOCKS]
        classifier = init_uniform(rng, 2 * f, (2 * f, g))
        bias = init_uniform(rng, 2 * f, (g,))
        return cls(*blocks, classifier=classifier, bias=bias, label_mode=label_mode)

    def flat(self) -> Dict[str, np.ndarray]:
        out: Dict[str, np.ndarray] = {}
        for name in BLOCKS:
            out.update(getattr(self, name).flat(name))
        out["classifier.weight"] = self.classifier
        out["classifier.bias"] = self.bias
        return out

    @classmethod
    def from_flat(cls, d: Mapping[str, np.ndarray], label_mode: LabelMode = "single", seed: int = 0) -> "HeadParams":
        blocks = [GatBlockParams.from_flat(name, d, seed) for name in BLOCKS]
        return cls(
            *blocks,
            classifier=np.array(d["classifier.weight"], dtype=np.float64),
            bias=np.array(d["classifier.bias"], dtype=np.float64),
            label_mode=label_mode,
        )

    def checksum(self) -> str:
        h = hashlib.sha1()
        flat = self.flat()
        for k in sorted(flat):
            h.update(k.encode("utf-8"))
            h.update(np.ascontiguousarray(flat[k], dtype="<f8").tobytes())
        return h.hexdigest()


def _block(p: Mapping[str, Operand], name: str) -> Tuple[Operand, Sequence[Operand]]:
    return p[f"{name}.attn"], [p[f"{name}.w{i}"] for i in range(NUM_LAYERS)]


def _check_dim(params: HeadParams, arr: np.ndarray, what: str) -> None:
    if arr.shape[-1] != params.feature_dim:
        raise ShapeError(f"{what}: expected F={params.feature_dim}, got shape={arr.shape}")


# ---- inference-side (arrays) ----


def global_path(params: HeadParams, gamma) -> GlobalSummary:
    g = np.asarray(gamma, dtype=np.float64)
    if g.ndim != 2:
        raise ShapeError(f"gamma must be P×F, got shape={g.shape}")
    if g.shape[0] == 0:
        raise EmptyInputError("global_path needs at least one frame")
    _check_dim(params, g, "gamma")
    delta, wids, _ = block_forward(params.omega1.attn_proj, params.omega1.layer_weights, g)
    return GlobalSummary(delta=delta, wids=wids)


def local_frame(params: HeadParams, objects) -> FrameLocalSummary:
    x = np.asarray(objects, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"objects must be K×F, got shape={x.shape}")
    if x.shape[0] == 0:
        raise EmptyInputError("local_frame needs at least one object")
    _check_dim(params, x, "objects")
    eta, phi, _ = block_forward(params.omega2.attn_proj, params.omega2.layer_weights, x)
    return FrameLocalSummary(eta=eta, obj_wids=phi)


def local_frames(params: HeadParams, objects) -> Tuple[np.ndarray, np.ndarray]:
    """P×K×F 객체 텐서 → (etas P×F, obj_wids P×K). local_frame을 프레임별로 돈 것과 같다."""
    x = np.asarray(objects, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"objects must be P×K×F, got shape={x.shape}")
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise EmptyInputError("local_frames needs at least one frame and one object")
    _check_dim(params, x, "objects")
    etas, phis, _ = block_forward(params.omega2.attn_proj, params.omega2.layer_weights, x)
    return etas, phis


def local_video(params: HeadParams, etas) -> np.ndarray:
    h = np.asarray(etas, dtype=np.float64)
    if h.ndim != 2:
        raise ShapeError(f"etas must be Q×F, got shape={h.shape}")
    if h.shape[0] == 0:
        raise EmptyInputError("local_video needs at least one frame")
    _check_dim(params, h, "etas")
    rho, _, _ = block_forward(params.omega3.attn_proj, params.omega3.layer_weights, h)
    return rho


def classify_logits(params: HeadParams, delta, rho) -> np.ndarray:
    d = np.asarray(delta, dtype=np.float64)
    r = np.asarray(rho, dtype=np.float64)
    f = params.feature_dim
    if d.shape != (f,) or r.shape != (f,):
        raise ShapeError(f"classify expects delta and rho of length {f}, got {d.shape} and {r.shape}")
    zeta = np.concatenate([d, r])
    return zeta @ params.classifier + params.bias


def scores_from_logits(logits, label_mode: LabelMode) -> np.ndarray:
    if label_mode == "multi":
        return ops.sigmoid(logits)
    return ops.row_softmax(logits)


def classify(params: HeadParams, delta, rho) -> np.ndarray:
    return scores_from_logits(classify_logits(params, delta, rho), params.label_mode)


def classification_loss(logits: Operand, labels: Sequence[Sequence[int]], label_mode: LabelMode):
    """
    logits: (G,) 또는 (B,G). labels: 비디오별 클래스 인덱스 목록.
    single → cross_entropy (배치 평균), multi → 클래스별 BCE 평균.
    """
    lv = ops._val(logits)
    batched = lv.ndim == 2
    rows = labels if batched else [labels]
    g = lv.shape[-1]
    if label_mode == "multi":
        targets = np.zeros((len(rows), g))
        for i, labs in enumerate(rows):
            for c in labs:
                if not 0 <= int(c) < g:
                    raise IndexError(f"label {c} out of range for {g} classes")
                targets[i, int(c)] = 1.0
        return ops.bce_with_logits(logits, targets if batched else targets[0])

    firsts = []
    for labs in rows:
        if len(labs) != 1:
            raise InvalidInputError(f"single-label mode needs exactly one label, got {list(labs)}")
        firsts.append(int(labs[0]))
    if not batched:
        return ops.cross_entropy(logits, firsts[0])
    for c in firsts:
        if not 0 <= c < g:
            raise IndexError(f"label {c} out of range for {g} classes")
    picked = ops.getitem(ops.log_softmax(logits), (np.arange(len(firsts)), np.asarray(firsts)))
    return ops.mul(ops.mean_all(picked), -1.0)


def gate_stage_loss(params: HeadParams, delta, rho, labels: Sequence[int]) -> float:
    """frozen head로 ζ=[δ;ρ]를 분류했을 때의 손실 l (pseudolabel 기준값)."""
    return float(classification_loss(classify_logits(params, delta, rho), labels, params.label_mode))


# ---- training-side (arrays or Vars, optional leading batch axes) ----


def forward_logits(p: Mapping[str, Operand], gamma: Operand, objects: Operand):
    """
    모든 P 프레임을 쓰는 head forward (게이트 없음).
    gamma (..., P, F), objects (..., P, K, F) → logits (..., G)
    """
    delta, _, _ = block_forward(*_block(p, "omega1"), gamma)
    etas, _, _ = block_forward(*_block(p, "omega2"), objects)
    rho, _, _ = block_forward(*_block(p, "omega3"), etas)
    zeta = ops.concat([delta, rho], axis=-1)
    return ops.add(ops.matmul(zeta, p["classifier.weight"]), p["classifier.bias"])


def all_frames_scores(params: HeadParams, gamma, objects) -> np.ndarray:
    """게이트 없이 P 프레임 전부로 분류한 ŷ (기준선)."""
    delta = global_path(params, gamma).delta
    etas, _ = local_frames(params, objects)
    return classify(params, delta, local_video(params, etas))
