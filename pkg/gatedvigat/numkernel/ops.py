"""
Dense numeric primitives.

모든 미분 가능 연산은 두 가지 모드로 동작한다.
- numpy 배열 입력: 순수 계산(결과는 새 배열)
- Var 입력(하나라도): 같은 Tape에 기록되어 grad() 대상이 됨

Vec은 1-D, Mat은 2-D float64 배열. head 학습용으로 앞쪽 배치 축(3-D)도 허용한다.
"""

from __future__ import annotations

from typing import Optional, Sequence, Tuple, Union

import numpy as np

from gatedvigat.errors import ContractError, InvalidInputError, ShapeError
from gatedvigat.numkernel.tape import Tape, Var

Array = np.ndarray
Operand = Union[Var, Array, float, int]

BCE_EPS = 1e-7


def _tape_of(*xs) -> Optional[Tape]:
    tape: Optional[Tape] = None
    for x in xs:
        if isinstance(x, Var):
            if tape is None:
                tape = x.tape
            elif x.tape is not tape:
                raise ContractError("operands recorded on different tapes")
    return tape


def _val(x: Operand) -> Array:
    if isinstance(x, Var):
        return x.value
    return np.asarray(x, dtype=np.float64)


def _lift(tape: Tape, x: Operand) -> Var:
    return x if isinstance(x, Var) else tape.const(x)


def _unbroadcast(g: Array, shape: Tuple[int, ...]) -> Array:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def as_vec(v, name: str = "vec") -> Array:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ShapeError(f"{name}: expected non-empty 1-D vector, got shape={arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: non-finite entries")
    return arr


def as_mat(m, name: str = "mat") -> Array:
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name}: expected non-empty 2-D matrix, got shape={arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: non-finite entries")
    return arr


# ---- elementwise ----


def add(a: Operand, b: Operand):
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av + bv
    if tape is None:
        return out
    sa, sb = av.shape, bv.shape
    return tape.record(out, (_lift(tape, a), _lift(tape, b)), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a: Operand, b: Operand):
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av - bv
    if tape is None:
        return out
    sa, sb = av.shape, bv.shape
    return tape.record(out, (_lift(tape, a), _lift(tape, b)), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a: Operand, b: Operand):
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av * bv
    if tape is None:
        return out
    return tape.record(
        out,
        (_lift(tape, a), _lift(tape, b)),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
    )


def div(a: Operand, b: Operand):
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    out = av / bv
    if tape is None:
        return out
    return tape.record(
        out,
        (_lift(tape, a), _lift(tape, b)),
        lambda g: (_unbroadcast(g / bv, av.shape), _unbroadcast(-g * av / (bv * bv), bv.shape)),
    )


def relu(x: Operand):
    xv = _val(x)
    out = np.maximum(xv, 0.0)
    if not isinstance(x, Var):
        return out
    mask = xv > 0
    return x.tape.record(out, (x,), lambda g: (g * mask,))


def _sigmoid(xv: Array) -> Array:
    z = np.exp(-np.abs(xv))
    return np.where(xv >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid(x: Operand):
    xv = _val(x)
    out = _sigmoid(xv)
    if not isinstance(x, Var):
        return out
    return x.tape.record(out, (x,), lambda g: (g * out * (1.0 - out),))


def log(x: Operand):
    xv = _val(x)
    out = np.log(xv)
    if not isinstance(x, Var):
        return out
    return x.tape.record(out, (x,), lambda g: (g / xv,))


# ---- shape ops ----


def transpose(x: Operand):
    xv = _val(x)
    out = np.swapaxes(xv, -1, -2)
    if not isinstance(x, Var):
        return out
    return x.tape.record(out, (x,), lambda g: (np.swapaxes(g, -1, -2),))


def reshape(x: Operand, shape: Tuple[int, ...]):
    xv = _val(x)
    out = xv.reshape(shape)
    if not isinstance(x, Var):
        return out
    return x.tape.record(out, (x,), lambda g: (g.reshape(xv.shape),))


def getitem(x: Operand, key):
    xv = _val(x)
    out = np.array(xv[key], dtype=np.float64)
    if not isinstance(x, Var):
        return out

    def backward(g):
        gx = np.zeros_like(xv)
        np.add.at(gx, key, g)
        return (gx,)

    return x.tape.record(out, (x,), backward)


def concat(xs: Sequence[Operand], axis: int = 0):
    tape = _tape_of(*xs)
    vals = [_val(x) for x in xs]
    out = np.concatenate(vals, axis=axis)
    if tape is None:
        return out
    bounds = np.cumsum([v.shape[axis] for v in vals])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return tape.record(out, [_lift(tape, x) for x in xs], backward)


def stack(xs: Sequence[Operand], axis: int = 0):
    tape = _tape_of(*xs)
    vals = [_val(x) for x in xs]
    out = np.stack(vals, axis=axis)
    if tape is None:
        return out

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(vals)))

    return tape.record(out, [_lift(tape, x) for x in xs], backward)


# ---- reductions ----


def sum_all(x: Operand):
    xv = _val(x)
    out = np.asarray(xv.sum())
    if not isinstance(x, Var):
        return out
    return x.tape.record(out, (x,), lambda g: (np.broadcast_to(g, xv.shape).copy(),))


def mean_all(x: Operand):
    xv = _val(x)
    n = xv.size
    out = np.asarray(xv.sum() / n)
    if not isinstance(x, Var):
        return out
    return x.tape.record(out, (x,), lambda g: (np.broadcast_to(g / n, xv.shape).copy(),))


def sum_axis(x: Operand, axis: int, keepdims: bool = False):
    xv = _val(x)
    out = xv.sum(axis=axis, keepdims=keepdims)
    if not isinstance(x, Var):
        return out

    def backward(g):
        gk = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gk, xv.shape).copy(),)

    return x.tape.record(out, (x,), backward)


def mean_axis(x: Operand, axis: int, keepdims: bool = False):
    n = _val(x).shape[axis]
    return mul(sum_axis(x, axis, keepdims=keepdims), 1.0 / n)


# ---- exported primitives ----


def matmul(a: Operand, b: Operand):
    """행렬 곱. a.cols != b.rows 이면 ShapeError."""
    tape = _tape_of(a, b)
    av, bv = _val(a), _val(b)
    if av.ndim == 0 or bv.ndim == 0:
        raise ShapeError("matmul needs at least 1-D operands")
    k_a = av.shape[-1]
    k_b = bv.shape[0] if bv.ndim == 1 else bv.shape[-2]
    if k_a != k_b:
        raise ShapeError(f"matmul dimension mismatch: {av.shape} x {bv.shape}")
    out = np.matmul(av, bv)
    if tape is None:
        return out

    def backward(g):
        a2 = av[None, :] if av.ndim == 1 else av
        b2 = bv[:, None] if bv.ndim == 1 else bv
        g2 = np.asarray(g)
        if bv.ndim == 1:
            g2 = g2[..., None]
        if av.ndim == 1:
            g2 = g2[..., None, :]
        ga = np.matmul(g2, np.swapaxes(b2, -1, -2))
        gb = np.matmul(np.swapaxes(a2, -1, -2), g2)
        return (
            _unbroadcast(ga, a2.shape).reshape(av.shape),
            _unbroadcast(gb, b2.shape).reshape(bv.shape),
        )

    return tape.record(out, (_lift(tape, a), _lift(tape, b)), backward)


def row_softmax(m: Operand):
    """마지막 축 기준 softmax (max-subtraction으로 overflow 방지)."""
    mv = _val(m)
    shifted = mv - mv.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)
    if not isinstance(m, Var):
        return out

    def backward(g):
        return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

    return m.tape.record(out, (m,), backward)


def log_softmax(x: Operand):
    xv = _val(x)
    shifted = xv - xv.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - lse
    if not isinstance(x, Var):
        return out
    soft = np.exp(out)

    def backward(g):
        return (g - soft * g.sum(axis=-1, keepdims=True),)

    return x.tape.record(out, (x,), backward)


def minmax_norm(v: Operand):
    """
    [0,1] min-max 정규화 (마지막 축).
    max == min 인 경우 전부 0을 반환하고 gradient도 0.
    """
    xv = _val(v)
    mn = xv.min(axis=-1, keepdims=True)
    mx = xv.max(axis=-1, keepdims=True)
    rng = mx - mn
    ok = rng > 0
    safe = np.where(ok, rng, 1.0)
    out = np.where(ok, (xv - mn) / safe, 0.0)
    if not isinstance(v, Var):
        return out

    a_idx = np.argmin(xv, axis=-1)[..., None]
    b_idx = np.argmax(xv, axis=-1)[..., None]

    def backward(g):
        direct = np.where(ok, g / safe, 0.0)
        at_min = np.where(ok, (g * (out - 1.0)).sum(axis=-1, keepdims=True) / safe, 0.0)
        at_max = np.where(ok, (g * -out).sum(axis=-1, keepdims=True) / safe, 0.0)
        gx = direct.copy()
        gx_min = np.zeros_like(xv)
        gx_max = np.zeros_like(xv)
        np.put_along_axis(gx_min, a_idx, at_min, axis=-1)
        np.put_along_axis(gx_max, b_idx, at_max, axis=-1)
        return (gx + gx_min + gx_max,)

    return v.tape.record(out, (v,), backward)


def l2_normalize_rows(m: Array) -> Array:
    mv = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(mv, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise InvalidInputError("zero-norm feature vector")
    return mv / norms


def dissimilarity(a, b) -> float:
    """(1 - cos(a, b)) / 2, 결과는 [0,1]로 clip."""
    av, bv = as_vec(a, "a"), as_vec(b, "b")
    if av.shape != bv.shape:
        raise ShapeError(f"dissimilarity length mismatch: {av.shape} vs {bv.shape}")
    na, nb = np.linalg.norm(av), np.linalg.norm(bv)
    if na == 0 or nb == 0:
        raise InvalidInputError("dissimilarity of a zero-norm vector is undefined")
    cos = float(np.dot(av / na, bv / nb))
    return min(1.0, max(0.0, (1.0 - cos) / 2.0))


def cross_entropy(scores: Operand, label: int):
    """-log softmax(scores)[label]; scores는 logit 벡터."""
    g = _val(scores).shape[-1]
    if not (0 <= int(label) < g):
        raise IndexError(f"label {label} out of range for {g} classes")
    return mul(getitem(log_softmax(scores), int(label)), -1.0)


def bce(prediction: Operand, target):
    """
    이진 cross-entropy. prediction은 [1e-7, 1-1e-7]로 clamp 후 log.
    배열 입력이면 원소별 손실 배열을 반환한다.
    """
    pv = _val(prediction)
    tv = np.asarray(target, dtype=np.float64)
    pc = np.clip(pv, BCE_EPS, 1.0 - BCE_EPS)
    out = -(tv * np.log(pc) + (1.0 - tv) * np.log(1.0 - pc))
    if not isinstance(prediction, Var):
        return out
    inside = (pv >= BCE_EPS) & (pv <= 1.0 - BCE_EPS)

    def backward(g):
        d = (-tv / pc + (1.0 - tv) / (1.0 - pc)) * inside
        return (_unbroadcast(g * d, pv.shape),)

    return prediction.tape.record(out, (prediction,), backward)


def bce_with_logits(logits: Operand, targets):
    """클래스별 sigmoid BCE의 평균 (multilabel 분류 손실)."""
    xv = _val(logits)
    tv = np.asarray(targets, dtype=np.float64)
    if tv.shape != xv.shape:
        raise ShapeError(f"targets shape {tv.shape} != logits shape {xv.shape}")
    n = xv.size
    per = np.maximum(xv, 0.0) - xv * tv + np.log1p(np.exp(-np.abs(xv)))
    out = np.asarray(per.sum() / n)
    if not isinstance(logits, Var):
        return out

    def backward(g):
        return (g * (_sigmoid(xv) - tv) / n,)

    return logits.tape.record(out, (logits,), backward)


def unfold3(z: Operand):
    """
    kernel width 3, same-padding 1-D conv용 im2col.
    입력 (..., n, F) → 출력 (..., n, 3F), t행 = [z[t-1], z[t], z[t+1]] (범위 밖은 0).
    """
    zv = _val(z)
    if zv.ndim < 2:
        raise ShapeError(f"unfold3 needs an n×F input, got shape={zv.shape}")
    n, f = zv.shape[-2], zv.shape[-1]
    pad = np.zeros(zv.shape[:-2] + (n + 2, f))
    pad[..., 1:-1, :] = zv
    out = np.concatenate([pad[..., 0:n, :], pad[..., 1 : n + 1, :], pad[..., 2 : n + 2, :]], axis=-1)
    if not isinstance(z, Var):
        return out

    def backward(g):
        gz = g[..., f : 2 * f].copy()
        gz[..., :-1, :] += g[..., 1:, 0:f]
        gz[..., 1:, :] += g[..., :-1, 2 * f : 3 * f]
        return (gz,)

    return z.tape.record(out, (z,), backward)

