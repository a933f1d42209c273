from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gatedvigat.errors import ContractError

Backward = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass
class Node:
    value: np.ndarray
    parents: Tuple[int, ...]
    backward: Optional[Backward]
    name: Optional[str] = None

    @property
    def is_leaf(self) -> bool:
        return self.backward is None


class Var:
    """Tape 위에 기록된 값의 핸들. 연산자는 numkernel.ops로 위임한다."""

    __slots__ = ("tape", "index")

    def __init__(self, tape: "Tape", index: int):
        self.tape = tape
        self.index = index

    @property
    def value(self) -> np.ndarray:
        return self.tape.nodes[self.index].value

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def T(self) -> "Var":
        from gatedvigat.numkernel import ops

        return ops.transpose(self)

    def __add__(self, other):
        from gatedvigat.numkernel import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from gatedvigat.numkernel import ops

        return ops.add(other, self)

    def __sub__(self, other):
        from gatedvigat.numkernel import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from gatedvigat.numkernel import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from gatedvigat.numkernel import ops

        return ops.mul(self, other)

    def __rmul__(self, other):
        from gatedvigat.numkernel import ops

        return ops.mul(other, self)

    def __truediv__(self, other):
        from gatedvigat.numkernel import ops

        return ops.div(self, other)

    def __neg__(self):
        from gatedvigat.numkernel import ops

        return ops.mul(self, -1.0)

    def __matmul__(self, other):
        from gatedvigat.numkernel import ops

        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        from gatedvigat.numkernel import ops

        return ops.matmul(other, self)

    def __getitem__(self, key):
        from gatedvigat.numkernel import ops

        return ops.getitem(self, key)

    def __repr__(self) -> str:
        return f"Var(index={self.index}, shape={self.shape})"


class Tape:
    """
    Reverse-mode 기록 테이프.
    - 노드는 생성 순서대로 쌓이므로 항상 위상 정렬 상태
    - 한 테이프는 한 실행 흐름에서만 사용 (스레드 간 공유 금지)
    """

    def __init__(self) -> None:
        self.nodes: List[Node] = []

    def __len__(self) -> int:
        return len(self.nodes)

    def leaf(self, value, name: Optional[str] = None) -> Var:
        arr = np.array(value, dtype=np.float64)
        self.nodes.append(Node(value=arr, parents=(), backward=None, name=name))
        return Var(self, len(self.nodes) - 1)

    def const(self, value) -> Var:
        return self.leaf(value)

    def record(self, value: np.ndarray, parents: Sequence[Var], backward: Backward) -> Var:
        for p in parents:
            if p.tape is not self:
                raise ContractError("operands recorded on different tapes")
        self.nodes.append(
            Node(
                value=np.asarray(value, dtype=np.float64),
                parents=tuple(p.index for p in parents),
                backward=backward,
            )
        )
        return Var(self, len(self.nodes) - 1)

    def leaves(self, params: Dict[str, np.ndarray]) -> Dict[str, Var]:
        return {k: self.leaf(v, name=k) for k, v in params.items()}


class Gradients:
    def __init__(self, grads: List[Optional[np.ndarray]]):
        self._grads = grads

    def __getitem__(self, var: Var) -> np.ndarray:
        g = self._grads[var.index] if var.index < len(self._grads) else None
        if g is None:
            return np.zeros_like(var.value)
        return g

    def of(self, named: Dict[str, Var]) -> Dict[str, np.ndarray]:
        return {k: self[v] for k, v in named.items()}


def grad(tape: Tape, output: Var) -> Gradients:
    """스칼라 출력에 대한 모든 leaf의 gradient (reverse-mode)."""
    if output.tape is not tape:
        raise ContractError("output was not recorded on this tape")
    if output.value.size != 1:
        raise ContractError(f"grad() needs a scalar output, got shape={output.value.shape}")

    n = output.index + 1
    grads: List[Optional[np.ndarray]] = [None] * n
    grads[output.index] = np.ones_like(output.value)

    for i in range(output.index, -1, -1):
        g = grads[i]
        node = tape.nodes[i]
        if g is None or node.backward is None:
            continue
        parent_grads = node.backward(g)
        for pi, pg in zip(node.parents, parent_grads):
            if pg is None:
                continue
            if grads[pi] is None:
                grads[pi] = np.array(pg, dtype=np.float64)
            else:
                grads[pi] = grads[pi] + pg

    return Gradients(grads)

