from gatedvigat.numkernel.ops import (
    as_mat,
    as_vec,
    bce,
    cross_entropy,
    dissimilarity,
    matmul,
    minmax_norm,
    row_softmax,
)
from gatedvigat.numkernel.tape import Gradients, Tape, Var, grad

__all__ = [
    "Gradients",
    "Tape",
    "Var",
    "as_mat",
    "as_vec",
    "bce",
    "cross_entropy",
    "dissimilarity",
    "grad",
    "matmul",
    "minmax_norm",
    "row_softmax",
]
