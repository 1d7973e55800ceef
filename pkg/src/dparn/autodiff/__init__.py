"""Dense-tensor numerics with reverse-mode automatic differentiation."""

from .conv import conv2d, conv2d_transpose
from .module import Module, Parameter
from .nn import batch_norm, instance_norm, lstm, lstm_cell
from .tensor import (
    Tensor,
    add,
    concat,
    default_dtype,
    exp,
    get_default_dtype,
    getitem,
    log,
    matmul,
    mean,
    mul,
    no_grad,
    power,
    prelu,
    relu,
    reshape,
    set_default_dtype,
    sigmoid,
    softmax,
    sqrt,
    stack,
    sub,
    tanh,
    transpose,
    tsum,
)

__all__ = [
    "Module",
    "Parameter",
    "Tensor",
    "add",
    "batch_norm",
    "concat",
    "conv2d",
    "conv2d_transpose",
    "default_dtype",
    "exp",
    "get_default_dtype",
    "getitem",
    "instance_norm",
    "log",
    "lstm",
    "lstm_cell",
    "matmul",
    "mean",
    "mul",
    "no_grad",
    "power",
    "prelu",
    "relu",
    "reshape",
    "set_default_dtype",
    "sigmoid",
    "softmax",
    "sqrt",
    "stack",
    "sub",
    "tanh",
    "transpose",
    "tsum",
]
