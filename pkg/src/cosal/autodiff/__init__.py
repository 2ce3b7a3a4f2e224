from cosal.autodiff.gradcheck import finite_diff_check
from cosal.autodiff.kernels import BACKEND
from cosal.autodiff.tensor import (
    LOG_FLOOR,
    Tensor,
    adaptive_avg_pool,
    add,
    backward,
    channel_norm,
    concat,
    conv2d,
    div,
    exp,
    grad_enabled,
    log,
    matmul,
    mul,
    no_grad,
    relu,
    reshape,
    scale,
    sigmoid,
    softmax,
    softplus,
    sqrt,
    sub,
    tanh,
    tmean,
    transpose,
    tree_mean,
    tree_sum,
    tsum,
    upsample_nearest2x,
)

__all__ = [
    "BACKEND",
    "LOG_FLOOR",
    "Tensor",
    "adaptive_avg_pool",
    "add",
    "backward",
    "channel_norm",
    "concat",
    "conv2d",
    "div",
    "exp",
    "finite_diff_check",
    "grad_enabled",
    "log",
    "matmul",
    "mul",
    "no_grad",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "softmax",
    "softplus",
    "sqrt",
    "sub",
    "tanh",
    "tmean",
    "transpose",
    "tree_mean",
    "tree_sum",
    "tsum",
    "upsample_nearest2x",
]
