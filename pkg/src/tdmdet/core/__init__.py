from .tensor import (
    Tensor,
    Parameter,
    ParamSet,
    precision,
    set_mode,
    get_mode,
    active_dtype,
    uniform_init,
)
from .ops import (
    conv2d,
    relu,
    maxpool2x,
    upsample2x,
    concat_channels,
    slice_channels,
    linear,
    softmax_ce,
    softmax_ce_rows,
    softmax_rows,
    smooth_l1,
    l2_normalize,
    add,
    add_n,
    scale,
    mul_scalar_tensor,
    tsum,
    reshape,
    gather_rows,
    gather_box_columns,
)
from .optim import sgd_step
from .gradcheck import grad_check, GradCheckReport

__all__ = [
    "Tensor", "Parameter", "ParamSet", "precision", "set_mode", "get_mode",
    "active_dtype", "uniform_init",
    "conv2d", "relu", "maxpool2x", "upsample2x", "concat_channels",
    "slice_channels", "linear", "softmax_ce", "softmax_ce_rows", "softmax_rows",
    "smooth_l1", "l2_normalize", "add", "add_n", "scale", "mul_scalar_tensor",
    "tsum", "reshape", "gather_rows", "gather_box_columns",
    "sgd_step", "grad_check", "GradCheckReport",
]
