"""
Validated tensor primitives used by every network and loss.

Each op checks its shape contract, dispatches to torch.nn.functional and verifies that the
forward result is finite. Gradients come from torch.autograd.
"""
from typing import Optional, Tuple, Union

import torch
import torch.nn.functional as F

from portrait.core.tensor import check_finite
from portrait.utils.errors import ContractError, DimensionError, ParameterError

IntPair = Union[int, Tuple[int, int]]


def _pair(value: IntPair) -> Tuple[int, int]:
    if isinstance(value, int):
        return value, value
    return tuple(value)


def _expect_dim(tensor: torch.Tensor, ndim: int, name: str) -> None:
    if tensor.dim() != ndim:
        raise DimensionError(f'{name} must have {ndim} dims, got shape {tuple(tensor.shape)}')
    if any(s <= 0 for s in tensor.shape):
        raise DimensionError(f'{name} has an empty axis: shape {tuple(tensor.shape)}')


def conv2d(input: torch.Tensor,
           weight: torch.Tensor,
           bias: Optional[torch.Tensor] = None,
           stride: IntPair = 1,
           padding: IntPair = 0) -> torch.Tensor:
    """
    2-D cross-correlation. input [N, C, H, W], weight [K, C, kh, kw], bias [K].

    Output spatial dims are floor((H + 2ph - kh) / sh) + 1 (likewise W).
    """
    _expect_dim(input, 4, 'conv2d input')
    _expect_dim(weight, 4, 'conv2d weight')
    (sh, sw), (ph, pw) = _pair(stride), _pair(padding)
    if sh <= 0 or sw <= 0 or ph < 0 or pw < 0:
        raise ParameterError(f'conv2d needs positive stride and non-negative padding, got stride={stride}, padding={padding}')
    if weight.size(1) != input.size(1):
        raise DimensionError(f'conv2d axis C: input has {input.size(1)} channels, weight expects {weight.size(1)}')
    kh, kw = weight.shape[2:]
    if kh > input.size(2) + 2 * ph:
        raise DimensionError(f'conv2d axis H: kernel {kh} exceeds padded height {input.size(2) + 2 * ph}')
    if kw > input.size(3) + 2 * pw:
        raise DimensionError(f'conv2d axis W: kernel {kw} exceeds padded width {input.size(3) + 2 * pw}')
    if bias is not None and bias.shape != (weight.size(0),):
        raise DimensionError(f'conv2d axis K: bias shape {tuple(bias.shape)} does not match {weight.size(0)} filters')
    out = F.conv2d(input, weight, bias, stride=(sh, sw), padding=(ph, pw))
    return check_finite(out, 'conv2d')


def conv_transpose2d(input: torch.Tensor,
                     weight: torch.Tensor,
                     bias: Optional[torch.Tensor] = None,
                     stride: IntPair = 1,
                     padding: IntPair = 0,
                     output_padding: IntPair = 0) -> torch.Tensor:
    """
    2-D transposed convolution. input [N, C, H, W], weight [C, K, kh, kw], bias [K].

    Output spatial dims are (H - 1) * sh - 2ph + kh + oph (likewise W).
    """
    _expect_dim(input, 4, 'conv_transpose2d input')
    _expect_dim(weight, 4, 'conv_transpose2d weight')
    (sh, sw), (ph, pw), (oh, ow) = _pair(stride), _pair(padding), _pair(output_padding)
    if sh <= 0 or sw <= 0 or ph < 0 or pw < 0 or oh < 0 or ow < 0:
        raise ParameterError(f'conv_transpose2d got stride={stride}, padding={padding}, output_padding={output_padding}')
    if oh >= sh or ow >= sw:
        raise ParameterError(f'conv_transpose2d output_padding {output_padding} must be smaller than stride {stride}')
    if weight.size(0) != input.size(1):
        raise DimensionError(f'conv_transpose2d axis C: input has {input.size(1)} channels, weight expects {weight.size(0)}')
    if bias is not None and bias.shape != (weight.size(1),):
        raise DimensionError(f'conv_transpose2d axis K: bias shape {tuple(bias.shape)} does not match {weight.size(1)} outputs')
    kh, kw = weight.shape[2:]
    out_h = (input.size(2) - 1) * sh - 2 * ph + kh + oh
    out_w = (input.size(3) - 1) * sw - 2 * pw + kw + ow
    if out_h <= 0:
        raise DimensionError(f'conv_transpose2d axis H: output height {out_h} is not positive')
    if out_w <= 0:
        raise DimensionError(f'conv_transpose2d axis W: output width {out_w} is not positive')
    out = F.conv_transpose2d(input, weight, bias, stride=(sh, sw), padding=(ph, pw), output_padding=(oh, ow))
    return check_finite(out, 'conv_transpose2d')


def max_pool2d(input: torch.Tensor, kernel: IntPair, stride: Optional[IntPair] = None) -> torch.Tensor:
    """
    Max pooling without padding. The gradient of each window goes to its argmax; ties resolve to
    the lowest linear index (the first maximum torch encounters in row-major scan order).
    """
    _expect_dim(input, 4, 'max_pool2d input')
    (kh, kw) = _pair(kernel)
    (sh, sw) = _pair(stride) if stride is not None else (kh, kw)
    if min(kh, kw, sh, sw) <= 0:
        raise ParameterError(f'max_pool2d needs positive kernel and stride, got kernel={kernel}, stride={stride}')
    if kh > input.size(2):
        raise DimensionError(f'max_pool2d axis H: kernel {kh} exceeds input height {input.size(2)}')
    if kw > input.size(3):
        raise DimensionError(f'max_pool2d axis W: kernel {kw} exceeds input width {input.size(3)}')
    out = F.max_pool2d(input, kernel_size=(kh, kw), stride=(sh, sw))
    return check_finite(out, 'max_pool2d')


def avg_pool_global(input: torch.Tensor) -> torch.Tensor:
    """
    Mean over the spatial axes: [N, C, H, W] -> [N, C, 1, 1].
    """
    _expect_dim(input, 4, 'avg_pool_global input')
    return check_finite(input.mean(dim=(2, 3), keepdim=True), 'avg_pool_global')


def max_pool_global(input: torch.Tensor) -> torch.Tensor:
    _expect_dim(input, 4, 'max_pool_global input')
    return max_pool2d(input, kernel=tuple(input.shape[2:]), stride=tuple(input.shape[2:]))


def fully_connected(input: torch.Tensor, weight: torch.Tensor, bias: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    Affine map input [N, D] @ weight [D, E] + bias [E].
    """
    _expect_dim(input, 2, 'fully_connected input')
    _expect_dim(weight, 2, 'fully_connected weight')
    if input.size(1) != weight.size(0):
        raise DimensionError(f'fully_connected axis D: input has {input.size(1)} features, weight expects {weight.size(0)}')
    if bias is not None and bias.shape != (weight.size(1),):
        raise DimensionError(f'fully_connected axis E: bias shape {tuple(bias.shape)} does not match {weight.size(1)} outputs')
    out = input @ weight
    if bias is not None:
        out = out + bias
    return check_finite(out, 'fully_connected')


def relu(input: torch.Tensor) -> torch.Tensor:
    # torch defines the subgradient at 0 as 0
    return check_finite(F.relu(input), 'relu')


def sigmoid(input: torch.Tensor) -> torch.Tensor:
    return check_finite(torch.sigmoid(input), 'sigmoid')


def backward(loss: torch.Tensor) -> None:
    """
    Back-propagate a scalar loss, populating `.grad` on every leaf that requires grad.
    The recorded graph is freed afterwards.
    """
    if loss.numel() != 1 or loss.dim() > 1:
        raise ContractError(f'backward needs a scalar loss, got shape {tuple(loss.shape)}')
    if not loss.requires_grad or loss.grad_fn is None:
        raise ContractError('backward called on a loss with no recorded operations')
    check_finite(loss.detach(), 'loss')
    loss.reshape(()).backward()
