"""
Parameterised layers whose forward passes run through the validated primitives.
"""
import math
from typing import Tuple, Union

import torch
import torch.nn as nn

from portrait.core import functional as PF
from portrait.utils.errors import ParameterError

IntPair = Union[int, Tuple[int, int]]


class Conv2d(nn.Conv2d):

    def __init__(self, in_channels: int, out_channels: int, kernel_size: IntPair,
                 stride: IntPair = 1, padding: IntPair = 0, bias: bool = True):
        super().__init__(in_channels, out_channels, kernel_size, stride=stride, padding=padding, bias=bias)

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        return PF.conv2d(input, self.weight, self.bias, stride=self.stride, padding=self.padding)


class ConvTranspose2d(nn.ConvTranspose2d):

    def __init__(self, in_channels: int, out_channels: int, kernel_size: IntPair,
                 stride: IntPair = 1, padding: IntPair = 0, output_padding: IntPair = 0, bias: bool = True):
        stride_pair = (stride, stride) if isinstance(stride, int) else tuple(stride)
        op_pair = (output_padding, output_padding) if isinstance(output_padding, int) else tuple(output_padding)
        if any(o >= s for o, s in zip(op_pair, stride_pair)):
            raise ParameterError(f'output_padding {output_padding} must be smaller than stride {stride}')
        super().__init__(in_channels, out_channels, kernel_size, stride=stride, padding=padding,
                         output_padding=output_padding, bias=bias)

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        return PF.conv_transpose2d(input, self.weight, self.bias, stride=self.stride,
                                   padding=self.padding, output_padding=self.output_padding)


class Linear(nn.Linear):
    """
    Fully connected layer. torch stores the weight as [E, D]; the primitive takes [D, E].
    """

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        return PF.fully_connected(input, self.weight.t(), self.bias)


class MaxPool2d(nn.Module):

    def __init__(self, kernel_size: IntPair, stride: IntPair = None):
        super().__init__()
        self.kernel_size = kernel_size
        self.stride = stride if stride is not None else kernel_size

    def forward(self, input: torch.Tensor) -> torch.Tensor:
        return PF.max_pool2d(input, self.kernel_size, self.stride)

    def extra_repr(self) -> str:
        return f'kernel_size={self.kernel_size}, stride={self.stride}'


def fan_in(layer: nn.Module) -> float:
    if isinstance(layer, ConvTranspose2d):
        in_channels, _, kh, kw = layer.weight.shape
        sh, sw = layer.stride
        return in_channels * kh * kw / (sh * sw)
    if isinstance(layer, Conv2d):
        _, in_channels, kh, kw = layer.weight.shape
        return in_channels * kh * kw
    if isinstance(layer, Linear):
        return layer.weight.size(1)
    raise TypeError(f'no fan-in rule for {type(layer).__name__}')


@torch.no_grad()
def he_uniform_(module: nn.Module, seed: int) -> nn.Module:
    """
    Seeded He-uniform initialisation: weights ~ U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), biases 0.

    Layers are visited in registration order, so the same seed always yields the same parameters.

    Args:
        module (nn.Module): Network to initialise in place.
        seed (int): Seed of the private generator; the global RNG is left untouched.

    Returns:
        nn.Module: The same module.
    """
    generator = torch.Generator().manual_seed(seed)
    for layer in module.modules():
        if not isinstance(layer, (Conv2d, ConvTranspose2d, Linear)):
            continue
        bound = math.sqrt(6.0 / fan_in(layer))
        weight = torch.empty(layer.weight.shape, dtype=torch.float64).uniform_(-bound, bound, generator=generator)
        layer.weight.copy_(weight)
        if layer.bias is not None:
            layer.bias.zero_()
    return module
