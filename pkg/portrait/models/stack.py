"""
Builds a runnable module from a NetworkSpec table.
"""
from typing import Optional

import torch
import torch.nn as nn

from portrait.core import functional as PF
from portrait.models.cbam import CBAM
from portrait.models.layers import Conv2d, ConvTranspose2d, Linear, MaxPool2d
from portrait.models.network_spec import (AVGPOOL_GLOBAL, CBAM as CBAM_KIND, CONV, CONV_TRANSPOSE, FC, MAXPOOL,
                                          RESHAPE, NetworkSpec, shape_trace)
from portrait.utils.errors import DimensionError

ACTIVATIONS = {
    'relu': PF.relu,
    'sigmoid': PF.sigmoid,
}


class LayerStack(nn.Module):
    """
    Sequential network with one named submodule per parameterised table row.

    Submodule names equal the table's layer names (Conv1, MaxPool3, Fc2, ...), so checkpoint
    records read `Conv1.weight`, `CBAM.mlp_fc1.bias` and so on.
    """

    def __init__(self, spec: NetworkSpec):
        super().__init__()
        self.spec = spec
        self.trace = shape_trace(spec)
        self.order = []
        dims = spec.input_dims
        for layer, (_, out_dims) in zip(spec.layers, self.trace):
            module = self._build(layer, dims)
            if module is not None:
                self.add_module(layer.name, module)
            self.order.append(layer)
            dims = out_dims

    @staticmethod
    def _build(layer, in_dims) -> Optional[nn.Module]:
        if layer.kind == CONV:
            return Conv2d(in_dims[0], layer.out, layer.kernel, stride=layer.stride, padding=layer.padding)
        if layer.kind == CONV_TRANSPOSE:
            return ConvTranspose2d(in_dims[0], layer.out, layer.kernel, stride=layer.stride,
                                   padding=layer.padding, output_padding=layer.output_padding)
        if layer.kind == MAXPOOL:
            return MaxPool2d(layer.kernel, layer.stride)
        if layer.kind == CBAM_KIND:
            return CBAM(in_dims[0], reduction=layer.reduction, kernel_size=layer.kernel[0])
        if layer.kind == FC:
            n_in = 1
            for d in in_dims:
                n_in *= d
            return Linear(n_in, layer.out)
        return None

    @property
    def output_dims(self):
        return self.trace[-1][1]

    def forward(self, x: torch.Tensor, stop_after: Optional[str] = None) -> torch.Tensor:
        """
        Args:
            x (torch.Tensor): Batched input whose per-sample dims equal spec.input_dims.
            stop_after (str, optional): Return the (activated) output of this layer instead.
        """
        if tuple(x.shape[1:]) != tuple(self.spec.input_dims):
            raise DimensionError(f'{self.spec.name}: expected input dims {self.spec.input_dims}, '
                                 f'got {tuple(x.shape[1:])}')
        for layer in self.order:
            if layer.kind == AVGPOOL_GLOBAL:
                x = PF.avg_pool_global(x)
            elif layer.kind == RESHAPE:
                x = x.reshape(x.size(0), *layer.out)
            else:
                if layer.kind == FC and x.dim() == 4:
                    x = x.flatten(1)
                x = getattr(self, layer.name)(x)
            if layer.activation is not None:
                x = ACTIVATIONS[layer.activation](x)
            if layer.name == stop_after:
                return x
        return x
