"""
Channel-then-spatial attention block.

The channel gate squeezes each map with average and max pooling, runs both through one shared
two-layer MLP and adds the results before the sigmoid. The spatial gate convolves the stacked
channel-mean and channel-max maps with a same-padded odd kernel.
"""
import torch
import torch.nn as nn

from portrait.core import functional as PF
from portrait.models.layers import Conv2d, Linear
from portrait.utils.errors import DimensionError, ParameterError


class CBAM(nn.Module):

    def __init__(self, channels: int, reduction: int = 16, kernel_size: int = 7):
        """
        Args:
            channels (int): Number of input channels C.
            reduction (int): MLP reduction ratio r; must divide C.
            kernel_size (int): Odd spatial kernel size k.
        """
        super().__init__()
        if reduction <= 0 or channels % reduction != 0:
            raise ParameterError(f'reduction ratio {reduction} does not divide {channels} channels')
        if kernel_size <= 0 or kernel_size % 2 == 0:
            raise ParameterError(f'spatial kernel must be odd, got {kernel_size}')
        self.channels = channels
        self.reduction = reduction
        self.kernel_size = kernel_size
        self.mlp_fc1 = Linear(channels, channels // reduction)
        self.mlp_fc2 = Linear(channels // reduction, channels)
        self.spatial = Conv2d(2, 1, kernel_size, stride=1, padding=kernel_size // 2)

    def mlp(self, v: torch.Tensor) -> torch.Tensor:
        return self.mlp_fc2(PF.relu(self.mlp_fc1(v)))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return cbam(x, self)

    def extra_repr(self) -> str:
        return f'channels={self.channels}, reduction={self.reduction}, kernel_size={self.kernel_size}'


def _check_input(x: torch.Tensor, params: CBAM) -> None:
    if x.dim() != 4:
        raise DimensionError(f'attention input must be [N, C, H, W], got {tuple(x.shape)}')
    if x.size(1) != params.channels:
        raise DimensionError(f'attention axis C: input has {x.size(1)} channels, block expects {params.channels}')


def channel_attention(x: torch.Tensor, params: CBAM) -> torch.Tensor:
    """
    Channel gate sigmoid(MLP(avgpool(x)) + MLP(maxpool(x))) of shape [N, C, 1, 1].
    """
    _check_input(x, params)
    n, c = x.shape[:2]
    avg = PF.avg_pool_global(x).reshape(n, c)
    peak = PF.max_pool_global(x).reshape(n, c)
    gate = PF.sigmoid(params.mlp(avg) + params.mlp(peak))
    return gate.reshape(n, c, 1, 1)


def spatial_attention(x: torch.Tensor, params: CBAM) -> torch.Tensor:
    """
    Spatial gate sigmoid(conv([mean_c(x); max_c(x)])) of shape [N, 1, H, W].
    """
    _check_input(x, params)
    pooled = torch.cat([x.mean(dim=1, keepdim=True), x.max(dim=1, keepdim=True).values], dim=1)
    return PF.sigmoid(params.spatial(pooled))


def cbam(x: torch.Tensor, params: CBAM) -> torch.Tensor:
    x = channel_attention(x, params) * x
    return spatial_attention(x, params) * x
