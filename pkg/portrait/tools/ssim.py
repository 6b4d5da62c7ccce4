"""
Multi-scale structural similarity with Gaussian windows, differentiable through torch.autograd.
"""
from typing import Sequence, Tuple

import torch
import torch.nn.functional as F

from portrait.core import functional as PF
from portrait.utils.errors import DimensionError, ParameterError

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
WINDOW_SIZE = 11
SIGMA = 1.5
C1 = 0.01 ** 2
C2 = 0.03 ** 2
# floor for the per-scale means before the fractional power
CS_FLOOR = 1e-6


def scale_weights(n_scales: int) -> Tuple[float, ...]:
    """
    The first n standard scale weights, renormalised to sum to one.
    """
    if not 1 <= n_scales <= len(MS_SSIM_WEIGHTS):
        raise ParameterError(f'MS-SSIM supports 1 to {len(MS_SSIM_WEIGHTS)} scales, got {n_scales}')
    head = MS_SSIM_WEIGHTS[:n_scales]
    total = sum(head)
    return tuple(w / total for w in head)


DEFAULT_SCALE_WEIGHTS = scale_weights(len(MS_SSIM_WEIGHTS))


def gaussian_window(size: int = WINDOW_SIZE, sigma: float = SIGMA, dtype: torch.dtype = None) -> torch.Tensor:
    """
    Normalised 2-D Gaussian window of shape [size, size].
    """
    dtype = dtype or torch.get_default_dtype()
    coords = torch.arange(size, dtype=dtype) - (size - 1) / 2.0
    g = torch.exp(-(coords ** 2) / (2 * sigma ** 2))
    g = g / g.sum()
    return torch.outer(g, g)


def gaussian_filter(x: torch.Tensor, window: torch.Tensor) -> torch.Tensor:
    """
    Valid (unpadded) per-channel Gaussian filtering of [N, C, H, W].
    """
    n, c, h, w = x.shape
    out = PF.conv2d(x.reshape(n * c, 1, h, w), window.to(x.dtype)[None, None])
    return out.reshape(n, c, out.size(2), out.size(3))


def ssim_components(x: torch.Tensor, y: torch.Tensor, window: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Per-image mean SSIM and mean contrast-structure term, each of shape [N].
    """
    mu_x = gaussian_filter(x, window)
    mu_y = gaussian_filter(y, window)
    sigma_x = gaussian_filter(x * x, window) - mu_x * mu_x
    sigma_y = gaussian_filter(y * y, window) - mu_y * mu_y
    sigma_xy = gaussian_filter(x * y, window) - mu_x * mu_y
    cs_map = (2 * sigma_xy + C2) / (sigma_x + sigma_y + C2)
    ssim_map = (2 * mu_x * mu_y + C1) / (mu_x * mu_x + mu_y * mu_y + C1) * cs_map
    return ssim_map.flatten(1).mean(dim=1), cs_map.flatten(1).mean(dim=1)


def _check_pair(x: torch.Tensor, y: torch.Tensor) -> None:
    if x.dim() != 4 or x.shape != y.shape:
        raise DimensionError(f'image pairs must share a [N, C, H, W] shape, got {tuple(x.shape)} and {tuple(y.shape)}')


def ms_ssim(x: torch.Tensor,
            y: torch.Tensor,
            weights: Sequence[float] = DEFAULT_SCALE_WEIGHTS,
            window_size: int = WINDOW_SIZE,
            sigma: float = SIGMA) -> torch.Tensor:
    """
    MS-SSIM averaged over the batch.

    Scale j < M contributes its contrast-structure mean raised to weights[j]; the coarsest scale
    contributes its full SSIM. Images are halved by 2x2 average pooling between scales.

    Args:
        x, y (torch.Tensor): Images [N, C, H, W] (or [C, H, W]) with values in [0, 1].
        weights (Sequence[float]): One weight per scale, summing to one.

    Returns:
        torch.Tensor: Scalar in [0, 1]; exactly 1 for identical images.
    """
    if x.dim() == 3:
        x, y = x.unsqueeze(0), y.unsqueeze(0)
    _check_pair(x, y)
    n_scales = len(weights)
    coarsest = min(x.shape[2:]) // (2 ** (n_scales - 1))
    if coarsest < window_size:
        raise ParameterError(f'images of size {tuple(x.shape[2:])} are too small for {n_scales} scales '
                             f'with an {window_size}-pixel window')
    window = gaussian_window(window_size, sigma, dtype=x.dtype)
    result = torch.ones(x.size(0), dtype=x.dtype)
    for j, w in enumerate(weights):
        ssim, cs = ssim_components(x, y, window)
        term = ssim if j == n_scales - 1 else cs
        result = result * term.clamp(min=CS_FLOOR) ** w
        if j < n_scales - 1:
            x, y = F.avg_pool2d(x, 2), F.avg_pool2d(y, 2)
    return result.mean()
