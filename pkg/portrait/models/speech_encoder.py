import logging
from enum import Enum
from typing import Optional, Union

import torch
import torch.nn as nn

from portrait.core.tensor import as_batch
from portrait.models.layers import Linear, he_uniform_
from portrait.models.network_spec import get_preset, se_network_spec
from portrait.models.stack import LayerStack
from portrait.utils.errors import DimensionError, ParameterError, StateError

logger = logging.getLogger(__name__)

# Fc2 weights start at this fraction of the He bound; the fresh residual stays small next to a prior
RESIDUAL_INIT_SCALE = 0.1


class FusionMode(str, Enum):
    NONE = 'none'
    SUM = 'sum'
    SUM_FC = 'sum_fc'


def _as_fusion(mode: Union[str, FusionMode]) -> FusionMode:
    try:
        return FusionMode(mode)
    except ValueError:
        raise ParameterError(f'unknown fusion mode {mode!r}, choose from {[m.value for m in FusionMode]}')


class SpeechEncoder(nn.Module):
    """
    Spectrogram -> speech feature S_f, optionally fused with a prior face feature.

    The convolutional trunk follows the encoder table (five convs, three max pools, CBAM, 1x1 conv
    Fc1, global average pooling, Fc2). In sum_fc mode a fusion fc D -> D is added after the
    prior sum; it starts as the identity map with zero bias.
    """

    def __init__(self, preset: str = 'tiny', fusion: Union[str, FusionMode] = FusionMode.NONE, seed: int = 0):
        super().__init__()
        self.preset = preset
        self.fusion = _as_fusion(fusion)
        self.embed_dim = get_preset(preset).embed_dim
        self.layers = LayerStack(se_network_spec(preset))
        self.fusion_fc = Linear(self.embed_dim, self.embed_dim) if self.fusion == FusionMode.SUM_FC else None
        he_uniform_(self, seed)
        with torch.no_grad():
            self.layers.Fc2.weight.mul_(RESIDUAL_INIT_SCALE)
            if self.fusion_fc is not None:
                self.fusion_fc.weight.copy_(torch.eye(self.embed_dim))
                self.fusion_fc.bias.zero_()

    @property
    def input_dims(self):
        return self.layers.spec.input_dims

    def forward(self, spec: torch.Tensor) -> torch.Tensor:
        """
        Args:
            spec (torch.Tensor): Spectrogram batch [N, 1, F, T].

        Returns:
            torch.Tensor: Speech features S_f of shape [N, D].
        """
        return self.layers(spec)

    def encode(self, spec: torch.Tensor, prior=None) -> torch.Tensor:
        """
        se_forward followed by fuse_prior with this encoder's fusion mode.
        """
        return fuse_prior(self(spec), prior, self.fusion, self.fusion_fc)


def se_forward(encoder: SpeechEncoder, spec) -> torch.Tensor:
    """
    Run the encoder on one spectrogram ([1, F, T] tensor or Spectrogram) or a batch [N, 1, F, T].

    Returns:
        torch.Tensor: [D] for a single spectrogram, [N, D] for a batch.
    """
    batch, single = as_batch(spec)
    out = encoder(batch)
    return out[0] if single else out


def fuse_prior(s_f: torch.Tensor,
               prior=None,
               mode: Union[str, FusionMode] = FusionMode.NONE,
               fusion_fc: Optional[nn.Module] = None) -> torch.Tensor:
    """
    Residual prior fusion.

    Args:
        s_f (torch.Tensor): Speech feature [D] or [N, D].
        prior: PriorFeature (or its vector [D], or per-sample vectors [N, D]).
        mode (FusionMode): none -> s_f; sum -> s_f + prior; sum_fc -> fusion_fc(s_f + prior).
        fusion_fc (nn.Module, optional): Required for sum_fc.

    Returns:
        torch.Tensor: Final face feature with the shape of s_f.
    """
    mode = _as_fusion(mode)
    if mode == FusionMode.NONE:
        return s_f
    if prior is None:
        raise StateError(f'fusion mode {mode.value} needs a prior feature')
    vec = getattr(prior, 'vec', prior)
    if vec.size(-1) != s_f.size(-1):
        raise DimensionError(f'fusion axis D: speech feature has {s_f.size(-1)} dims, prior has {vec.size(-1)}')
    fused = s_f + vec.to(dtype=s_f.dtype)
    if mode == FusionMode.SUM:
        return fused
    if fusion_fc is None:
        raise StateError('fusion mode sum_fc needs a fusion fc layer')
    if fused.dim() == 1:
        return fusion_fc(fused.unsqueeze(0))[0]
    return fusion_fc(fused)
