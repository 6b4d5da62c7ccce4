import torch
import torch.nn as nn

from portrait.models.layers import he_uniform_
from portrait.models.network_spec import fd_network_spec, get_preset, shape_trace
from portrait.models.stack import LayerStack


class FaceDecoder(nn.Module):
    """
    Face feature [N, D] -> RGB face image [N, 3, S, S] with pixels in (0, 1).

    Fc1 -> Fc2 -> reshape to the seed map -> twelve transposed convolutions (CBAM after
    ConvTrans8) -> 1x1 conv -> sigmoid.
    """

    def __init__(self, preset: str = 'tiny', seed: int = 0):
        super().__init__()
        self.preset = preset
        self.embed_dim = get_preset(preset).embed_dim
        self.image_size = get_preset(preset).image_size
        self.layers = LayerStack(fd_network_spec(preset))
        self.trained = False
        he_uniform_(self, seed)

    def forward(self, feat: torch.Tensor) -> torch.Tensor:
        return self.layers(feat)

    def fc1_features(self, feat: torch.Tensor) -> torch.Tensor:
        """
        Output of the first fc layer after its ReLU, i.e. D_Fc1(feat).
        """
        if feat.dim() == 1:
            return self.layers(feat.unsqueeze(0), stop_after='Fc1')[0]
        return self.layers(feat, stop_after='Fc1')

    def freeze(self) -> 'FaceDecoder':
        self.requires_grad_(False)
        self.eval()
        return self

    @property
    def frozen(self) -> bool:
        return not any(p.requires_grad for p in self.parameters())


def fd_forward(decoder: FaceDecoder, feat: torch.Tensor) -> torch.Tensor:
    """
    Decode one feature [D] to an image [3, S, S], or a batch [N, D] to [N, 3, S, S].
    """
    if feat.dim() == 1:
        return decoder(feat.unsqueeze(0))[0]
    return decoder(feat)


def fd_shape_trace(input_dims=None, preset: str = 'tiny'):
    return shape_trace(fd_network_spec(preset), input_dims)
