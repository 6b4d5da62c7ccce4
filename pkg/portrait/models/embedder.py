import torch
import torch.nn as nn
import torch.nn.functional as F

from portrait.core import functional as PF
from portrait.models.layers import Conv2d, Linear, he_uniform_
from portrait.models.network_spec import get_preset
from portrait.utils.errors import DimensionError


class FaceEmbedder(nn.Module):
    """
    Seeded, frozen face-feature extractor standing in for a pretrained face recognition CNN.

    Three stride-2 convs, adaptive average pooling to a g x g grid, then Fc1 -> ReLU -> Fc2 gives
    the D-dim face feature. The auxiliary `fc3` head maps a feature to the identity logits space
    used by the identity term of the encoder loss.
    """

    def __init__(self, preset: str = 'tiny', seed: int = 1234):
        super().__init__()
        p = get_preset(preset)
        c1, c2, c3 = p.embedder_channels
        self.preset = preset
        self.seed = seed
        self.image_size = p.image_size
        self.embed_dim = p.embed_dim
        self.grid = p.embedder_grid
        self.conv1 = Conv2d(3, c1, 3, stride=2, padding=1)
        self.conv2 = Conv2d(c1, c2, 3, stride=2, padding=1)
        self.conv3 = Conv2d(c2, c3, 3, stride=2, padding=1)
        self.fc1 = Linear(c3 * self.grid * self.grid, p.embed_dim)
        self.fc2 = Linear(p.embed_dim, p.embed_dim)
        self.fc3 = Linear(p.embed_dim, p.fc3_dim)
        he_uniform_(self, seed)
        self.requires_grad_(False)
        self.eval()

    @property
    def frozen(self) -> bool:
        return not any(p.requires_grad for p in self.parameters())

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        """
        Args:
            image (torch.Tensor): [N, 3, S, S] (or [3, S, S]) with values in [0, 1].

        Returns:
            torch.Tensor: Face features [N, D] (or [D]).
        """
        if image.dim() == 3:
            return self(image.unsqueeze(0))[0]
        if tuple(image.shape[1:]) != (3, self.image_size, self.image_size):
            raise DimensionError(f'embedder expects images of shape (3, {self.image_size}, {self.image_size}), '
                                 f'got {tuple(image.shape[1:])}')
        x = PF.relu(self.conv1(image))
        x = PF.relu(self.conv2(x))
        x = PF.relu(self.conv3(x))
        x = F.adaptive_avg_pool2d(x, self.grid).flatten(1)
        return self.fc2(PF.relu(self.fc1(x)))

    def identity_logits(self, feat: torch.Tensor) -> torch.Tensor:
        """
        V_Fc3: feature [N, D] (or [D]) -> identity logits.
        """
        if feat.dim() == 1:
            return self.fc3(feat.unsqueeze(0))[0]
        return self.fc3(feat)

    def embed_batches(self, images: torch.Tensor, batch_size: int = 64) -> torch.Tensor:
        with torch.no_grad():
            return torch.cat([self(images[i:i + batch_size]) for i in range(0, len(images), batch_size)])
