"""
Training objectives: the decoder's image + feature loss and the encoder's three-term loss.
"""
from dataclasses import dataclass
from typing import Callable, Dict, Tuple

import torch
import torch.nn as nn

from portrait.models.network_spec import get_preset
from portrait.tools.ssim import DEFAULT_SCALE_WEIGHTS, SIGMA, WINDOW_SIZE, gaussian_filter, gaussian_window, ms_ssim, scale_weights
from portrait.tools.tool import Tool
from portrait.utils.errors import ContractError, DimensionError, InputError, ParameterError
from portrait.utils.format import format_checked


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.84
    lambda1: float = 1.0
    lambda2: float = 0.04
    lambda3: float = 1.2
    scale_weights: Tuple[float, ...] = DEFAULT_SCALE_WEIGHTS
    window_size: int = WINDOW_SIZE
    sigma: float = SIGMA

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ParameterError(f'alpha must lie in [0, 1], got {self.alpha}')
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ParameterError(f'lambdas must be non-negative, got {(self.lambda1, self.lambda2, self.lambda3)}')
        if abs(sum(self.scale_weights) - 1.0) > 1e-9:
            raise ParameterError(f'MS-SSIM scale weights must sum to 1, got {sum(self.scale_weights)}')

    @classmethod
    def for_preset(cls, preset: str, **overrides) -> 'LossWeights':
        return cls(scale_weights=scale_weights(get_preset(preset).msssim_scales), **overrides)


def image_loss(x: torch.Tensor, y: torch.Tensor, w: LossWeights = LossWeights()) -> torch.Tensor:
    """
    alpha * (1 - MS-SSIM(x, y)) + (1 - alpha) * mean(G * |x - y|), G the finest-scale Gaussian window.
    """
    if x.dim() == 3:
        x, y = x.unsqueeze(0), y.unsqueeze(0)
    if x.shape != y.shape:
        raise DimensionError(f'image_loss needs equal shapes, got {tuple(x.shape)} and {tuple(y.shape)}')
    ssim_term = 1.0 - ms_ssim(x, y, w.scale_weights, w.window_size, w.sigma)
    window = gaussian_window(w.window_size, w.sigma, dtype=x.dtype)
    l1_term = gaussian_filter((x - y).abs(), window).mean()
    return w.alpha * ssim_term + (1.0 - w.alpha) * l1_term


def _norms(v: torch.Tensor, what: str) -> torch.Tensor:
    norms = v.norm(dim=-1)
    if (norms == 0).any():
        raise InputError(f'{what} contains a zero vector')
    return norms


def cosine_loss(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """
    1 - a.b / (|a| |b|), in [0, 2]. Batched inputs [N, D] give the batch mean.
    """
    if a.shape != b.shape:
        raise DimensionError(f'cosine_loss needs equal shapes, got {tuple(a.shape)} and {tuple(b.shape)}')
    cos = (a * b).sum(dim=-1) / (_norms(a, 'first argument') * _norms(b, 'second argument'))
    return (1.0 - cos).mean()


def _check_frozen(component, name: str) -> None:
    owner = getattr(component, '__self__', component)
    if isinstance(owner, nn.Module) and any(p.requires_grad for p in owner.parameters()):
        raise ContractError(f'{name} must be frozen')


def fd_total_loss_terms(gen: torch.Tensor, orig: torch.Tensor, embedder: nn.Module,
                        w: LossWeights = LossWeights()) -> Dict[str, torch.Tensor]:
    _check_frozen(embedder, 'face embedder')
    l_image = image_loss(gen, orig, w)
    l_cs = cosine_loss(embedder(gen), embedder(orig))
    return {'image': l_image, 'cs': l_cs, 'total': l_image + l_cs}


def fd_total_loss(gen: torch.Tensor, orig: torch.Tensor, embedder: nn.Module,
                  w: LossWeights = LossWeights()) -> torch.Tensor:
    """
    image_loss(gen, orig) + cosine_loss(embedder(gen), embedder(orig)).
    """
    return fd_total_loss_terms(gen, orig, embedder, w)['total']


def se_tri_loss_terms(face_feat: torch.Tensor,
                      speech_feat: torch.Tensor,
                      fd_fc1: Callable[[torch.Tensor], torch.Tensor],
                      vgg_fc3: Callable[[torch.Tensor], torch.Tensor],
                      w: LossWeights = LossWeights()) -> Dict[str, torch.Tensor]:
    """
    The weighted terms of the encoder loss, each averaged over the batch:

        unit     = lambda1 * || F/|F| - S/|S| ||_2^2
        hidden   = lambda2 * sum |fd_fc1(F) - fd_fc1(S)|
        identity = lambda3 * cosine_loss(vgg_fc3(F), vgg_fc3(S))

    The face feature F is a fixed target; gradients reach only the speech feature S.
    """
    _check_frozen(fd_fc1, 'decoder Fc1')
    _check_frozen(vgg_fc3, 'embedder fc3')
    if face_feat.shape != speech_feat.shape:
        raise DimensionError(f'feature shapes differ: {tuple(face_feat.shape)} vs {tuple(speech_feat.shape)}')
    target = face_feat.detach()
    unit_f = target / _norms(target, 'face feature').unsqueeze(-1)
    unit_s = speech_feat / _norms(speech_feat, 'speech feature').unsqueeze(-1)
    unit = w.lambda1 * ((unit_f - unit_s) ** 2).sum(dim=-1).mean()
    hidden = w.lambda2 * (fd_fc1(target) - fd_fc1(speech_feat)).abs().sum(dim=-1).mean()
    identity = w.lambda3 * cosine_loss(vgg_fc3(target), vgg_fc3(speech_feat))
    return {'unit': unit, 'hidden': hidden, 'identity': identity, 'total': unit + hidden + identity}


def se_tri_loss(face_feat: torch.Tensor,
                speech_feat: torch.Tensor,
                fd_fc1: Callable[[torch.Tensor], torch.Tensor],
                vgg_fc3: Callable[[torch.Tensor], torch.Tensor],
                w: LossWeights = LossWeights()) -> torch.Tensor:
    return se_tri_loss_terms(face_feat, speech_feat, fd_fc1, vgg_fc3, w)['total']


class ImageLoss(Tool):
    """
    Mixed MS-SSIM + Gaussian-weighted L1 image reconstruction loss.
    """

    def __init__(self, weights: LossWeights = LossWeights(), **kwargs):
        super().__init__(weights=weights)

    @format_checked
    def __call__(self, x: torch.Tensor, y: torch.Tensor) -> torch.Tensor:
        return image_loss(x, y, self.weights)

    def __str__(self):
        return 'image_loss(x: Tensor, y: Tensor) -> loss: Tensor'

    def __repr__(self):
        return (f"Computes alpha * (1 - MS-SSIM) + (1 - alpha) * Gaussian-weighted L1 between two image batches "
                f"with alpha={self.weights.alpha} over {len(self.weights.scale_weights)} scales. "
                "For example, image_loss(x, x) returns 0.")


class CosineSimilarityLoss(Tool):
    """
    One minus cosine similarity.
    """

    def __init__(self, **kwargs):
        super().__init__()

    @format_checked
    def __call__(self, a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
        return cosine_loss(a, b)

    def __str__(self):
        return 'cosine_loss(a: Tensor, b: Tensor) -> loss: Tensor'

    def __repr__(self):
        return ("Computes 1 - cos(a, b), averaged over the batch. "
                "For example, cosine_loss(a, -a) returns 2 and cosine_loss((1, 0), (0, 1)) returns 1.")


class FaceDecoderLoss(Tool):
    """
    Decoder objective: image loss plus feature cosine loss through the frozen embedder.
    """

    def __init__(self, embedder: nn.Module, weights: LossWeights = LossWeights(), **kwargs):
        _check_frozen(embedder, 'face embedder')
        super().__init__(embedder=embedder, weights=weights, image_loss=ImageLoss(weights),
                         cosine_loss=CosineSimilarityLoss())

    @format_checked
    def __call__(self, gen: torch.Tensor, orig: torch.Tensor) -> Dict[str, torch.Tensor]:
        _check_frozen(self.embedder, 'face embedder')
        l_image = self.image_loss(gen, orig)
        l_cs = self.cosine_loss(self.embedder(gen), self.embedder(orig))
        return {'image': l_image, 'cs': l_cs, 'total': l_image + l_cs}

    def __str__(self):
        return 'fd_total_loss(gen: Tensor, orig: Tensor) -> terms: Dict[str, Tensor]'

    def __repr__(self):
        return ("Computes image_loss(gen, orig) + cosine_loss(embedder(gen), embedder(orig)) and returns the "
                "terms 'image', 'cs' and 'total'. The embedder receives no gradient.")


class SpeechEncoderLoss(Tool):
    """
    Encoder objective against a frozen decoder Fc1 and the embedder's fc3 head.
    """

    def __init__(self, decoder: nn.Module, embedder: nn.Module, weights: LossWeights = LossWeights(), **kwargs):
        _check_frozen(decoder, 'face decoder')
        _check_frozen(embedder, 'face embedder')
        super().__init__(decoder=decoder, embedder=embedder, weights=weights)

    @format_checked
    def __call__(self, face_feat: torch.Tensor, speech_feat: torch.Tensor) -> Dict[str, torch.Tensor]:
        return se_tri_loss_terms(face_feat, speech_feat, self.decoder.fc1_features,
                                 self.embedder.identity_logits, self.weights)

    def __str__(self):
        return 'se_tri_loss(face_feat: Tensor, speech_feat: Tensor) -> terms: Dict[str, Tensor]'

    def __repr__(self):
        return (f"Computes lambda1 * unitised L2 + lambda2 * decoder-Fc1 L1 + lambda3 * fc3 cosine loss with "
                f"lambdas ({self.weights.lambda1}, {self.weights.lambda2}, {self.weights.lambda3}), returning "
                "the terms 'unit', 'hidden', 'identity' and 'total'.")
