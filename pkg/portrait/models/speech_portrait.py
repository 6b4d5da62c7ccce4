import logging
from dataclasses import dataclass
from typing import Optional

import torch
import torch.nn as nn

from portrait.core.tensor import as_batch
from portrait.models.face_decoder import FaceDecoder
from portrait.models.gender import GenderClassifier
from portrait.models.speech_encoder import FusionMode, SpeechEncoder
from portrait.priors.bank import PriorBank, select_prior
from portrait.utils.errors import ContractError, ParameterError, StateError

logger = logging.getLogger(__name__)

PRIOR_MODES = (None, 'neutral', 'gender', 'male', 'female')


@dataclass(frozen=True)
class ModelVariant:
    fusion: FusionMode
    prior_mode: Optional[str]
    cohort: Optional[str] = None


# ablation tags in report order
MODEL_TAGS = {
    'non-prior': ModelVariant(FusionMode.NONE, None),
    'neutral': ModelVariant(FusionMode.SUM, 'neutral'),
    'neutral+fc': ModelVariant(FusionMode.SUM_FC, 'neutral'),
    'gender': ModelVariant(FusionMode.SUM, 'gender'),
    'gender+fc': ModelVariant(FusionMode.SUM_FC, 'gender'),
    'female': ModelVariant(FusionMode.SUM, 'female', cohort='female'),
    'male': ModelVariant(FusionMode.SUM, 'male', cohort='male'),
}


def get_variant(tag: str) -> ModelVariant:
    if tag not in MODEL_TAGS:
        raise ParameterError(f'unknown model tag {tag!r}, choose from {list(MODEL_TAGS)}')
    return MODEL_TAGS[tag]


class SpeechPortrait(nn.Module):
    """
    End-to-end speech -> face model: encoder, prior selection, residual fusion and decoder.
    """

    def __init__(self,
                 encoder: SpeechEncoder,
                 decoder: FaceDecoder,
                 prior_bank: Optional[PriorBank] = None,
                 classifier: Optional[GenderClassifier] = None,
                 prior_mode: Optional[str] = None,
                 tag: str = 'non-prior'):
        super().__init__()
        if encoder.preset != decoder.preset:
            raise ContractError(f'encoder preset {encoder.preset} does not match decoder preset {decoder.preset}')
        if prior_mode not in PRIOR_MODES:
            raise ParameterError(f'unknown prior mode {prior_mode!r}')
        if (prior_mode is None) != (encoder.fusion == FusionMode.NONE):
            raise ParameterError(f'fusion {encoder.fusion.value} is inconsistent with prior mode {prior_mode}')
        self.encoder = encoder
        self.decoder = decoder
        self.prior_bank = prior_bank
        self.classifier = classifier
        self.prior_mode = prior_mode
        self.tag = tag

    @property
    def preset(self) -> str:
        return self.encoder.preset

    def priors_for(self, spec: torch.Tensor) -> Optional[torch.Tensor]:
        """
        Prior vectors for a spectrogram batch [N, 1, F, T]: None, one shared [D] vector, or [N, D].
        """
        if self.prior_mode is None:
            return None
        if self.prior_bank is None:
            raise StateError(f'model {self.tag} needs a prior bank')
        if self.prior_mode == 'neutral':
            return select_prior(self.prior_bank, 'neutral').vec
        if self.prior_mode in ('male', 'female'):
            return select_prior(self.prior_bank, 'gender', self.prior_mode).vec
        if self.classifier is None:
            raise StateError(f'model {self.tag} selects gender priors and needs a gender classifier')
        labels, _ = self.classifier.predict(spec)
        return torch.stack([select_prior(self.prior_bank, 'gender', label).vec for label in labels])

    def encode(self, spec: torch.Tensor) -> torch.Tensor:
        return self.encoder.encode(spec, self.priors_for(spec))

    def forward(self, spec: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.encode(spec))

    @torch.no_grad()
    def generate(self, spec) -> torch.Tensor:
        """
        Face image(s) for one spectrogram ([1, F, T] or Spectrogram) or a batch [N, 1, F, T].
        """
        batch, single = as_batch(spec)
        out = self(batch)
        return out[0] if single else out


def get_model(tag: str,
              preset: str = 'tiny',
              seed: int = 0,
              decoder: Optional[FaceDecoder] = None,
              prior_bank: Optional[PriorBank] = None,
              classifier: Optional[GenderClassifier] = None,
              encoder: Optional[SpeechEncoder] = None) -> SpeechPortrait:
    """
    Build one of the ablation models by tag.

    Args:
        tag (str): non-prior, neutral, neutral+fc, gender, gender+fc, female or male.
        preset (str): Scale preset.
        seed (int): Initialisation seed for a fresh encoder.
        decoder (FaceDecoder, optional): Trained decoder; a fresh one is built if omitted.
        prior_bank (PriorBank, optional): Needed by every tag except non-prior.
        classifier (GenderClassifier, optional): Needed by the gender tags.
        encoder (SpeechEncoder, optional): Trained encoder; a fresh one is built if omitted.
    """
    variant = get_variant(tag)
    if encoder is None:
        encoder = SpeechEncoder(preset, fusion=variant.fusion, seed=seed)
    elif encoder.fusion != variant.fusion:
        raise ContractError(f'model {tag} needs fusion {variant.fusion.value}, encoder has {encoder.fusion.value}')
    if decoder is None:
        decoder = FaceDecoder(preset, seed=seed).freeze()
    return SpeechPortrait(encoder, decoder, prior_bank=prior_bank, classifier=classifier,
                          prior_mode=variant.prior_mode, tag=tag)
