"""
Prior face features: arithmetic means of face embeddings over a cohort, and their storage.
"""
import logging
import os
import os.path as osp
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Optional, Sequence, Union

import numpy as np
import torch

from portrait.utils.errors import DimensionError, InputError, ParameterError, StateError
from portrait.utils.io import read_exact, read_header, read_struct, write_header

logger = logging.getLogger(__name__)

PRIOR_MAGIC = b'ARPF'
PRIOR_VERSION = 1


class PriorKind(str, Enum):
    NEUTRAL = 'neutral'
    MALE = 'male'
    FEMALE = 'female'


KIND_CODES = {PriorKind.NEUTRAL: 0, PriorKind.MALE: 1, PriorKind.FEMALE: 2}


@dataclass
class PriorFeature:
    vec: torch.Tensor
    kind: PriorKind
    n_samples: int

    def __post_init__(self):
        self.kind = PriorKind(self.kind)
        if self.n_samples < 1:
            raise InputError(f'a prior needs at least one sample, got n_samples={self.n_samples}')
        if self.vec.dim() != 1:
            raise DimensionError(f'prior vector must be 1-D, got shape {tuple(self.vec.shape)}')

    @property
    def dim(self) -> int:
        return self.vec.numel()


def _stack(features: Union[torch.Tensor, Sequence[torch.Tensor]]) -> torch.Tensor:
    if isinstance(features, torch.Tensor):
        stacked = features
    else:
        if len(features) == 0:
            raise InputError('cannot compute a prior from an empty feature list')
        dims = {tuple(f.shape) for f in features}
        if len(dims) != 1:
            raise DimensionError(f'prior features have mixed dims {sorted(dims)}')
        stacked = torch.stack(list(features))
    if stacked.dim() != 2:
        raise DimensionError(f'expected features of shape [n, D], got {tuple(stacked.shape)}')
    if stacked.size(0) == 0:
        raise InputError('cannot compute a prior from an empty feature list')
    return stacked.detach().to(torch.float64)


def compute_prior(features: Union[torch.Tensor, Sequence[torch.Tensor]],
                  kind: Union[str, PriorKind] = PriorKind.NEUTRAL) -> PriorFeature:
    """
    Elementwise mean of n face features, accumulated in float64.

    Args:
        features: List of [D] vectors or a stacked [n, D] tensor.
        kind: neutral, male or female.

    Returns:
        PriorFeature: The mean vector with n_samples = n.
    """
    stacked = _stack(features)
    return PriorFeature(vec=stacked.mean(dim=0), kind=PriorKind(kind), n_samples=stacked.size(0))


class RunningPrior:
    """
    Streaming mean: update one feature at a time, read the prior at any point.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.n = 0
        self.mean = torch.zeros(dim, dtype=torch.float64)

    def update(self, vec: torch.Tensor) -> 'RunningPrior':
        vec = vec.detach().to(torch.float64).reshape(-1)
        if vec.numel() != self.dim:
            raise DimensionError(f'running prior axis D: expected {self.dim}, got {vec.numel()}')
        self.n += 1
        self.mean += (vec - self.mean) / self.n
        return self

    def update_many(self, vecs: Iterable[torch.Tensor]) -> 'RunningPrior':
        for vec in vecs:
            self.update(vec)
        return self

    def result(self, kind: Union[str, PriorKind] = PriorKind.NEUTRAL) -> PriorFeature:
        if self.n == 0:
            raise InputError('running prior has seen no samples')
        return PriorFeature(vec=self.mean.clone(), kind=PriorKind(kind), n_samples=self.n)


def save_prior(prior: PriorFeature, path: str) -> None:
    data = prior.vec.detach().to(torch.float64).cpu().numpy()
    with open(path, 'wb') as f:
        write_header(f, PRIOR_MAGIC, PRIOR_VERSION)
        f.write(struct.pack('<BIQ', KIND_CODES[prior.kind], data.size, prior.n_samples))
        f.write(data.astype('<f8').tobytes())


def load_prior(path: str) -> PriorFeature:
    with open(path, 'rb') as f:
        read_header(f, PRIOR_MAGIC, (PRIOR_VERSION,))
        code, dim, n_samples = read_struct(f, '<BIQ')
        kinds = {v: k for k, v in KIND_CODES.items()}
        if code not in kinds:
            raise InputError(f'{path}: unknown prior kind code {code}')
        data = np.frombuffer(read_exact(f, 8 * dim), dtype='<f8')
    return PriorFeature(vec=torch.from_numpy(data.copy()), kind=kinds[code], n_samples=int(n_samples))


class PriorBank:
    """
    Read-only collection of priors keyed by kind.
    """

    def __init__(self, priors: Iterable[PriorFeature] = ()):
        self.priors: Dict[PriorKind, PriorFeature] = {}
        for prior in priors:
            self.add(prior)

    def add(self, prior: PriorFeature) -> None:
        dims = {p.dim for p in self.priors.values()}
        if dims and prior.dim not in dims:
            raise DimensionError(f'prior {prior.kind.value} has {prior.dim} dims, bank holds {dims.pop()}')
        self.priors[prior.kind] = prior

    def __contains__(self, kind) -> bool:
        return PriorKind(kind) in self.priors

    def __getitem__(self, kind) -> PriorFeature:
        kind = PriorKind(kind)
        if kind not in self.priors:
            raise StateError(f'prior bank has no {kind.value} prior (available: {[k.value for k in self.priors]})')
        return self.priors[kind]

    def __len__(self) -> int:
        return len(self.priors)

    @property
    def dim(self) -> Optional[int]:
        for prior in self.priors.values():
            return prior.dim
        return None

    def save(self, save_dir: str) -> None:
        os.makedirs(save_dir, exist_ok=True)
        for kind, prior in self.priors.items():
            save_prior(prior, osp.join(save_dir, f'{kind.value}.arpf'))
        logger.info(f'saved {len(self.priors)} priors to {save_dir}')

    @classmethod
    def load(cls, save_dir: str) -> 'PriorBank':
        bank = cls()
        for kind in PriorKind:
            path = osp.join(save_dir, f'{kind.value}.arpf')
            if osp.exists(path):
                bank.add(load_prior(path))
        if len(bank) == 0:
            raise InputError(f'no prior files found in {save_dir}')
        return bank


def select_prior(bank: PriorBank, mode: str, gender_pred: Optional[str] = None) -> PriorFeature:
    """
    Pick the prior for one utterance.

    Args:
        bank (PriorBank): Available priors.
        mode (str): 'neutral' ignores the prediction; 'gender' returns the predicted gender's prior.
        gender_pred (str, optional): 'male' or 'female'.
    """
    if mode == 'neutral':
        return bank[PriorKind.NEUTRAL]
    if mode == 'gender':
        if gender_pred not in (PriorKind.MALE.value, PriorKind.FEMALE.value):
            raise ParameterError(f'gender prior selection needs a male/female prediction, got {gender_pred!r}')
        return bank[gender_pred]
    raise ParameterError(f'unknown prior mode {mode!r}, choose from neutral, gender')


def build_prior_bank(features: torch.Tensor,
                     labels: Optional[Sequence[str]] = None,
                     classifier=None,
                     spectrograms: Optional[torch.Tensor] = None,
                     n: Optional[int] = None) -> PriorBank:
    """
    Neutral prior from the first n features plus male/female priors over the gender subsets.

    Gender labels come from `labels` when given; otherwise the classifier's predictions on
    `spectrograms` are used. With neither, the bank holds only the neutral prior.

    Args:
        features (torch.Tensor): Face embeddings [N, D].
        labels (Sequence[str], optional): 'male' / 'female' per sample.
        classifier (GenderClassifier, optional): Fallback labeller.
        spectrograms (torch.Tensor, optional): Classifier input [N, 1, F, T].
        n (int, optional): Use only the first n samples.
    """
    n = len(features) if n is None else n
    if n < 1 or n > len(features):
        raise InputError(f'cannot build priors from {n} of {len(features)} samples')
    features = features[:n]
    bank = PriorBank([compute_prior(features, PriorKind.NEUTRAL)])
    if labels is None and classifier is not None:
        if spectrograms is None:
            raise InputError('classifier-labelled priors need the spectrograms')
        labels, _ = classifier.predict(spectrograms[:n])
        logger.info('gender priors built from classifier predictions')
    if labels is None:
        return bank
    labels = list(labels)[:n]
    for kind in (PriorKind.MALE, PriorKind.FEMALE):
        index = [i for i, label in enumerate(labels) if label == kind.value]
        if not index:
            logger.warning(f'no {kind.value} samples, skipping the {kind.value} prior')
            continue
        bank.add(compute_prior(features[index], kind))
    return bank
