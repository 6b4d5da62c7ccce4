import logging
from typing import Dict, List, Sequence, Tuple, Union

import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.utils.data import DataLoader, TensorDataset
from tqdm import tqdm

from portrait.core import functional as PF
from portrait.core.tensor import as_batch
from portrait.models.layers import he_uniform_
from portrait.models.network_spec import gender_network_spec
from portrait.models.stack import LayerStack
from portrait.utils.errors import InputError, StateError

logger = logging.getLogger(__name__)

# class index -> label
GENDERS = ('male', 'female')


def gender_index(label: Union[str, int]) -> int:
    if isinstance(label, int) and label in (0, 1):
        return label
    if label not in GENDERS:
        raise InputError(f'unknown gender label {label!r}, choose from {GENDERS}')
    return GENDERS.index(label)


class GenderClassifier(nn.Module):
    """
    Spectrogram -> two gender logits (index 0 = male, 1 = female).

    Five convolution and three max-pooling layers shaped like the encoder trunk, global average
    pooling and two fc layers.
    """

    def __init__(self, preset: str = 'tiny', seed: int = 0):
        super().__init__()
        self.preset = preset
        self.layers = LayerStack(gender_network_spec(preset))
        self.trained = False
        he_uniform_(self, seed)

    def forward(self, spec: torch.Tensor) -> torch.Tensor:
        return self.layers(spec)

    @torch.no_grad()
    def predict(self, spec: torch.Tensor) -> Tuple[List[str], torch.Tensor]:
        """
        Args:
            spec (torch.Tensor): Spectrogram batch [N, 1, F, T].

        Returns:
            Tuple[List[str], torch.Tensor]: Predicted labels and the softmax confidence of each.
        """
        if not self.trained:
            raise StateError('gender classifier has not been trained or loaded')
        probs = torch.softmax(self(spec), dim=1)
        # exact ties resolve to male
        female = probs[:, 1] > probs[:, 0]
        labels = [GENDERS[int(f)] for f in female]
        confidence = torch.where(female, probs[:, 1], probs[:, 0])
        return labels, confidence


def gender_classify(classifier: GenderClassifier, spec) -> Tuple[str, float]:
    """
    Classify one spectrogram ([1, F, T] tensor or Spectrogram).

    Returns:
        Tuple[str, float]: ('male' | 'female', confidence).
    """
    batch, _ = as_batch(spec)
    labels, confidence = classifier.predict(batch)
    return labels[0], float(confidence[0])


def _label_tensor(labels: Sequence) -> torch.Tensor:
    if isinstance(labels, torch.Tensor):
        return labels.long()
    return torch.tensor([gender_index(label) for label in labels], dtype=torch.long)


def train_gender_classifier(classifier: GenderClassifier,
                            spectrograms: torch.Tensor,
                            labels: Sequence,
                            epochs: int = 10,
                            batch_size: int = 16,
                            lr: float = 1e-3,
                            beta1: float = 0.5,
                            beta2: float = 0.999,
                            eps: float = 1e-4,
                            seed: int = 0) -> List[Dict[str, float]]:
    """
    Train with cross-entropy and Adam.

    Returns:
        List[Dict[str, float]]: Per-epoch mean loss and training accuracy.
    """
    targets = _label_tensor(labels)
    if len(targets) != len(spectrograms) or len(targets) == 0:
        raise InputError(f'got {len(spectrograms)} spectrograms and {len(targets)} labels')
    loader = DataLoader(TensorDataset(spectrograms, targets), batch_size=batch_size, shuffle=True,
                        generator=torch.Generator().manual_seed(seed))
    optimizer = torch.optim.Adam(classifier.parameters(), lr=lr, betas=(beta1, beta2), eps=eps)
    history = []
    classifier.train()
    for epoch in tqdm(range(epochs), desc='gender classifier', leave=False):
        total, correct, n = 0.0, 0, 0
        for spec, target in loader:
            optimizer.zero_grad()
            logits = classifier(spec)
            loss = F.cross_entropy(logits, target)
            PF.backward(loss)
            optimizer.step()
            total += loss.item() * len(target)
            correct += int((logits.argmax(dim=1) == target).sum())
            n += len(target)
        history.append({'epoch': epoch, 'loss': total / n, 'accuracy': correct / n})
        logger.debug(f'gender epoch {epoch}: loss={total / n:.4f} acc={correct / n:.3f}')
    classifier.eval()
    classifier.trained = True
    return history


def classifier_accuracy(classifier: GenderClassifier, spectrograms: torch.Tensor, labels: Sequence) -> float:
    targets = _label_tensor(labels)
    if len(targets) == 0:
        raise InputError('cannot score a classifier on an empty set')
    predicted, _ = classifier.predict(spectrograms)
    hits = sum(int(gender_index(p) == int(t)) for p, t in zip(predicted, targets))
    return hits / len(targets)
