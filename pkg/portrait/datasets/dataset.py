from typing import Dict, List, Optional, Sequence, Tuple

import torch
from torch.utils.data import Dataset
from tqdm import tqdm

from portrait.audio.spectrogram import StftParams, spectrogram
from portrait.datasets.synthetic import SyntheticPair
from portrait.models.gender import gender_index
from portrait.utils.errors import InputError


class PortraitDataset(Dataset):
    """
    Spectrogram / face pairs ready for training.

    Items are (spectrogram [1, F, T], face [3, S, S], gender index) tuples.
    """

    def __init__(self,
                 spectrograms: torch.Tensor,
                 faces: torch.Tensor,
                 genders: Sequence[str],
                 indices: Optional[Sequence[int]] = None,
                 preset: str = 'tiny'):
        if not (len(spectrograms) == len(faces) == len(genders)):
            raise InputError(f'mismatched dataset parts: {len(spectrograms)} spectrograms, '
                             f'{len(faces)} faces, {len(genders)} labels')
        self.spectrograms = spectrograms
        self.faces = faces
        self.genders = list(genders)
        self.indices = list(indices) if indices is not None else list(range(len(faces)))
        self.preset = preset

    @classmethod
    def from_pairs(cls, pairs: List[SyntheticPair], preset: str = 'tiny') -> 'PortraitDataset':
        if len(pairs) == 0:
            raise InputError('cannot build a dataset from zero pairs')
        params = StftParams.for_preset(preset)
        specs = [spectrogram(pair.audio, params).values for pair in tqdm(pairs, desc='spectrograms', leave=False)]
        return cls(spectrograms=torch.stack(specs),
                   faces=torch.stack([pair.face for pair in pairs]),
                   genders=[pair.gender for pair in pairs],
                   indices=[pair.index for pair in pairs],
                   preset=preset)

    def __len__(self) -> int:
        return len(self.faces)

    def __getitem__(self, idx: int) -> Tuple[torch.Tensor, torch.Tensor, int]:
        return self.spectrograms[idx], self.faces[idx], gender_index(self.genders[idx])

    @property
    def gender_labels(self) -> torch.Tensor:
        return torch.tensor([gender_index(g) for g in self.genders], dtype=torch.long)

    def subset(self, positions: Sequence[int]) -> 'PortraitDataset':
        positions = list(positions)
        return PortraitDataset(spectrograms=self.spectrograms[positions],
                               faces=self.faces[positions],
                               genders=[self.genders[i] for i in positions],
                               indices=[self.indices[i] for i in positions],
                               preset=self.preset)

    def get_subset(self, cohort: Optional[str]) -> 'PortraitDataset':
        """
        Samples of one gender cohort ('male' | 'female'); None returns the whole dataset.
        """
        if cohort is None:
            return self
        positions = [i for i, g in enumerate(self.genders) if g == cohort]
        if not positions:
            raise InputError(f'dataset has no {cohort} samples')
        return self.subset(positions)

    def get_idx_split(self, test_ratio: float = 0.2, seed: int = 0) -> Dict[str, torch.LongTensor]:
        """
        Seeded random train/test split of dataset positions.

        Args:
            test_ratio (float, optional): Fraction of samples held out. Default is 0.2.
            seed (int, optional): Permutation seed.

        Returns:
            Dict[str, torch.LongTensor]: Dictionary with train/test positions.
        """
        if not 0.0 < test_ratio < 1.0:
            raise InputError(f'test_ratio must lie in (0, 1), got {test_ratio}')
        n_test = max(1, int(round(len(self) * test_ratio)))
        if n_test >= len(self):
            raise InputError(f'{len(self)} samples are too few for a {test_ratio} split')
        perm = torch.randperm(len(self), generator=torch.Generator().manual_seed(seed))
        return {'train': perm[n_test:].sort().values, 'test': perm[:n_test].sort().values}

    def split(self, test_ratio: float = 0.2, seed: int = 0) -> Tuple['PortraitDataset', 'PortraitDataset']:
        split_idx = self.get_idx_split(test_ratio, seed)
        return self.subset(split_idx['train'].tolist()), self.subset(split_idx['test'].tolist())
