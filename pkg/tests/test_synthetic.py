import numpy as np
import pytest
import torch

from portrait.datasets.dataset import PortraitDataset
from portrait.datasets.synthetic import LATENT_DIM, gender_of, generate_dataset, load_dataset, render_face, save_dataset
from portrait.utils.errors import InputError


def test_generation_is_deterministic():
    a, b = generate_dataset(3, 4), generate_dataset(3, 4)
    for x, y in zip(a, b):
        assert torch.equal(x.face, y.face)
        assert np.array_equal(x.audio.samples, y.audio.samples)
        assert np.array_equal(x.latent, y.latent)
    assert not torch.equal(a[0].face, generate_dataset(4, 1)[0].face)


def test_pairs(pairs):
    assert len(pairs) == 24
    pair = pairs[0]
    assert tuple(pair.face.shape) == (3, 64, 64)
    assert pair.latent.shape == (LATENT_DIM,)
    assert pair.audio.sample_rate == 16000 and pair.audio.num_samples == 96000
    assert np.abs(pair.audio.samples).max() <= 1.0
    assert pair.gender == gender_of(pair.latent)
    assert [p.index for p in pairs] == list(range(24))


def test_faces_and_spectrograms_are_distinct(pairs, dataset):
    for i in range(len(pairs)):
        for j in range(i + 1, len(pairs)):
            assert not torch.equal(pairs[i].face, pairs[j].face)
            assert not torch.equal(dataset.spectrograms[i], dataset.spectrograms[j])


def test_latent_to_spectrogram_is_injective():
    pairs = generate_dataset(seed=7, n=100)
    specs = PortraitDataset.from_pairs(pairs, 'tiny').spectrograms
    assert torch.pdist(specs.flatten(1).to(torch.float64)).min().item() > 0.0
    faces = torch.stack([p.face for p in pairs])
    assert torch.pdist(faces.flatten(1).to(torch.float64)).min().item() > 0.0


def test_render_face_range():
    face = render_face(np.ones(LATENT_DIM), 32)
    assert face.shape == (3, 32, 32)
    assert face.min() >= 0.0 and face.max() <= 1.0
    assert gender_of(np.zeros(LATENT_DIM)) == 'female'
    assert gender_of(-np.ones(LATENT_DIM)) == 'male'


def test_save_and_reload(tmp_path, pairs):
    save_dataset(pairs[:3], str(tmp_path))
    assert (tmp_path / 'faces' / '00002.png').exists()
    assert (tmp_path / 'audio' / '00000.wav').exists()
    loaded = load_dataset(str(tmp_path))
    assert len(loaded) == 3
    for x, y in zip(pairs, loaded):
        assert np.array_equal(x.latent, y.latent)
        assert torch.equal(x.face, y.face)
        assert (x.gender, x.index, x.preset) == (y.gender, y.index, y.preset)


def test_missing_manifest(tmp_path):
    with pytest.raises(InputError):
        load_dataset(str(tmp_path))
    with pytest.raises(InputError):
        generate_dataset(0, 0)


def test_dataset_items(dataset):
    assert len(dataset) == 24
    spec, face, gender = dataset[0]
    assert tuple(spec.shape) == (1, 33, 74)
    assert tuple(face.shape) == (3, 64, 64)
    assert gender in (0, 1)
    assert dataset.gender_labels.tolist() == [0 if g == 'male' else 1 for g in dataset.genders]


def test_split(dataset):
    train, test = dataset.split(0.2, seed=0)
    assert (len(train), len(test)) == (19, 5)
    assert sorted(train.indices + test.indices) == list(range(24))
    again, _ = dataset.split(0.2, seed=0)
    assert again.indices == train.indices
    with pytest.raises(InputError):
        dataset.split(1.0)


def test_cohort_subsets(dataset):
    female = dataset.get_subset('female')
    assert set(female.genders) == {'female'}
    assert len(female) + len(dataset.get_subset('male')) == len(dataset)
    assert dataset.get_subset(None) is dataset
    males_only = dataset.subset([i for i, g in enumerate(dataset.genders) if g == 'male'])
    with pytest.raises(InputError):
        males_only.get_subset('female')


def test_mismatched_parts():
    with pytest.raises(InputError):
        PortraitDataset(torch.zeros(2, 1, 33, 74), torch.zeros(3, 3, 64, 64), ['male', 'female'])
