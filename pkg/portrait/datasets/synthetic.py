"""
Procedural speaker/face pairs linked through a shared latent vector.

Every latent coordinate moves both the rendered face and the voice: z[0] sets the gender (hair
length and pitch), z[1..7] shape the face geometry and colours and, through a cosine-series
spectral envelope, the timbre of the harmonic voice.
"""
import logging
import os
import os.path as osp
from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd
import torch
from tqdm import tqdm

from portrait.audio.clip import AudioClip, write_wav
from portrait.models.network_spec import get_preset
from portrait.utils.errors import InputError
from portrait.utils.image import save_png

logger = logging.getLogger(__name__)

LATENT_DIM = 8
SAMPLE_RATE = 16000
SECONDS = 6.0
MANIFEST = 'manifest.csv'


@dataclass
class SyntheticPair:
    face: torch.Tensor
    audio: AudioClip
    latent: np.ndarray
    gender: str
    index: int
    seed: int
    preset: str


def gender_of(latent: np.ndarray) -> str:
    return 'female' if latent[0] >= 0 else 'male'


def _soft_ellipse(u: np.ndarray, v: np.ndarray, cx: float, cy: float, rx: float, ry: float,
                  sharpness: float) -> np.ndarray:
    r = np.sqrt(((u - cx) / rx) ** 2 + ((v - cy) / ry) ** 2)
    return 1.0 / (1.0 + np.exp(-(1.0 - r) * sharpness))


def render_face(latent: np.ndarray, size: int) -> np.ndarray:
    """
    Draw a toy frontal face as soft ellipses on a size x size canvas.

    Returns:
        np.ndarray: [3, size, size] float64 image in [0, 1].
    """
    z = np.asarray(latent, dtype=np.float64)
    coords = (np.arange(size) + 0.5) / size * 2.0 - 1.0
    v, u = np.meshgrid(coords, coords, indexing='ij')
    sharp = size / 4.0

    background = np.array([0.35, 0.45, 0.55]) + 0.1 * z[5]
    skin = np.array([0.86, 0.67, 0.52]) + np.array([0.08, 0.06, 0.05]) * z[3]
    hair_color = np.array([0.25, 0.18, 0.12]) + 0.1 * z[4]
    eye_color = np.array([0.1, 0.1, 0.15]) + np.array([0.0, 0.05, 0.1]) * z[6]
    lip_color = np.array([0.7, 0.3, 0.3]) + np.array([0.1, 0.0, 0.0]) * z[7]

    rx = 0.5 + 0.08 * z[1]
    ry = 0.65 + 0.06 * z[2]
    image = np.broadcast_to(background[:, None, None], (3, size, size)).copy()

    def paint(mask, color):
        nonlocal image
        image = image * (1.0 - mask) + color[:, None, None] * mask

    # longer hair for z[0] >= 0
    hair_drop = 0.1 + 0.35 * (1.0 + np.tanh(4.0 * z[0])) / 2.0
    hair = _soft_ellipse(u, v, 0.0, -0.05 + hair_drop / 2.0, rx + 0.12, ry + hair_drop, sharp)
    hair = hair * (v < 0.2 + hair_drop)
    paint(hair, hair_color)
    paint(_soft_ellipse(u, v, 0.0, 0.05, rx, ry, sharp), skin)
    eye_x = 0.42 * rx
    eye_r = 0.07 + 0.02 * z[6]
    paint(_soft_ellipse(u, v, -eye_x, -0.08, eye_r, eye_r * 0.6, sharp), eye_color)
    paint(_soft_ellipse(u, v, eye_x, -0.08, eye_r, eye_r * 0.6, sharp), eye_color)
    mouth_y = 0.35 + 0.05 * z[7]
    paint(_soft_ellipse(u, v, 0.0, mouth_y, 0.16 + 0.04 * z[2], 0.045, sharp), lip_color)
    return np.clip(image, 0.0, 1.0)


def synthesize_voice(latent: np.ndarray, rng: np.random.Generator,
                     sample_rate: int = SAMPLE_RATE, seconds: float = SECONDS) -> np.ndarray:
    """
    Harmonic stack with pitch 150 + 70 tanh(2 z[0]) Hz and a latent-controlled spectral envelope.
    """
    z = np.asarray(latent, dtype=np.float64)
    n = int(round(sample_rate * seconds))
    t = np.arange(n) / sample_rate
    f0 = 150.0 + 70.0 * np.tanh(2.0 * z[0])
    freqs = f0 * np.arange(1, int(0.49 * sample_rate // f0) + 1)
    j = np.arange(1, LATENT_DIM)
    envelope = np.exp(0.5 * np.cos(np.pi * np.outer(freqs, j) / 8000.0) @ z[1:])
    amps = envelope / np.sqrt(np.arange(1, len(freqs) + 1))
    phases = rng.uniform(0.0, 2.0 * np.pi, len(freqs))
    wave = np.zeros(n)
    for f, a, p in zip(freqs, amps, phases):
        wave += a * np.sin(2.0 * np.pi * f * t + p)
    wave = 0.5 * wave / np.abs(wave).max()
    return wave + 0.005 * rng.standard_normal(n)


def make_pair(seed: int, index: int, latent: np.ndarray, preset: str = 'tiny') -> SyntheticPair:
    """
    Deterministically rebuild one pair from (seed, index, latent).
    """
    latent = np.asarray(latent, dtype=np.float64)
    rng = np.random.default_rng([seed, index])
    face = torch.from_numpy(render_face(latent, get_preset(preset).image_size)).to(torch.get_default_dtype())
    audio = AudioClip(samples=synthesize_voice(latent, rng), sample_rate=SAMPLE_RATE)
    return SyntheticPair(face=face, audio=audio, latent=latent, gender=gender_of(latent),
                         index=index, seed=seed, preset=preset)


def generate_dataset(seed: int, n: int, preset: str = 'tiny') -> List[SyntheticPair]:
    """
    n pairs with latents drawn uniformly from [-1, 1]^8; identical for identical arguments.
    """
    if n < 1:
        raise InputError(f'dataset size must be positive, got {n}')
    latents = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, LATENT_DIM))
    return [make_pair(seed, i, latents[i], preset) for i in tqdm(range(n), desc='generating pairs', leave=False)]


def save_dataset(pairs: List[SyntheticPair], save_dir: str) -> str:
    """
    Write faces as PNG, audio as WAV and a manifest CSV holding (index, seed, preset, gender, latent).

    Returns:
        str: Path of the manifest.
    """
    os.makedirs(osp.join(save_dir, 'faces'), exist_ok=True)
    os.makedirs(osp.join(save_dir, 'audio'), exist_ok=True)
    rows = []
    for pair in pairs:
        save_png(pair.face, osp.join(save_dir, 'faces', f'{pair.index:05d}.png'))
        write_wav(pair.audio, osp.join(save_dir, 'audio', f'{pair.index:05d}.wav'))
        row = {'index': pair.index, 'seed': pair.seed, 'preset': pair.preset, 'gender': pair.gender}
        row.update({f'z{k}': float(pair.latent[k]) for k in range(LATENT_DIM)})
        rows.append(row)
    manifest_path = osp.join(save_dir, MANIFEST)
    pd.DataFrame(rows).to_csv(manifest_path, index=False)
    logger.info(f'saved {len(pairs)} pairs to {save_dir}')
    return manifest_path


def load_dataset(save_dir: str) -> List[SyntheticPair]:
    """
    Regenerate the pairs listed in a manifest; the result is bit-identical to the saved run.
    """
    manifest_path = osp.join(save_dir, MANIFEST)
    if not osp.exists(manifest_path):
        raise InputError(f'no dataset manifest at {manifest_path}')
    manifest = pd.read_csv(manifest_path, float_precision='round_trip')
    latent_cols = [f'z{k}' for k in range(LATENT_DIM)]
    return [make_pair(int(row['seed']), int(row['index']), row[latent_cols].to_numpy(dtype=np.float64), row['preset'])
            for _, row in manifest.iterrows()]
