import struct
from dataclasses import dataclass, field

import numpy as np
import torch

from portrait.audio.clip import AudioClip, check_normalized, normalize_clip, resample_mono
from portrait.models.network_spec import get_preset
from portrait.utils.errors import DimensionError, ParameterError
from portrait.utils.io import read_exact, read_header, read_struct, write_header

SPEC_MAGIC = b'ARSP'
SPEC_VERSION = 1


@dataclass(frozen=True)
class StftParams:
    window: int = 400
    hop: int = 160
    fft: int = 512
    exponent: float = 0.3
    sample_rate: int = 16000
    seconds: float = 6.0

    def __post_init__(self):
        if min(self.window, self.hop, self.fft) <= 0 or self.window > self.fft:
            raise ParameterError(f'illegal STFT parameters: window={self.window}, hop={self.hop}, fft={self.fft}')
        if self.exponent <= 0:
            raise ParameterError(f'compression exponent must be positive, got {self.exponent}')

    @classmethod
    def for_preset(cls, preset: str) -> 'StftParams':
        p = get_preset(preset)
        return cls(window=p.stft_window, hop=p.stft_hop, fft=p.stft_fft)

    @property
    def freq_bins(self) -> int:
        return self.fft // 2 + 1

    @property
    def num_samples(self) -> int:
        return int(round(self.seconds * self.sample_rate))

    def frames(self, num_samples: int = None) -> int:
        num_samples = self.num_samples if num_samples is None else num_samples
        return (num_samples - self.window) // self.hop + 1


@dataclass
class Spectrogram:
    """
    Power-law compressed STFT magnitude, values [1, F, T].
    """
    values: torch.Tensor
    params: StftParams = field(default_factory=StftParams)

    @property
    def freq_bins(self) -> int:
        return self.values.size(1)

    @property
    def frames(self) -> int:
        return self.values.size(2)


def stft_magnitude(samples: np.ndarray, params: StftParams) -> torch.Tensor:
    """
    |STFT| of a mono signal with a periodic Hann window, shape [F, T], float64.
    """
    x = torch.from_numpy(np.ascontiguousarray(samples, dtype=np.float64))
    frames = x.unfold(0, params.window, params.hop)
    window = torch.hann_window(params.window, periodic=True, dtype=torch.float64)
    return torch.fft.rfft(frames * window, n=params.fft, dim=1).abs().t()


def spectrogram(audio: AudioClip, params: StftParams = StftParams()) -> Spectrogram:
    """
    |STFT|^exponent of a normalized clip (mono, params.sample_rate, params.seconds long).
    """
    check_normalized(audio, params.sample_rate, params.seconds)
    values = stft_magnitude(audio.samples, params).pow(params.exponent)
    values = values.to(torch.get_default_dtype()).unsqueeze(0).contiguous()
    expected = (1, params.freq_bins, params.frames(audio.num_samples))
    if tuple(values.shape) != expected:
        raise DimensionError(f'spectrogram shape {tuple(values.shape)} does not match {expected}')
    return Spectrogram(values=values, params=params)


def preprocess(audio: AudioClip, params: StftParams = StftParams()) -> Spectrogram:
    """
    Raw clip -> mono at the target rate -> fixed duration -> spectrogram.
    """
    audio = resample_mono(audio, params.sample_rate)
    audio = normalize_clip(audio, params.seconds)
    return spectrogram(audio, params)


def save_spectrogram(spec: Spectrogram, path: str) -> None:
    values = spec.values.detach().reshape(spec.freq_bins, spec.frames).cpu().numpy()
    p = spec.params
    with open(path, 'wb') as f:
        write_header(f, SPEC_MAGIC, SPEC_VERSION)
        f.write(struct.pack('<II', spec.freq_bins, spec.frames))
        f.write(values.astype('<f4').tobytes())
        f.write(struct.pack('<4d', p.window, p.hop, p.fft, p.exponent))


def load_spectrogram(path: str, sample_rate: int = 16000, seconds: float = 6.0) -> Spectrogram:
    with open(path, 'rb') as f:
        read_header(f, SPEC_MAGIC, (SPEC_VERSION,))
        n_freq, n_frames = read_struct(f, '<II')
        data = np.frombuffer(read_exact(f, 4 * n_freq * n_frames), dtype='<f4')
        window, hop, fft, exponent = read_struct(f, '<4d')
    params = StftParams(window=int(window), hop=int(hop), fft=int(fft), exponent=exponent,
                        sample_rate=sample_rate, seconds=seconds)
    values = torch.from_numpy(data.astype(np.float32).reshape(1, n_freq, n_frames))
    return Spectrogram(values=values.to(torch.get_default_dtype()), params=params)
