import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal
from scipy.io import wavfile

from portrait.utils.errors import ContractError, InputError

logger = logging.getLogger(__name__)

TARGET_RATE = 16000
TARGET_SECONDS = 6.0
# stopband attenuation of the resampling filter
RESAMPLE_ATTENUATION_DB = 80.0


@dataclass
class AudioClip:
    """
    Audio samples in [-1, 1]. `samples` is [n] for mono or [n, channels].
    """
    samples: np.ndarray
    sample_rate: int

    @property
    def channels(self) -> int:
        return 1 if self.samples.ndim == 1 else self.samples.shape[1]

    @property
    def num_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate


def normalize_clip(audio: AudioClip, target_seconds: float = TARGET_SECONDS) -> AudioClip:
    """
    Make the clip exactly `target_seconds` long: shorter clips are repeated from the start and
    truncated, longer clips keep their beginning.
    """
    if audio.num_samples == 0:
        raise InputError('cannot normalize an empty clip')
    target = int(round(target_seconds * audio.sample_rate))
    samples = audio.samples
    if samples.shape[0] < target:
        reps = math.ceil(target / samples.shape[0])
        samples = np.concatenate([samples] * reps, axis=0)
    return AudioClip(samples=samples[:target].copy(), sample_rate=audio.sample_rate)


def _lowpass(up: int, down: int) -> np.ndarray:
    # cutoff relative to the Nyquist rate of the upsampled signal
    f_c = 1.0 / max(up, down)
    numtaps, beta = signal.kaiserord(RESAMPLE_ATTENUATION_DB, 0.125 * f_c)
    numtaps += 1 - numtaps % 2
    return signal.firwin(numtaps, 0.9375 * f_c, window=('kaiser', beta))


def resample_mono(audio: AudioClip, target_rate: int = TARGET_RATE) -> AudioClip:
    """
    Average the channels, then resample with a linear-phase polyphase filter.

    The Kaiser-window FIR passes everything below 0.875 of the output Nyquist rate (7 kHz at
    16 kHz) with 80 dB stopband attenuation, which keeps passband ripple far below 0.1 dB.
    """
    if audio.num_samples == 0:
        raise InputError('cannot resample an empty clip')
    if audio.sample_rate <= 0 or target_rate <= 0:
        raise InputError(f'sample rates must be positive, got {audio.sample_rate} -> {target_rate}')
    samples = audio.samples.astype(np.float64)
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    if audio.sample_rate == target_rate:
        return AudioClip(samples=samples, sample_rate=target_rate)
    g = math.gcd(audio.sample_rate, target_rate)
    up, down = target_rate // g, audio.sample_rate // g
    out = signal.resample_poly(samples, up, down, window=_lowpass(up, down), padtype='line')
    logger.debug(f'resampled {audio.sample_rate} Hz -> {target_rate} Hz ({len(samples)} -> {len(out)} samples)')
    return AudioClip(samples=out, sample_rate=target_rate)


def read_wav(path: str) -> AudioClip:
    """
    Read a 16-bit PCM or 32-bit float WAV file.
    """
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.float32:
        samples = data.astype(np.float64)
    else:
        raise InputError(f'{path}: unsupported WAV sample format {data.dtype}, expected int16 or float32')
    if samples.shape[0] == 0:
        raise InputError(f'{path}: WAV file has no samples')
    return AudioClip(samples=samples, sample_rate=int(rate))


def write_wav(audio: AudioClip, path: str) -> None:
    wavfile.write(path, audio.sample_rate, audio.samples.astype(np.float32))


def check_normalized(audio: AudioClip, sample_rate: int = TARGET_RATE, seconds: float = TARGET_SECONDS) -> None:
    expected = int(round(seconds * sample_rate))
    if audio.channels != 1 or audio.samples.ndim != 1:
        raise ContractError(f'expected mono audio, got {audio.channels} channels')
    if audio.sample_rate != sample_rate:
        raise ContractError(f'expected {sample_rate} Hz audio, got {audio.sample_rate} Hz')
    if audio.num_samples != expected:
        raise ContractError(f'expected {expected} samples ({seconds} s), got {audio.num_samples}')
