from .clip import AudioClip, check_normalized, normalize_clip, read_wav, resample_mono, write_wav
from .spectrogram import (Spectrogram, StftParams, load_spectrogram, preprocess, save_spectrogram, spectrogram,
                          stft_magnitude)
