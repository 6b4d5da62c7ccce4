"""
ARCK checkpoints: preset tag, JSON training-state metadata and one record per parameter
(name, frozen flag, shape, little-endian f32 data), in registration order.
"""
import hashlib
import json
import logging
import os
import os.path as osp
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np
import torch
import torch.nn as nn

from portrait.models.face_decoder import FaceDecoder
from portrait.models.gender import GenderClassifier
from portrait.models.speech_encoder import SpeechEncoder
from portrait.utils.errors import CheckpointFormatError, DimensionError, InputError, StateError
from portrait.utils.io import read_exact, read_header, read_string, read_struct, write_header, write_string

logger = logging.getLogger(__name__)

CKPT_MAGIC = b'ARCK'
CKPT_VERSION = 1


@dataclass
class Checkpoint:
    preset: str
    meta: Dict[str, Any]
    records: 'OrderedDict[str, Tuple[torch.Tensor, bool]]' = field(default_factory=OrderedDict)

    @property
    def kind(self) -> str:
        return self.meta.get('kind', '')

    def load_into(self, module: nn.Module) -> nn.Module:
        """
        Copy the records into `module` and apply their frozen flags.
        """
        params = dict(module.named_parameters())
        missing = sorted(set(params) - set(self.records))
        unexpected = sorted(set(self.records) - set(params))
        if missing or unexpected:
            raise CheckpointFormatError(f'checkpoint does not match {type(module).__name__}: '
                                        f'missing {missing}, unexpected {unexpected}')
        with torch.no_grad():
            for name, (data, frozen) in self.records.items():
                param = params[name]
                if param.shape != data.shape:
                    raise DimensionError(f'checkpoint record {name}: shape {tuple(data.shape)} '
                                         f'does not match parameter {tuple(param.shape)}')
                param.copy_(data)
                param.requires_grad_(not frozen)
        return module


def save_checkpoint(module: nn.Module, path: str, preset: str, meta: Dict[str, Any]) -> str:
    """
    Write every parameter of `module`; a parameter is flagged frozen when it does not require grad.
    """
    if osp.dirname(path):
        os.makedirs(osp.dirname(path), exist_ok=True)
    params = list(module.named_parameters())
    with open(path, 'wb') as f:
        write_header(f, CKPT_MAGIC, CKPT_VERSION)
        write_string(f, preset)
        write_string(f, json.dumps(meta, sort_keys=True))
        f.write(struct.pack('<I', len(params)))
        for name, param in params:
            data = param.detach().cpu().numpy().astype('<f4')
            write_string(f, name)
            f.write(struct.pack('<BI', int(not param.requires_grad), data.ndim))
            f.write(struct.pack(f'<{data.ndim}I', *data.shape))
            f.write(data.tobytes())
    logger.info(f'saved {meta.get("kind", "model")} checkpoint with {len(params)} records to {path}')
    return path


def load_checkpoint(path: str) -> Checkpoint:
    if not osp.exists(path):
        raise InputError(f'checkpoint {path} does not exist')
    with open(path, 'rb') as f:
        read_header(f, CKPT_MAGIC, (CKPT_VERSION,))
        preset = read_string(f)
        try:
            meta = json.loads(read_string(f))
        except json.JSONDecodeError as e:
            raise CheckpointFormatError(f'{path}: unreadable metadata ({e})')
        n_records = read_struct(f, '<I')[0]
        records = OrderedDict()
        for _ in range(n_records):
            name = read_string(f)
            frozen, ndim = read_struct(f, '<BI')
            shape = read_struct(f, f'<{ndim}I') if ndim else ()
            count = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(read_exact(f, 4 * count), dtype='<f4').reshape(shape)
            records[name] = (torch.from_numpy(data.astype(np.float32)), bool(frozen))
        if f.read(1):
            raise CheckpointFormatError(f'{path}: trailing bytes after {n_records} records')
    return Checkpoint(preset=preset, meta=meta, records=records)


def parameter_hash(module: nn.Module) -> str:
    """
    sha256 over parameter names and raw bytes, in registration order.
    """
    digest = hashlib.sha256()
    for name, param in module.named_parameters():
        digest.update(name.encode('utf-8'))
        digest.update(param.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()


def _expect(ckpt: Checkpoint, kind: str, preset: str, path: str) -> None:
    if ckpt.kind != kind:
        raise StateError(f'{path} holds a {ckpt.kind or "unknown"} checkpoint, expected {kind}')
    if preset is not None and ckpt.preset != preset:
        raise StateError(f'{path} was trained with preset {ckpt.preset}, expected {preset}')


def load_face_decoder(path: str, preset: str = None, freeze: bool = True) -> FaceDecoder:
    """
    Rebuild a trained decoder. Anything other than a readable face_decoder checkpoint of the
    requested preset raises StateError.
    """
    try:
        ckpt = load_checkpoint(path)
    except InputError as e:
        raise StateError(f'no valid face decoder checkpoint: {e}')
    _expect(ckpt, 'face_decoder', preset, path)
    decoder = ckpt.load_into(FaceDecoder(ckpt.preset))
    decoder.trained = bool(ckpt.meta.get('trained', False))
    if freeze:
        decoder.freeze()
    return decoder


def load_speech_encoder(path: str, preset: str = None) -> Tuple[SpeechEncoder, Dict[str, Any]]:
    ckpt = load_checkpoint(path)
    _expect(ckpt, 'speech_encoder', preset, path)
    encoder = ckpt.load_into(SpeechEncoder(ckpt.preset, fusion=ckpt.meta.get('fusion', 'none')))
    return encoder, ckpt.meta


def load_gender_classifier(path: str, preset: str = None) -> GenderClassifier:
    ckpt = load_checkpoint(path)
    _expect(ckpt, 'gender_classifier', preset, path)
    classifier = ckpt.load_into(GenderClassifier(ckpt.preset))
    classifier.trained = bool(ckpt.meta.get('trained', False))
    classifier.eval()
    return classifier
