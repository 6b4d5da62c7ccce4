"""
Two-stage training: the face decoder first, then the speech encoder against the frozen decoder.
"""
import logging
import math
import os
import os.path as osp
from dataclasses import dataclass
from typing import Dict, List, Optional

import pandas as pd
import torch
import torch.nn as nn
from torch.utils.data import DataLoader
from tqdm import tqdm

from portrait.core import functional as PF
from portrait.core.tensor import set_precision
from portrait.datasets.dataset import PortraitDataset
from portrait.models.embedder import FaceEmbedder
from portrait.models.face_decoder import FaceDecoder
from portrait.models.gender import GenderClassifier
from portrait.models.speech_encoder import SpeechEncoder
from portrait.models.speech_portrait import SpeechPortrait
from portrait.priors.bank import PriorBank
from portrait.tools import loss_funcs
from portrait.training.checkpoint import load_face_decoder, parameter_hash, save_checkpoint
from portrait.training.config import TrainConfig, lr_at_epoch
from portrait.utils.errors import ContractError, FrozenParameterError, TrainingDivergedError
from portrait.utils.seed import set_seed

logger = logging.getLogger(__name__)

FD_COLUMNS = ['epoch', 'step', 'lr', 'l_image', 'l_cs', 'l_total']
SE_COLUMNS = ['epoch', 'step', 'lr', 'l_unit', 'l_hidden', 'l_identity', 'l_total']


@dataclass
class TrainResult:
    model: nn.Module
    history: pd.DataFrame
    checkpoint_path: Optional[str] = None
    loss_path: Optional[str] = None


def build_loader(dataset: PortraitDataset, batch_size: int, seed: int) -> DataLoader:
    return DataLoader(dataset, batch_size=batch_size, shuffle=True,
                      generator=torch.Generator().manual_seed(seed))


def _optimizer(params, config: TrainConfig):
    optimizer = torch.optim.Adam(params, lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps)
    scheduler = torch.optim.lr_scheduler.StepLR(optimizer, step_size=config.lr_decay_every, gamma=config.lr_decay)
    return optimizer, scheduler


def _check_terms(terms: Dict[str, float], epoch: int, step: int) -> None:
    if not all(math.isfinite(v) for v in terms.values()):
        raise TrainingDivergedError('loss became non-finite', epoch=epoch, step=step, terms=terms)


def _check_presets(config: TrainConfig, *components) -> None:
    for component in components:
        preset = getattr(component, 'preset', config.preset)
        if preset != config.preset:
            raise ContractError(f'{type(component).__name__} uses preset {preset}, config uses {config.preset}')


def _step(loss: torch.Tensor, params: List[torch.Tensor], optimizer, config: TrainConfig) -> None:
    optimizer.zero_grad()
    PF.backward(loss)
    if config.grad_clip is not None:
        nn.utils.clip_grad_norm_(params, config.grad_clip)
    optimizer.step()


def _save_outputs(model: nn.Module, history: pd.DataFrame, output_dir: Optional[str], name: str, prefix: str,
                  preset: str, meta: dict):
    if output_dir is None:
        return None, None
    os.makedirs(output_dir, exist_ok=True)
    ckpt_path = save_checkpoint(model, osp.join(output_dir, f'{name}.arck'), preset, meta)
    loss_path = osp.join(output_dir, f'{prefix}_loss.csv')
    history.to_csv(loss_path, index=False)
    return ckpt_path, loss_path


def train_fd(config: TrainConfig,
             dataset: PortraitDataset,
             embedder: FaceEmbedder,
             decoder: Optional[FaceDecoder] = None,
             output_dir: Optional[str] = None) -> TrainResult:
    """
    Train the face decoder to rebuild faces from their embedder features.

    Args:
        config (TrainConfig): Hyperparameters.
        dataset (PortraitDataset): Training pairs; only the faces are used.
        embedder (FaceEmbedder): Frozen face embedder.
        decoder (FaceDecoder, optional): Decoder to continue training; a fresh one otherwise.
        output_dir (str, optional): Where to write face_decoder.arck and fd_loss.csv.

    Returns:
        TrainResult: Trained decoder and the per-step loss log.
    """
    set_precision(config.dtype)
    set_seed(config.seed, config.threads)
    decoder = decoder if decoder is not None else FaceDecoder(config.preset, seed=config.seed)
    _check_presets(config, dataset, embedder, decoder)
    loss_fn = loss_funcs['fd_total_loss'](embedder=embedder, weights=config.loss_weights())
    params = [p for p in decoder.parameters() if p.requires_grad]
    optimizer, scheduler = _optimizer(params, config)
    loader = build_loader(dataset, config.batch_size, config.seed)
    dtype = next(decoder.parameters()).dtype

    rows, step = [], 0
    decoder.train()
    for epoch in tqdm(range(config.epochs), desc='train fd'):
        lr = optimizer.param_groups[0]['lr']
        for _, faces, _ in loader:
            faces = faces.to(dtype)
            with torch.no_grad():
                feats = embedder(faces)
            terms = loss_fn(decoder(feats), faces)
            values = {'l_image': terms['image'].item(), 'l_cs': terms['cs'].item()}
            values['l_total'] = values['l_image'] + values['l_cs']
            _check_terms(values, epoch, step)
            _step(terms['total'], params, optimizer, config)
            rows.append({'epoch': epoch, 'step': step, 'lr': lr, **values})
            step += 1
        scheduler.step()
        epoch_rows = pd.DataFrame(rows[-len(loader):])
        logger.info(f'fd epoch {epoch}: lr={lr:.6g} l_image={epoch_rows.l_image.mean():.4f} '
                    f'l_cs={epoch_rows.l_cs.mean():.4f} l_total={epoch_rows.l_total.mean():.4f}')
    decoder.eval()
    decoder.trained = True
    history = pd.DataFrame(rows, columns=FD_COLUMNS)
    meta = {'kind': 'face_decoder', 'trained': True, 'epoch': config.epochs, 'step': step,
            'lr': lr_at_epoch(config, config.epochs), 'seed': config.seed}
    ckpt_path, loss_path = _save_outputs(decoder, history, output_dir, 'face_decoder', 'fd', config.preset, meta)
    return TrainResult(model=decoder, history=history, checkpoint_path=ckpt_path, loss_path=loss_path)


def train_se(config: TrainConfig,
             dataset: PortraitDataset,
             fd_checkpoint: str,
             prior_bank: Optional[PriorBank],
             embedder: FaceEmbedder,
             classifier: Optional[GenderClassifier] = None,
             output_dir: Optional[str] = None,
             tag: str = 'non-prior') -> TrainResult:
    """
    Train the speech encoder (and the fusion fc in sum_fc mode) with the three-term loss.

    The decoder is loaded frozen from `fd_checkpoint`; training refuses to start without a valid
    face_decoder checkpoint of the same preset. Decoder and embedder parameters are hashed before
    and after training and must not change.

    Returns:
        TrainResult: The assembled SpeechPortrait model and the per-step loss log.
    """
    set_precision(config.dtype)
    decoder = load_face_decoder(fd_checkpoint, config.preset)
    set_seed(config.seed, config.threads)
    data = dataset.get_subset(config.cohort)
    _check_presets(config, dataset, embedder)
    encoder = SpeechEncoder(config.preset, fusion=config.fusion, seed=config.seed)
    model = SpeechPortrait(encoder, decoder, prior_bank=prior_bank, classifier=classifier,
                           prior_mode=config.prior_kind, tag=tag)
    loss_fn = loss_funcs['se_tri_loss'](decoder=decoder, embedder=embedder, weights=config.loss_weights())
    params = list(encoder.parameters())
    optimizer, scheduler = _optimizer(params, config)
    loader = build_loader(data, config.batch_size, config.seed)
    frozen_before = (parameter_hash(decoder), parameter_hash(embedder))
    dtype = next(encoder.parameters()).dtype

    rows, step = [], 0
    encoder.train()
    for epoch in tqdm(range(config.epochs), desc='train se'):
        lr = optimizer.param_groups[0]['lr']
        for specs, faces, _ in loader:
            specs, faces = specs.to(dtype), faces.to(dtype)
            with torch.no_grad():
                targets = embedder(faces)
            terms = loss_fn(targets, model.encode(specs))
            values = {'l_unit': terms['unit'].item(), 'l_hidden': terms['hidden'].item(),
                      'l_identity': terms['identity'].item()}
            values['l_total'] = values['l_unit'] + values['l_hidden'] + values['l_identity']
            _check_terms(values, epoch, step)
            _step(terms['total'], params, optimizer, config)
            rows.append({'epoch': epoch, 'step': step, 'lr': lr, **values})
            step += 1
        scheduler.step()
        epoch_rows = pd.DataFrame(rows[-len(loader):])
        logger.info(f'se epoch {epoch}: lr={lr:.6g} l_unit={epoch_rows.l_unit.mean():.4f} '
                    f'l_hidden={epoch_rows.l_hidden.mean():.4f} l_identity={epoch_rows.l_identity.mean():.4f} '
                    f'l_total={epoch_rows.l_total.mean():.4f}')
    encoder.eval()

    frozen_after = (parameter_hash(decoder), parameter_hash(embedder))
    if frozen_after != frozen_before:
        raise FrozenParameterError('frozen decoder or embedder parameters changed during encoder training')
    history = pd.DataFrame(rows, columns=SE_COLUMNS)
    meta = {'kind': 'speech_encoder', 'trained': True, 'epoch': config.epochs, 'step': step,
            'lr': lr_at_epoch(config, config.epochs), 'seed': config.seed, 'fusion': config.fusion,
            'prior_kind': config.prior_kind, 'cohort': config.cohort, 'tag': tag}
    ckpt_path, loss_path = _save_outputs(encoder, history, output_dir, 'speech_encoder', 'se', config.preset, meta)
    return TrainResult(model=model, history=history, checkpoint_path=ckpt_path, loss_path=loss_path)


def epoch_means(history: pd.DataFrame, column: str = 'l_total') -> pd.Series:
    return history.groupby('epoch')[column].mean()


def steps_to_threshold(history: pd.DataFrame, threshold: float, column: str = 'l_total',
                       window: int = 1) -> Optional[int]:
    """
    First step whose trailing `window`-step mean of `column` is at or below `threshold`.

    Returns:
        Optional[int]: The step, or None if the threshold is never reached.
    """
    smoothed = history[column].rolling(window, min_periods=window).mean()
    hits = history['step'][smoothed <= threshold]
    return int(hits.iloc[0]) if len(hits) else None
