"""
Feature-space evaluation of trained speech-portrait models and the Face-to-Face benchmark.
"""
import logging
import math
import os
import os.path as osp
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Sequence, Union

import pandas as pd
import torch
from torch.utils.data import DataLoader
from tqdm import tqdm

from portrait.datasets.dataset import PortraitDataset
from portrait.models.embedder import FaceEmbedder
from portrait.models.face_decoder import FaceDecoder
from portrait.models.speech_portrait import MODEL_TAGS, SpeechPortrait
from portrait.tools import metric_funcs
from portrait.utils.errors import ContractError, InputError, StateError

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ['model', 'l1', 'l2', 'cos_deg', 'l1p', 'l2p', 'cos_deg_p', 'n']
SPEECH_COLUMNS = ['l1', 'l2', 'cos_deg']
FACE_COLUMNS = ['l1p', 'l2p', 'cos_deg_p']
FACE_TO_FACE = 'face-to-face'


@dataclass
class MetricsReport:
    """
    Averaged feature metrics of one model.

    Attributes:
        model_tag (str): Ablation tag, or 'face-to-face'.
        l1, l2, cos_deg (float): Speech-encoder output vs. ground-truth face feature (NaN for Face-to-Face).
        l1p, l2p, cos_deg_p (float): Feature of the generated face vs. ground-truth face feature.
        sample_count (int): Number of evaluated samples.
    """
    model_tag: str
    l1: float
    l2: float
    cos_deg: float
    l1p: float
    l2p: float
    cos_deg_p: float
    sample_count: int

    def to_row(self) -> Dict[str, Union[str, float, int]]:
        row = asdict(self)
        tag, n = row.pop('model_tag'), row.pop('sample_count')
        return {'model': tag, **row, 'n': n}


def _average(rows: List[Dict[str, float]], columns: Sequence[str]) -> Dict[str, float]:
    if not rows:
        raise InputError('cannot average metrics over zero samples')
    means = pd.DataFrame(rows, columns=list(columns)).mean()
    return {c: float(means[c]) for c in columns}


@torch.no_grad()
def evaluate_model(model: SpeechPortrait,
                   dataset: PortraitDataset,
                   embedder: FaceEmbedder,
                   unitized: bool = False,
                   batch_size: int = 32) -> MetricsReport:
    """
    Evaluate a speech-portrait model on every sample of `dataset`.

    Per sample, with f = embedder(face): (l1, l2, cos_deg) compares the fused speech feature
    with f, and (l1p, l2p, cos_deg_p) compares embedder(generated face) with f. The report holds
    the arithmetic means.

    Args:
        model (SpeechPortrait): Trained model.
        dataset (PortraitDataset): Evaluation pairs, same preset as the model.
        embedder (FaceEmbedder): Frozen face embedder.
        unitized (bool): Compare unit-normalised features.
        batch_size (int): Forward batch size.

    Returns:
        MetricsReport: Averaged metrics.
    """
    if model.preset != dataset.preset or embedder.preset != dataset.preset:
        raise ContractError(f'model ({model.preset}), embedder ({embedder.preset}) and dataset ({dataset.preset}) '
                            f'presets differ')
    model.eval()
    dtype = next(model.encoder.parameters()).dtype
    measure = metric_funcs['feature_metrics'](unitized=unitized)
    rows = []
    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False)
    for specs, faces, _ in tqdm(loader, desc=f'eval {model.tag}', leave=False):
        specs, faces = specs.to(dtype), faces.to(dtype)
        targets = embedder(faces)
        speech = model.encode(specs)
        regenerated = embedder(model.decoder(speech))
        for f, s, g in zip(targets, speech, regenerated):
            row = dict(zip(SPEECH_COLUMNS, measure(s, f)))
            row.update(zip(FACE_COLUMNS, measure(g, f)))
            rows.append(row)
    means = _average(rows, SPEECH_COLUMNS + FACE_COLUMNS)
    report = MetricsReport(model_tag=model.tag, sample_count=len(rows), **means)
    logger.info(f'{model.tag}: l1={report.l1:.4f} l2={report.l2:.4f} cos={report.cos_deg:.3f} '
                f'l1p={report.l1p:.4f} l2p={report.l2p:.4f} cos_p={report.cos_deg_p:.3f} (n={report.sample_count})')
    return report


@torch.no_grad()
def face_to_face_benchmark(embedder: FaceEmbedder,
                           decoder: Union[FaceDecoder, Callable[[torch.Tensor], torch.Tensor]],
                           images: torch.Tensor,
                           unitized: bool = False,
                           batch_size: int = 32) -> MetricsReport:
    """
    Regenerate every face from its own feature and compare embedder(regenerated) with the feature.

    Args:
        embedder (FaceEmbedder): Frozen face embedder.
        decoder: Trained FaceDecoder, or any callable mapping features [N, D] to images [N, 3, S, S].
        images (torch.Tensor): Faces [N, 3, S, S].

    Returns:
        MetricsReport: Only the primed columns are filled; the speech columns are NaN.
    """
    if isinstance(decoder, FaceDecoder):
        if not decoder.trained:
            raise StateError('face-to-face benchmark needs a trained face decoder')
        decoder.eval()
    if len(images) == 0:
        raise InputError('face-to-face benchmark needs at least one image')
    measure = metric_funcs['feature_metrics'](unitized=unitized)
    rows = []
    for start in tqdm(range(0, len(images), batch_size), desc='face-to-face', leave=False):
        batch = images[start:start + batch_size]
        feats = embedder(batch)
        regenerated = embedder(decoder(feats))
        for f, g in zip(feats, regenerated):
            rows.append(dict(zip(FACE_COLUMNS, measure(g, f))))
    means = _average(rows, FACE_COLUMNS)
    report = MetricsReport(model_tag=FACE_TO_FACE, l1=math.nan, l2=math.nan, cos_deg=math.nan,
                           sample_count=len(rows), **means)
    logger.info(f'face-to-face: l1p={report.l1p:.4f} l2p={report.l2p:.4f} cos_p={report.cos_deg_p:.3f}')
    return report


def ablation_report(models: Sequence[SpeechPortrait],
                    dataset: PortraitDataset,
                    embedder: FaceEmbedder,
                    unitized: bool = False) -> pd.DataFrame:
    """
    One row per model in ablation tag order; models with unknown tags follow in the given order.
    """
    if not models:
        raise InputError('ablation report needs at least one model')
    presets = {m.preset for m in models}
    if len(presets) > 1:
        raise ContractError(f'models were trained on different presets: {sorted(presets)}')
    order = list(MODEL_TAGS)
    ranked = sorted(models, key=lambda m: order.index(m.tag) if m.tag in order else len(order))
    reports = [evaluate_model(m, dataset, embedder, unitized) for m in ranked]
    return report_frame(reports)


def report_frame(reports: Sequence[MetricsReport]) -> pd.DataFrame:
    return pd.DataFrame([r.to_row() for r in reports], columns=REPORT_COLUMNS)


def write_report_csv(reports: Union[pd.DataFrame, Sequence[MetricsReport]], path: str) -> str:
    """
    Write `model,l1,l2,cos_deg,l1p,l2p,cos_deg_p,n`; missing values are written as '-'.
    """
    frame = reports if isinstance(reports, pd.DataFrame) else report_frame(reports)
    if osp.dirname(path):
        os.makedirs(osp.dirname(path), exist_ok=True)
    frame[REPORT_COLUMNS].to_csv(path, index=False, float_format='%.6f', na_rep='-')
    logger.info(f'wrote {len(frame)} report rows to {path}')
    return path
