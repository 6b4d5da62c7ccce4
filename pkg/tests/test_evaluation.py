import math

import pandas as pd
import pytest
import torch

from portrait.evaluation import (FACE_TO_FACE, REPORT_COLUMNS, ablation_report, evaluate_model,
                                 face_to_face_benchmark, report_frame, write_report_csv)
from portrait.models.face_decoder import FaceDecoder
from portrait.models.speech_portrait import get_model
from portrait.priors.bank import PriorBank, compute_prior
from portrait.tools import metric_funcs
from portrait.tools.compute_metrics import feature_metrics
from portrait.utils.errors import ContractError, InputError, StateError


@pytest.fixture(scope='module')
def bank(dataset, embedder):
    return PriorBank([compute_prior(embedder.embed_batches(dataset.faces), 'neutral')])


def test_face_to_face_with_perfect_decoder(dataset, embedder):
    faces = dataset.faces
    report = face_to_face_benchmark(embedder, lambda feats: faces, faces, batch_size=len(faces))
    assert report.model_tag == FACE_TO_FACE
    assert report.sample_count == len(faces)
    assert report.cos_deg_p == pytest.approx(0.0, abs=1e-5)
    assert report.l1p == pytest.approx(0.0, abs=1e-5)
    assert math.isnan(report.l1) and math.isnan(report.cos_deg)


def test_face_to_face_needs_trained_decoder(dataset, embedder):
    with pytest.raises(StateError):
        face_to_face_benchmark(embedder, FaceDecoder('tiny'), dataset.faces)


def test_face_to_face_needs_images(embedder):
    with pytest.raises(InputError):
        face_to_face_benchmark(embedder, lambda feats: feats, torch.zeros(0, 3, 64, 64))


def test_benchmark_uses_registered_metric(monkeypatch, dataset, embedder):
    built = []

    class FixedMetrics:

        def __init__(self, unitized=False):
            built.append(unitized)

        def __call__(self, a, b):
            return 1.0, 2.0, 3.0

    monkeypatch.setitem(metric_funcs, 'feature_metrics', FixedMetrics)
    faces = dataset.faces[:4]
    report = face_to_face_benchmark(embedder, lambda feats: faces, faces, unitized=True)
    assert built == [True]
    assert (report.l1p, report.l2p, report.cos_deg_p) == (1.0, 2.0, 3.0)


def test_evaluate_model_averages_per_sample_metrics(dataset, embedder):
    model = get_model('non-prior', 'tiny', seed=5)
    report = evaluate_model(model, dataset, embedder)
    assert report.model_tag == 'non-prior'
    assert report.sample_count == len(dataset)

    with torch.no_grad():
        targets = embedder(dataset.faces)
        speech = model.encode(dataset.spectrograms)
        regenerated = embedder(model.decoder(speech))
    speech_rows = [feature_metrics(s, f) for s, f in zip(speech, targets)]
    face_rows = [feature_metrics(g, f) for g, f in zip(regenerated, targets)]
    n = len(dataset)
    assert report.l1 == pytest.approx(sum(r[0] for r in speech_rows) / n, rel=1e-12)
    assert report.cos_deg == pytest.approx(sum(r[2] for r in speech_rows) / n, rel=1e-12)
    assert report.l2p == pytest.approx(sum(r[1] for r in face_rows) / n, rel=1e-12)
    assert 0.0 <= report.cos_deg_p <= 180.0


def test_unitized_evaluation_bounds(dataset, embedder):
    report = evaluate_model(get_model('non-prior', 'tiny'), dataset, embedder, unitized=True)
    assert 0.0 <= report.l2 <= 2.0
    assert 0.0 <= report.l1p <= 2.0 * math.sqrt(512)


def test_preset_mismatch(dataset, embedder):
    model = get_model('non-prior', 'tiny')
    model.encoder.preset = 'other'
    with pytest.raises(ContractError):
        evaluate_model(model, dataset, embedder)
    with pytest.raises(ContractError):
        ablation_report([model, get_model('non-prior', 'tiny')], dataset, embedder)


def test_ablation_rows_follow_tag_order(dataset, embedder, bank):
    models = [get_model('neutral', 'tiny', prior_bank=bank), get_model('non-prior', 'tiny')]
    frame = ablation_report(models, dataset, embedder)
    assert list(frame.columns) == REPORT_COLUMNS
    assert frame['model'].tolist() == ['non-prior', 'neutral']
    assert (frame['n'] == len(dataset)).all()


def test_ablation_needs_models(dataset, embedder):
    with pytest.raises(InputError):
        ablation_report([], dataset, embedder)


def test_report_csv(tmp_path, dataset, embedder):
    reports = [
        face_to_face_benchmark(embedder, lambda feats: dataset.faces, dataset.faces, batch_size=len(dataset)),
        evaluate_model(get_model('non-prior', 'tiny'), dataset, embedder),
    ]
    first = write_report_csv(reports, str(tmp_path / 'a' / 'report.csv'))
    second = write_report_csv(report_frame(reports), str(tmp_path / 'b' / 'report.csv'))
    with open(first, 'rb') as f:
        raw = f.read()
    with open(second, 'rb') as f:
        assert f.read() == raw
    lines = raw.decode().splitlines()
    assert lines[0] == 'model,l1,l2,cos_deg,l1p,l2p,cos_deg_p,n'
    assert lines[1].startswith('face-to-face,-,-,-,')
    assert lines[2].startswith('non-prior,')
    assert pd.read_csv(first, na_values='-')['n'].tolist() == [len(dataset)] * 2
