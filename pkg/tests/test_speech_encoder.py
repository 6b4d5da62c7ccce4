import math

import pytest
import torch

from portrait.audio.spectrogram import Spectrogram, StftParams
from portrait.core.gradcheck import check_gradients
from portrait.models.speech_encoder import RESIDUAL_INIT_SCALE, FusionMode, SpeechEncoder, fuse_prior, se_forward
from portrait.models.speech_portrait import get_model
from portrait.priors.bank import PriorFeature
from portrait.utils.errors import DimensionError, ParameterError, StateError


@pytest.fixture
def prior():
    return PriorFeature(vec=torch.arange(512, dtype=torch.float64) / 4, kind='neutral', n_samples=1)


def test_tiny_output_shapes():
    encoder = SpeechEncoder('tiny')
    assert encoder(torch.randn(2, 1, 33, 74)).shape == (2, 512)
    assert se_forward(encoder, torch.randn(1, 33, 74)).shape == (512,)


def test_single_spectrogram_inputs():
    encoder = SpeechEncoder('tiny')
    x = torch.randn(1, 33, 74)
    expected = encoder(x.unsqueeze(0))[0]
    torch.testing.assert_close(se_forward(encoder, x), expected)
    torch.testing.assert_close(se_forward(encoder, Spectrogram(x, StftParams.for_preset('tiny'))), expected)
    with pytest.raises(DimensionError):
        se_forward(encoder, torch.randn(33, 74))


def test_generate_from_single_spectrogram():
    model = get_model('non-prior', 'tiny')
    x = torch.randn(1, 33, 74)
    assert model.generate(x).shape == (3, 64, 64)
    assert model.generate(Spectrogram(x, StftParams.for_preset('tiny'))).shape == (3, 64, 64)
    assert model.generate(torch.randn(2, 1, 33, 74)).shape == (2, 3, 64, 64)


@pytest.mark.slow
def test_full_output_length():
    encoder = SpeechEncoder('full')
    with torch.no_grad():
        assert encoder(torch.randn(1, 1, 257, 598)).shape == (1, 4096)


def test_zero_input_gives_zero_feature():
    encoder = SpeechEncoder('tiny')
    out = encoder(torch.zeros(1, 1, 33, 74))
    assert torch.equal(out, torch.zeros(1, 512))


def test_input_dims_checked():
    with pytest.raises(DimensionError):
        SpeechEncoder('tiny')(torch.zeros(1, 1, 30, 74))


def test_seeded_initialisation():
    a, b, c = SpeechEncoder('tiny', seed=3), SpeechEncoder('tiny', seed=3), SpeechEncoder('tiny', seed=4)
    for (_, pa), (_, pb) in zip(a.named_parameters(), b.named_parameters()):
        assert torch.equal(pa, pb)
    assert not torch.equal(a.layers.Conv1.weight, c.layers.Conv1.weight)
    assert all(not p.any() for name, p in a.named_parameters() if name.endswith('bias'))
    bound = RESIDUAL_INIT_SCALE * math.sqrt(6.0 / 512)
    assert a.layers.Fc2.weight.abs().max() <= bound * (1 + 1e-6)


def test_fusion_fc_starts_as_identity():
    encoder = SpeechEncoder('tiny', fusion='sum_fc')
    assert torch.equal(encoder.fusion_fc.weight, torch.eye(512))
    assert not encoder.fusion_fc.bias.any()
    assert SpeechEncoder('tiny', fusion='sum').fusion_fc is None


def test_sum_with_zero_feature_is_prior(prior):
    fused = fuse_prior(torch.zeros(512), prior, FusionMode.SUM)
    assert torch.equal(fused, prior.vec.float())


def test_none_returns_feature_unchanged(prior):
    s_f = torch.randn(3, 512)
    assert fuse_prior(s_f, prior, 'none') is s_f
    assert fuse_prior(s_f, None, 'none') is s_f


def test_identity_fusion_fc(prior):
    encoder = SpeechEncoder('tiny', fusion='sum_fc')
    s_f = torch.randn(2, 512)
    fused = fuse_prior(s_f, prior, 'sum_fc', encoder.fusion_fc)
    torch.testing.assert_close(fused, s_f + prior.vec.float())
    single = fuse_prior(s_f[0], prior, 'sum_fc', encoder.fusion_fc)
    torch.testing.assert_close(single, s_f[0] + prior.vec.float())


def test_per_sample_priors():
    priors = torch.randn(3, 512)
    s_f = torch.randn(3, 512)
    torch.testing.assert_close(fuse_prior(s_f, priors, 'sum'), s_f + priors)


def test_encode_matches_forward_plus_prior(prior):
    encoder = SpeechEncoder('tiny', fusion='sum')
    spec = torch.randn(2, 1, 33, 74)
    torch.testing.assert_close(encoder.encode(spec, prior), encoder(spec) + prior.vec.float())


def test_fusion_errors(prior):
    with pytest.raises(StateError):
        fuse_prior(torch.zeros(512), None, 'sum')
    with pytest.raises(StateError):
        fuse_prior(torch.zeros(512), prior, 'sum_fc', None)
    with pytest.raises(DimensionError, match='axis D'):
        fuse_prior(torch.zeros(256), prior, 'sum')
    with pytest.raises(ParameterError):
        fuse_prior(torch.zeros(512), prior, 'product')


def test_encoder_gradients(float64):
    encoder = SpeechEncoder('tiny', seed=1)
    g = torch.Generator().manual_seed(0)
    for _ in range(100):
        spec = torch.rand(1, 1, 33, 74, generator=g).requires_grad_()
        assert check_gradients(lambda s: encoder(s), [spec], eps=1e-7, fast_mode=True)


def test_fusion_fc_gradients(float64, prior):
    encoder = SpeechEncoder('tiny', fusion='sum_fc', seed=1)
    s_f = torch.randn(2, 512, requires_grad=True)
    assert check_gradients(lambda s: fuse_prior(s, prior, 'sum_fc', encoder.fusion_fc), [s_f], fast_mode=True)


def test_prior_shift_moves_feature_exactly(float64):
    s_f = torch.randn(512)
    base = torch.randn(512)
    delta = torch.randn(512)
    shifted = fuse_prior(s_f, base + delta, 'sum') - fuse_prior(s_f, base, 'sum')
    torch.testing.assert_close(shifted, delta, rtol=0, atol=1e-12)


def test_none_and_sum_agree_for_zero_prior():
    s_f = torch.randn(2, 512)
    zero = PriorFeature(vec=torch.zeros(512), kind='neutral', n_samples=1)
    assert torch.equal(fuse_prior(s_f, zero, 'sum'), fuse_prior(s_f, zero, 'none'))
