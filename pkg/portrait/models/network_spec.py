"""
Declarative layer tables for the speech encoder, face decoder and gender classifier.

The full preset reproduces the published layer tables row by row; the tiny preset keeps the
layer kinds and order with reduced channels, kernels and spatial sizes so that training and
gradient checks run on a laptop.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from portrait.utils.errors import DimensionError, ParameterError

Dims = Tuple[int, ...]

CONV = 'conv'
CONV_TRANSPOSE = 'conv_transpose'
MAXPOOL = 'maxpool'
AVGPOOL_GLOBAL = 'avgpool_global'
CBAM = 'cbam'
FC = 'fc'
RESHAPE = 'reshape'
LAYER_KINDS = (CONV, CONV_TRANSPOSE, MAXPOOL, AVGPOOL_GLOBAL, CBAM, FC, RESHAPE)


@dataclass(frozen=True)
class ScalePreset:
    name: str
    embed_dim: int
    spec_dims: Tuple[int, int]
    stft_window: int
    stft_hop: int
    stft_fft: int
    image_size: int
    fd_hidden: int
    fd_seed: int
    fd_channels: Tuple[int, int, int, int, int]
    cbam_ratio: int
    cbam_kernel: int
    fc3_dim: int
    embedder_channels: Tuple[int, int, int]
    embedder_grid: int
    msssim_scales: int
    se_rows: Tuple[tuple, ...] = field(repr=False)


PRESETS: Dict[str, ScalePreset] = {
    'full': ScalePreset(
        name='full', embed_dim=4096, spec_dims=(257, 598),
        stft_window=400, stft_hop=160, stft_fft=512,
        image_size=224, fd_hidden=1000, fd_seed=7, fd_channels=(512, 256, 64, 32, 64),
        cbam_ratio=16, cbam_kernel=7, fc3_dim=2622,
        embedder_channels=(32, 64, 64), embedder_grid=7, msssim_scales=5,
        se_rows=(
            ('Conv1', CONV, 7, 2, 1, 64),
            ('MaxPool1', MAXPOOL, 3, 2, 0, None),
            ('Conv2', CONV, 5, 2, 1, 128),
            ('MaxPool2', MAXPOOL, 3, 2, 0, None),
            ('Conv3', CONV, 3, 1, 1, 256),
            ('Conv4', CONV, 3, 1, 1, 512),
            ('Conv5', CONV, 3, 1, 1, 512),
            ('MaxPool3', MAXPOOL, (5, 3), (3, 2), 0, None),
        )),
    'tiny': ScalePreset(
        name='tiny', embed_dim=512, spec_dims=(33, 74),
        stft_window=64, stft_hop=1300, stft_fft=64,
        image_size=64, fd_hidden=125, fd_seed=2, fd_channels=(64, 32, 8, 4, 8),
        cbam_ratio=2, cbam_kernel=3, fc3_dim=328,
        embedder_channels=(8, 16, 16), embedder_grid=4, msssim_scales=3,
        se_rows=(
            ('Conv1', CONV, 3, 1, 1, 8),
            ('MaxPool1', MAXPOOL, 2, 2, 0, None),
            ('Conv2', CONV, 3, 1, 1, 16),
            ('MaxPool2', MAXPOOL, 2, 2, 0, None),
            ('Conv3', CONV, 3, 1, 1, 32),
            ('Conv4', CONV, 3, 1, 1, 64),
            ('Conv5', CONV, 3, 1, 1, 64),
            ('MaxPool3', MAXPOOL, (5, 3), (3, 2), 0, None),
        )),
}


def get_preset(name: str) -> ScalePreset:
    if name not in PRESETS:
        raise ParameterError(f'unknown preset {name!r}, choose from {list(PRESETS)}')
    return PRESETS[name]


def _pair(value) -> Tuple[int, int]:
    if isinstance(value, int):
        return value, value
    return tuple(value)


@dataclass(frozen=True)
class LayerSpec:
    """
    One table row: layer name, op kind and its hyperparameters.

    `out` is the output channel count for conv kinds, the output width for fc, and the target
    (C, H, W) for reshape. `activation` is applied after the op ('relu', 'sigmoid' or None).
    """
    name: str
    kind: str
    kernel: Tuple[int, int] = (1, 1)
    stride: Tuple[int, int] = (1, 1)
    padding: Tuple[int, int] = (0, 0)
    output_padding: Tuple[int, int] = (0, 0)
    out: Optional[object] = None
    activation: Optional[str] = None
    reduction: int = 1

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ParameterError(f'layer {self.name}: unknown kind {self.kind!r}')


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    preset: str
    input_dims: Dims
    layers: Tuple[LayerSpec, ...]

    def layer(self, name: str) -> LayerSpec:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    def __len__(self) -> int:
        return len(self.layers)


def _row(name, kind, kernel, stride, padding, out, activation='relu') -> LayerSpec:
    return LayerSpec(name=name, kind=kind, kernel=_pair(kernel), stride=_pair(stride),
                     padding=_pair(padding), out=out, activation=activation if kind == CONV else None)


def se_network_spec(preset: str = 'tiny', with_fusion: bool = False) -> NetworkSpec:
    """
    Speech-encoder table: Conv1 ... MaxPool3, CBAM, Fc1 (1x1 conv), AvgPool1 (global), Fc2.

    Args:
        preset (str): 'full' or 'tiny'.
        with_fusion (bool): Append the trainable fusion fc used by the sum_fc fusion mode.
    """
    p = get_preset(preset)
    layers = [_row(*row) for row in p.se_rows]
    layers += [
        LayerSpec(name='CBAM', kind=CBAM, kernel=(p.cbam_kernel, p.cbam_kernel), reduction=p.cbam_ratio),
        LayerSpec(name='Fc1', kind=CONV, kernel=(1, 1), out=p.embed_dim, activation='relu'),
        LayerSpec(name='AvgPool1', kind=AVGPOOL_GLOBAL),
        LayerSpec(name='Fc2', kind=FC, out=p.embed_dim),
    ]
    if with_fusion:
        layers.append(LayerSpec(name='FusionFc', kind=FC, out=p.embed_dim))
    return NetworkSpec(name='speech_encoder', preset=preset, input_dims=(1,) + p.spec_dims, layers=tuple(layers))


def fd_network_spec(preset: str = 'tiny') -> NetworkSpec:
    """
    Face-decoder table: Fc1, Fc2, reshape, ConvTrans1-11, the added ConvTrans12, Conv1 (1x1).

    CBAM sits after ConvTrans8, the deepest stage at the third channel width.
    """
    p = get_preset(preset)
    c512, c256, c64, c32, c_last = p.fd_channels
    up = dict(kernel=(5, 5), stride=(2, 2), padding=(2, 2), output_padding=(1, 1), activation='relu')
    keep = dict(kernel=(5, 5), stride=(1, 1), padding=(2, 2), output_padding=(0, 0), activation='relu')
    layers = [
        LayerSpec(name='Fc1', kind=FC, out=p.fd_hidden, activation='relu'),
        LayerSpec(name='Fc2', kind=FC, out=c512 * p.fd_seed * p.fd_seed, activation='relu'),
        LayerSpec(name='Reshape', kind=RESHAPE, out=(c512, p.fd_seed, p.fd_seed)),
        LayerSpec(name='ConvTrans1', kind=CONV_TRANSPOSE, out=c512, **up),
        LayerSpec(name='ConvTrans2', kind=CONV_TRANSPOSE, out=c512, **keep),
        LayerSpec(name='ConvTrans3', kind=CONV_TRANSPOSE, out=c512, **keep),
        LayerSpec(name='ConvTrans4', kind=CONV_TRANSPOSE, out=c512, **keep),
        LayerSpec(name='ConvTrans5', kind=CONV_TRANSPOSE, out=c512, **keep),
        LayerSpec(name='ConvTrans6', kind=CONV_TRANSPOSE, out=c256, **up),
        LayerSpec(name='ConvTrans7', kind=CONV_TRANSPOSE, out=c256, **keep),
        LayerSpec(name='ConvTrans8', kind=CONV_TRANSPOSE, out=c256, **keep),
        LayerSpec(name='CBAM', kind=CBAM, kernel=(p.cbam_kernel, p.cbam_kernel), reduction=p.cbam_ratio),
        LayerSpec(name='ConvTrans9', kind=CONV_TRANSPOSE, out=c64, **up),
        LayerSpec(name='ConvTrans10', kind=CONV_TRANSPOSE, out=c64, **keep),
        LayerSpec(name='ConvTrans11', kind=CONV_TRANSPOSE, out=c32, **up),
        LayerSpec(name='ConvTrans12', kind=CONV_TRANSPOSE, out=c_last, **up),
        LayerSpec(name='Conv1', kind=CONV, kernel=(1, 1), out=3, activation='sigmoid'),
    ]
    return NetworkSpec(name='face_decoder', preset=preset, input_dims=(p.embed_dim,), layers=tuple(layers))


def gender_network_spec(preset: str = 'tiny') -> NetworkSpec:
    """
    Gender classifier: the five conv and three max-pool rows of the encoder, global average
    pooling and two fc layers ending in two logits (index 0 = male, 1 = female).
    """
    p = get_preset(preset)
    layers = [_row(*row) for row in p.se_rows]
    width = [row[5] for row in p.se_rows if row[1] == CONV][-1]
    layers += [
        LayerSpec(name='AvgPool1', kind=AVGPOOL_GLOBAL),
        LayerSpec(name='Fc1', kind=FC, out=width // 2, activation='relu'),
        LayerSpec(name='Fc2', kind=FC, out=2),
    ]
    return NetworkSpec(name='gender_classifier', preset=preset, input_dims=(1,) + p.spec_dims, layers=tuple(layers))


def _layer_output(layer: LayerSpec, dims: Dims) -> Dims:
    kh, kw = layer.kernel
    sh, sw = layer.stride
    ph, pw = layer.padding
    if layer.kind in (CONV, CONV_TRANSPOSE, MAXPOOL, AVGPOOL_GLOBAL, CBAM):
        if len(dims) != 3:
            raise DimensionError(f'layer {layer.name}: expected a (C, H, W) map, got {dims}')
        c, h, w = dims
    if layer.kind == CONV:
        if kh > h + 2 * ph or kw > w + 2 * pw:
            raise DimensionError(f'layer {layer.name}: kernel {layer.kernel} does not fit padded input {(h + 2 * ph, w + 2 * pw)}')
        return (layer.out, (h + 2 * ph - kh) // sh + 1, (w + 2 * pw - kw) // sw + 1)
    if layer.kind == MAXPOOL:
        if kh > h or kw > w:
            raise DimensionError(f'layer {layer.name}: kernel {layer.kernel} does not fit input {(h, w)}')
        return (c, (h - kh) // sh + 1, (w - kw) // sw + 1)
    if layer.kind == CONV_TRANSPOSE:
        oh, ow = layer.output_padding
        if oh >= sh or ow >= sw:
            raise DimensionError(f'layer {layer.name}: output padding {layer.output_padding} must be below stride {layer.stride}')
        return (layer.out, (h - 1) * sh - 2 * ph + kh + oh, (w - 1) * sw - 2 * pw + kw + ow)
    if layer.kind == CBAM:
        if c % layer.reduction != 0:
            raise DimensionError(f'layer {layer.name}: reduction {layer.reduction} does not divide {c} channels')
        if kh % 2 == 0 or kh > h + 2 * (kh // 2) or kw > w + 2 * (kw // 2):
            raise DimensionError(f'layer {layer.name}: spatial kernel {layer.kernel} is not odd or does not fit')
        return dims
    if layer.kind == AVGPOOL_GLOBAL:
        return (c, 1, 1)
    if layer.kind == FC:
        n_in = 1
        for d in dims:
            n_in *= d
        if len(dims) == 3 and dims[1:] != (1, 1):
            raise DimensionError(f'layer {layer.name}: fc input must be a vector or a 1x1 map, got {dims}')
        return (layer.out,)
    if layer.kind == RESHAPE:
        n_in, n_out = 1, 1
        for d in dims:
            n_in *= d
        for d in layer.out:
            n_out *= d
        if n_in != n_out:
            raise DimensionError(f'layer {layer.name}: cannot reshape {dims} to {layer.out}')
        return tuple(layer.out)
    raise DimensionError(f'layer {layer.name}: unknown kind {layer.kind}')


def shape_trace(spec: NetworkSpec, input_dims: Optional[Dims] = None) -> List[Tuple[str, Dims]]:
    """
    Symbolic per-layer output dims; no activation is allocated.

    Args:
        spec (NetworkSpec): The network table.
        input_dims (Dims, optional): Input dims, defaults to spec.input_dims.

    Returns:
        List[Tuple[str, Dims]]: One (layer name, output dims) entry per layer.
    """
    dims = tuple(input_dims) if input_dims is not None else spec.input_dims
    trace = []
    for layer in spec.layers:
        dims = _layer_output(layer, dims)
        trace.append((layer.name, dims))
    return trace


def parameter_count(spec: NetworkSpec) -> int:
    """
    Exact number of trainable scalars implied by the table (weights and biases).
    """
    total = 0
    dims = spec.input_dims
    for layer in spec.layers:
        kh, kw = layer.kernel
        if layer.kind in (CONV, CONV_TRANSPOSE):
            total += dims[0] * layer.out * kh * kw + layer.out
        elif layer.kind == FC:
            n_in = 1
            for d in dims:
                n_in *= d
            total += n_in * layer.out + layer.out
        elif layer.kind == CBAM:
            c, hidden = dims[0], dims[0] // layer.reduction
            total += c * hidden + hidden + hidden * c + c + 2 * kh * kw + 1
        dims = _layer_output(layer, dims)
    return total
