import json
import logging
import os.path as osp
import typing
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional

from portrait.core.tensor import DTYPES
from portrait.models.network_spec import PRESETS
from portrait.models.speech_encoder import FusionMode
from portrait.models.speech_portrait import get_variant
from portrait.tools.losses import LossWeights
from portrait.utils.errors import InputError, ParameterError

logger = logging.getLogger(__name__)

DEFAULT_ARGS_PATH = osp.join(osp.dirname(osp.abspath(__file__)), '..', '..', 'config', 'default_args.json')
PRIOR_KINDS = (None, 'neutral', 'gender', 'male', 'female')
COHORTS = (None, 'male', 'female')


@dataclass
class TrainConfig:
    preset: str = 'tiny'
    lr: float = 0.001
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-4
    lr_decay: float = 0.9
    lr_decay_every: int = 2
    epochs: int = 50
    batch_size: int = 16
    seed: int = 0
    fusion: str = 'none'
    prior_kind: Optional[str] = None
    cohort: Optional[str] = None
    alpha: float = 0.84
    lambda1: float = 1.0
    lambda2: float = 0.04
    lambda3: float = 1.2
    grad_clip: Optional[float] = None
    n_samples: int = 200
    test_ratio: float = 0.2
    embedder_seed: int = 1234
    classifier_epochs: int = 10
    dtype: str = 'float32'
    threads: Optional[int] = 1

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ParameterError(f'unknown preset {self.preset!r}')
        if self.lr <= 0 or self.eps <= 0:
            raise ParameterError(f'lr and eps must be positive, got lr={self.lr}, eps={self.eps}')
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ParameterError(f'Adam betas must lie in (0, 1), got {(self.beta1, self.beta2)}')
        if not 0 < self.lr_decay <= 1 or self.lr_decay_every < 1:
            raise ParameterError(f'illegal lr schedule: decay {self.lr_decay} every {self.lr_decay_every} epochs')
        if min(self.epochs, self.batch_size, self.n_samples, self.classifier_epochs) < 1:
            raise ParameterError('epochs, batch_size, n_samples and classifier_epochs must be positive')
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ParameterError(f'grad_clip must be positive when set, got {self.grad_clip}')
        if self.fusion not in [m.value for m in FusionMode]:
            raise ParameterError(f'unknown fusion mode {self.fusion!r}')
        if self.prior_kind not in PRIOR_KINDS:
            raise ParameterError(f'unknown prior kind {self.prior_kind!r}')
        if (self.fusion == FusionMode.NONE.value) != (self.prior_kind is None):
            raise ParameterError(f'fusion {self.fusion} is inconsistent with prior kind {self.prior_kind}')
        if self.cohort not in COHORTS:
            raise ParameterError(f'unknown cohort {self.cohort!r}')
        if self.dtype not in DTYPES:
            raise ParameterError(f'unknown dtype {self.dtype!r}')
        self.loss_weights()

    def loss_weights(self) -> LossWeights:
        return LossWeights.for_preset(self.preset, alpha=self.alpha, lambda1=self.lambda1,
                                      lambda2=self.lambda2, lambda3=self.lambda3)

    def for_model(self, tag: str) -> 'TrainConfig':
        """
        Copy with fusion, prior kind and cohort set for one ablation model tag.
        """
        variant = get_variant(tag)
        return replace(self, fusion=variant.fusion.value, prior_kind=variant.prior_mode, cohort=variant.cohort)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_sources(cls,
                     preset: Optional[str] = None,
                     config_file: Optional[str] = None,
                     overrides: Optional[Dict[str, Any]] = None,
                     json_file: str = DEFAULT_ARGS_PATH) -> 'TrainConfig':
        """
        Merge, from low to high precedence: dataclass defaults, the preset block of the JSON
        defaults file, a key=value config file and explicit overrides (None values are skipped).
        """
        from_file = load_config_file(config_file) if config_file else {}
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        preset = preset or overrides.get('preset') or from_file.get('preset') or cls.preset
        values: Dict[str, Any] = {'preset': preset}
        values.update(coerce_values(load_default_args(preset, json_file)))
        values.update(from_file)
        values.update(coerce_values(overrides))
        values['preset'] = preset
        return cls(**values)


def load_default_args(preset: str, json_file: str = DEFAULT_ARGS_PATH) -> Dict[str, Any]:
    if not osp.exists(json_file):
        logger.debug(f'no defaults file at {json_file}')
        return {}
    with open(json_file, 'r') as f:
        default_args = json.load(f)
    return default_args.get(preset, {})


def _field_types() -> Dict[str, Any]:
    hints = typing.get_type_hints(TrainConfig)
    return {f.name: hints[f.name] for f in fields(TrainConfig)}


def _coerce(key: str, value: Any, annotation: Any) -> Any:
    optional = type(None) in typing.get_args(annotation)
    base = next((t for t in typing.get_args(annotation) if t is not type(None)), annotation)
    if isinstance(value, str):
        value = value.strip()
        if optional and value.lower() in ('', 'none', 'null'):
            return None
    elif value is None:
        if optional:
            return None
        raise ParameterError(f'config key {key} cannot be empty')
    try:
        if base is int:
            return int(value)
        if base is float:
            return float(value)
        return str(value)
    except ValueError:
        raise ParameterError(f'config key {key}: cannot read {value!r} as {base.__name__}')


def coerce_values(values: Dict[str, Any]) -> Dict[str, Any]:
    types = _field_types()
    unknown = sorted(set(values) - set(types))
    if unknown:
        raise ParameterError(f'unknown config keys: {unknown}')
    return {key: _coerce(key, value, types[key]) for key, value in values.items()}


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a line-based key=value file. Blank lines and lines starting with # are ignored.
    """
    if not osp.exists(path):
        raise InputError(f'config file {path} does not exist')
    values = {}
    with open(path, 'r') as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith('#'):
                continue
            if '=' not in line:
                raise ParameterError(f'{path}:{lineno}: expected key=value, got {line!r}')
            key, value = line.split('=', 1)
            values[key.strip()] = value.strip()
    return coerce_values(values)


def lr_at_epoch(config: TrainConfig, epoch: int) -> float:
    """
    Step decay: lr * lr_decay ** floor(epoch / lr_decay_every).
    """
    return config.lr * config.lr_decay ** (epoch // config.lr_decay_every)
