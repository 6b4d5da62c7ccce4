import contextlib
import logging
from typing import Iterator, Tuple, Union

import torch

from portrait.utils.errors import DimensionError, NumericalError, ParameterError

logger = logging.getLogger(__name__)

DTYPES = {
    'float32': torch.float32,
    'float64': torch.float64,
}


def resolve_dtype(name: Union[str, torch.dtype]) -> torch.dtype:
    if isinstance(name, torch.dtype):
        if name not in DTYPES.values():
            raise ParameterError(f'unsupported dtype {name}')
        return name
    if name not in DTYPES:
        raise ParameterError(f'unsupported dtype {name!r}, choose from {list(DTYPES)}')
    return DTYPES[name]


def set_precision(name: Union[str, torch.dtype]) -> torch.dtype:
    """
    Switch the default floating point precision at runtime.

    Args:
        name (Union[str, torch.dtype]): 'float32' (training) or 'float64' (gradient checks).

    Returns:
        torch.dtype: The previous default dtype.
    """
    previous = torch.get_default_dtype()
    dtype = resolve_dtype(name)
    torch.set_default_dtype(dtype)
    if dtype != previous:
        logger.debug(f'default dtype {previous} -> {dtype}')
    return previous


@contextlib.contextmanager
def precision(name: Union[str, torch.dtype]) -> Iterator[torch.dtype]:
    previous = set_precision(name)
    try:
        yield torch.get_default_dtype()
    finally:
        torch.set_default_dtype(previous)


def check_finite(tensor: torch.Tensor, what: str) -> torch.Tensor:
    """
    Raise if a forward result contains NaN or Inf.

    Args:
        tensor (torch.Tensor): Result to check.
        what (str): Name of the producing op, used in the error message.

    Returns:
        torch.Tensor: The unchanged tensor.
    """
    if not torch.isfinite(tensor).all():
        n_bad = int((~torch.isfinite(tensor)).sum())
        raise NumericalError(f'{what} produced {n_bad} non-finite values')
    return tensor


def as_batch(spec) -> Tuple[torch.Tensor, bool]:
    """
    Accept a Spectrogram, a single [1, F, T] tensor or a batch [N, 1, F, T].

    Returns:
        Tuple[torch.Tensor, bool]: The [N, 1, F, T] batch and whether the input was a single spectrogram.
    """
    values = spec if isinstance(spec, torch.Tensor) else spec.values
    if values.dim() == 3:
        return values.unsqueeze(0), True
    if values.dim() != 4:
        raise DimensionError(f'spectrogram input must be [1, F, T] or [N, 1, F, T], got {tuple(values.shape)}')
    return values, False
