from typing import Callable, Sequence

import torch

from portrait.utils.errors import ContractError

EPS = 1e-5
RTOL = 1e-4
ATOL = 1e-6


def check_gradients(fn: Callable[..., torch.Tensor],
                    inputs: Sequence[torch.Tensor],
                    eps: float = EPS,
                    rtol: float = RTOL,
                    atol: float = ATOL,
                    fast_mode: bool = False) -> bool:
    """
    Compare analytic gradients with central finite differences.

    Args:
        fn (Callable): Function of `inputs` returning a tensor.
        inputs (Sequence[torch.Tensor]): float64 tensors; those with requires_grad are checked.
        eps (float): Finite-difference step.
        rtol (float): Relative tolerance.
        atol (float): Absolute tolerance for entries close to zero.
        fast_mode (bool): Check a random projection of the Jacobian instead of every entry.

    Returns:
        bool: True when the gradients agree (a mismatch raises torch's GradcheckError).
    """
    inputs = tuple(inputs)
    for idx, tensor in enumerate(inputs):
        if tensor.is_floating_point() and tensor.dtype != torch.float64:
            raise ContractError(f'gradient checks need float64 inputs, input {idx} is {tensor.dtype}')
    if not any(t.requires_grad for t in inputs):
        raise ContractError('gradient check needs at least one input with requires_grad=True')
    return torch.autograd.gradcheck(fn, inputs, eps=eps, atol=atol, rtol=rtol, fast_mode=fast_mode)
