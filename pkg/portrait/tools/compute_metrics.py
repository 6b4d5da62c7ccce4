import math
from typing import Tuple

import torch

from portrait.tools.tool import Tool
from portrait.utils.errors import DimensionError, InputError
from portrait.utils.format import format_checked


def _pair64(a: torch.Tensor, b: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    a = a.detach().to(torch.float64).reshape(-1)
    b = b.detach().to(torch.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionError(f'feature dims differ: {a.numel()} vs {b.numel()}')
    return a, b


def unitize(v: torch.Tensor) -> torch.Tensor:
    norm = v.norm()
    if norm == 0:
        raise InputError('cannot unitize a zero vector')
    return v / norm


def l1_distance(a: torch.Tensor, b: torch.Tensor) -> float:
    a, b = _pair64(a, b)
    return float((a - b).abs().sum())


def l2_distance(a: torch.Tensor, b: torch.Tensor) -> float:
    a, b = _pair64(a, b)
    return float(torch.sqrt(((a - b) ** 2).sum()))


def cos_degrees(a: torch.Tensor, b: torch.Tensor) -> float:
    """
    Angle between two vectors in degrees, arccos of the clamped cosine similarity.
    """
    a, b = _pair64(a, b)
    sa, sb = torch.dot(a, a), torch.dot(b, b)
    if sa == 0 or sb == 0:
        raise InputError('cosine angle is undefined for a zero vector')
    # sqrt(s * s) == s exactly, so identical vectors give cos == 1
    cos = float(torch.dot(a, b) / torch.sqrt(sa * sb))
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def feature_metrics(a: torch.Tensor, b: torch.Tensor, unitized: bool = False) -> Tuple[float, float, float]:
    """
    Args:
        a, b (torch.Tensor): Feature vectors of equal dim.
        unitized (bool): Compare a/|a| with b/|b| instead of the raw features.

    Returns:
        Tuple[float, float, float]: (l1, l2, cos_deg).
    """
    a, b = _pair64(a, b)
    if unitized:
        a, b = unitize(a), unitize(b)
    return l1_distance(a, b), l2_distance(a, b), cos_degrees(a, b)


class ComputeFeatureMetrics(Tool):
    """
    Class to compute L1, L2 and cosine-angle distances between two face features.
    """

    def __init__(self, unitized: bool = False, **kwargs):
        super().__init__(unitized=unitized)

    @format_checked
    def __call__(self, a: torch.Tensor, b: torch.Tensor) -> Tuple[float, float, float]:
        return feature_metrics(a, b, unitized=self.unitized)

    def __str__(self):
        return 'feature_metrics(a: Tensor, b: Tensor) -> (l1: float, l2: float, cos_deg: float)'

    def __repr__(self):
        return ("Computes the L1 distance, the L2 distance and the angle in degrees between two feature vectors. "
                "For example, feature_metrics((1, 0), (0, 1)) returns (2, 1.414, 90).")
