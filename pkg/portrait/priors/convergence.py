"""
How fast the neutral and gender priors settle as more faces are averaged.
"""
from typing import Dict, Optional, Sequence

import pandas as pd
import torch

from portrait.utils.errors import InputError

DEFAULT_NS = (10, 50, 100, 500, 1000, 5000, 10000)
COLUMNS = ['cohort', 'n1', 'n2', 'l1']


def prior_convergence_from_features(features: Dict[str, torch.Tensor],
                                    ns: Sequence[int] = DEFAULT_NS) -> pd.DataFrame:
    """
    L1(n1, n2) = sum_d |prior_n1[d] - prior_n2[d]| for consecutive sample counts.

    Args:
        features (Dict[str, torch.Tensor]): cohort name -> ordered features [N, D]; the prior of
            size n is the mean of the first n rows.
        ns (Sequence[int]): Increasing sample counts.

    Returns:
        pd.DataFrame: Columns cohort, n1, n2, l1.
    """
    ns = list(ns)
    if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])) or ns[0] < 1:
        raise InputError(f'sample counts must be at least two increasing positive values, got {ns}')
    rows = []
    for cohort, feats in features.items():
        if len(feats) < ns[-1]:
            raise InputError(f'cohort {cohort} has {len(feats)} samples, needs {ns[-1]}')
        feats = feats.detach().to(torch.float64)
        priors = {n: feats[:n].mean(dim=0) for n in ns}
        for n1, n2 in zip(ns, ns[1:]):
            rows.append({'cohort': cohort, 'n1': n1, 'n2': n2,
                         'l1': float((priors[n1] - priors[n2]).abs().sum())})
    return pd.DataFrame(rows, columns=COLUMNS)


def prior_convergence_table(embedder,
                            images: torch.Tensor,
                            ns: Sequence[int] = DEFAULT_NS,
                            labels: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Embed the images and tabulate prior convergence for the neutral cohort and, when gender
    labels are given, the male and female cohorts.
    """
    if len(images) < max(ns):
        raise InputError(f'dataset has {len(images)} images, the largest sample count is {max(ns)}')
    features = embedder.embed_batches(images)
    cohorts = {'neutral': features}
    if labels is not None:
        labels = list(labels)
        for cohort in ('male', 'female'):
            cohorts[cohort] = features[[i for i, label in enumerate(labels) if label == cohort]]
    return prior_convergence_from_features(cohorts, ns)
