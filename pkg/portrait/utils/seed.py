import random

import numpy as np
import torch


def set_seed(seed: int, threads: int = None) -> None:
    """
    Seed python, numpy and torch and pin the intra-op thread count.

    Args:
        seed (int): Random seed.
        threads (int, optional): Number of torch threads. Results are only bit-reproducible
            for a fixed thread count.
    """
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    if threads:
        torch.set_num_threads(threads)
