from .bank import (PriorBank, PriorFeature, PriorKind, RunningPrior, build_prior_bank, compute_prior, load_prior,
                   save_prior, select_prior)
from .convergence import DEFAULT_NS, prior_convergence_from_features, prior_convergence_table
