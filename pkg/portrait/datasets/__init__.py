from .dataset import PortraitDataset
from .synthetic import (LATENT_DIM, SyntheticPair, gender_of, generate_dataset, load_dataset, make_pair, render_face,
                        save_dataset, synthesize_voice)
