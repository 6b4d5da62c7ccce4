from .checkpoint import (Checkpoint, load_checkpoint, load_face_decoder, load_gender_classifier, load_speech_encoder,
                         parameter_hash, save_checkpoint)
from .config import TrainConfig, load_config_file, load_default_args, lr_at_epoch
from .trainer import TrainResult, build_loader, epoch_means, steps_to_threshold, train_fd, train_se
