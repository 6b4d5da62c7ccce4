from .compute_metrics import ComputeFeatureMetrics, cos_degrees, feature_metrics, l1_distance, l2_distance, unitize
from .losses import (CosineSimilarityLoss, FaceDecoderLoss, ImageLoss, LossWeights, SpeechEncoderLoss, cosine_loss,
                     fd_total_loss, fd_total_loss_terms, image_loss, se_tri_loss, se_tri_loss_terms)
from .ssim import gaussian_window, ms_ssim, scale_weights


loss_funcs = {
    "image_loss": ImageLoss,
    "cosine_loss": CosineSimilarityLoss,
    "fd_total_loss": FaceDecoderLoss,
    "se_tri_loss": SpeechEncoderLoss,
}

metric_funcs = {
    "feature_metrics": ComputeFeatureMetrics,
}
