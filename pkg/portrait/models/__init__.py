from .cbam import CBAM, cbam, channel_attention, spatial_attention
from .embedder import FaceEmbedder
from .face_decoder import FaceDecoder, fd_forward, fd_shape_trace
from .gender import GENDERS, GenderClassifier, classifier_accuracy, gender_classify, train_gender_classifier
from .layers import Conv2d, ConvTranspose2d, Linear, MaxPool2d, he_uniform_
from .network_spec import (PRESETS, LayerSpec, NetworkSpec, fd_network_spec, gender_network_spec, get_preset,
                           parameter_count, se_network_spec, shape_trace)
from .speech_encoder import FusionMode, SpeechEncoder, fuse_prior, se_forward
from .speech_portrait import MODEL_TAGS, ModelVariant, SpeechPortrait, get_model, get_variant
