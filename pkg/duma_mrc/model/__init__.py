from duma_mrc.model.classifier import OptionScores, accuracy, cross_entropy, score_options
from duma_mrc.model.duma import coattend, duma_forward, split_sequence
from duma_mrc.model.encoder import encode, share_layers
from duma_mrc.model.mc_model import McModel, is_decayed

__all__ = [
    "McModel",
    "OptionScores",
    "accuracy",
    "coattend",
    "cross_entropy",
    "duma_forward",
    "encode",
    "is_decayed",
    "score_options",
    "share_layers",
    "split_sequence",
]
