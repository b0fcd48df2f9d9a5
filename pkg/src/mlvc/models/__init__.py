from .attention import LocalAttentionPool, MultiAttentionPool, attention_pool_forward
from .base import VideoModel, predict
from .chaining import Chaining, chaining_forward, matched_mixtures, moe_param_count
from .cnn import CnnParams, TemporalConv, cnn_over_time
from .layers import Linear, Logistic, MoE, moe_forward
from .loss import compute_loss, cross_entropy
from .lstm import LSTMCell, LSTMState, SequenceEncoder, StackedLSTM, encode_sequence, lstm_step
from .multiscale import multiscale_forward
from .registry import ARCHITECTURES, build_model, hyperparameters, resolve_hparams

__all__ = [
    "ARCHITECTURES", "Chaining", "CnnParams", "LSTMCell", "LSTMState", "Linear", "LocalAttentionPool", "Logistic",
    "MoE", "MultiAttentionPool", "SequenceEncoder", "StackedLSTM", "TemporalConv", "VideoModel",
    "attention_pool_forward", "build_model", "chaining_forward", "cnn_over_time", "compute_loss", "cross_entropy",
    "encode_sequence", "hyperparameters", "lstm_step", "matched_mixtures", "moe_forward", "moe_param_count",
    "multiscale_forward", "predict", "resolve_hparams",
]
