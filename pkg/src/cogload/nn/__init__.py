"""NumPy CNN-LSTM: layers, peephole LSTM, loss, Adam, training and gradient checking."""

from cogload.nn.adam import AdamState, adam_step
from cogload.nn.gradcheck import TINY_CONFIG, GradCheckReport, grad_check
from cogload.nn.layers import conv1d_backward, conv1d_forward, relu
from cogload.nn.lstm import lstm_forward, lstm_step
from cogload.nn.model import backward, forward, predict, softmax, softmax_cross_entropy
from cogload.nn.params import (
    ConvLayerParams,
    DenseParams,
    LstmLayerParams,
    ModelConfig,
    ModelParams,
    init_params,
    param_shapes,
    zero_params,
)
from cogload.nn.serialize import load_model, save_model
from cogload.nn.train import TrainConfig, TrainResult, train

__all__ = [
    "AdamState", "ConvLayerParams", "DenseParams", "GradCheckReport", "LstmLayerParams",
    "ModelConfig", "ModelParams", "TINY_CONFIG", "TrainConfig", "TrainResult", "adam_step",
    "backward", "conv1d_backward", "conv1d_forward", "forward", "grad_check", "init_params",
    "load_model", "lstm_forward", "lstm_step", "param_shapes", "predict", "relu", "save_model",
    "softmax", "softmax_cross_entropy", "train", "zero_params",
]
