"""Minimal float64 autograd, recurrent layers and optimizers."""
from .autograd import (
    Node,
    NonFiniteError,
    Parameter,
    add,
    concat,
    constant,
    dropout,
    getitem,
    log_softmax,
    logsumexp,
    lookup,
    lstm_sequence,
    matmul,
    mul,
    relu,
    reshape,
    sigmoid,
    sub,
    tanh,
)
from .autograd import sum as reduce_sum
from .checkpoint import Checkpoint, CheckpointError
from .gradcheck import grad_check, numeric_gradient, relative_error
from .init import glorot, make_rng, zeros
from .layers import BiLSTM, LSTM, Linear, Module
from .optim import AdamConfig, OptimizerState, SGDConfig, make_optimizer, step, zero_grad
