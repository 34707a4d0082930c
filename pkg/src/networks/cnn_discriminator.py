"""1-D CNN discriminator scoring whether a sequence ends in a real value.

Valid cross-correlation layers with ReLU, flattened into ReLU dense layers,
ending in one logit squashed by a sigmoid.
"""
import logging
from typing import List, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from models.network_params import ConvLayerParams, DiscriminatorCache, DiscriminatorParams
from utils.errors import ShapeMismatch, SignalTooShort, StaleCache
from utils.numerics import relu, sigmoid, xavier_init

logger = logging.getLogger(__name__)


def init_discriminator(
    input_length: int,
    channels: List[int],
    kernel_width: int,
    stride: int,
    dense_units: List[int],
    rng: np.random.Generator,
) -> DiscriminatorParams:
    params = DiscriminatorParams.zeros(input_length, channels, kernel_width, stride, dense_units)
    for layer in params.conv_layers:
        out_c, in_c, width = layer.kernels.shape
        layer.kernels[...] = xavier_init(out_c, in_c * width, rng).reshape(out_c, in_c, width)
    for layer in params.dense_layers:
        layer.weights[...] = xavier_init(*layer.weights.shape, rng)
    logger.debug(f"Initialized discriminator: {len(params.conv_layers)} conv, {len(params.dense_layers)} dense, {params.size} parameters")
    return params


def _conv_forward(x: np.ndarray, layer: ConvLayerParams) -> Tuple[np.ndarray, np.ndarray]:
    """x is (batch, in_channels, length); returns (pre-activation, strided windows)."""
    if layer.stride < 1:
        raise ShapeMismatch(f"Stride must be >= 1, got {layer.stride}")
    if x.shape[2] < layer.width:
        raise SignalTooShort(f"Signal of length {x.shape[2]} is shorter than kernel width {layer.width}")
    windows = sliding_window_view(x, layer.width, axis=2)[:, :, ::layer.stride, :]
    out = np.einsum("bclw,ocw->bol", windows, layer.kernels) + layer.bias[None, :, None]
    return out, windows


def _conv_backward(d_out: np.ndarray, windows: np.ndarray, layer: ConvLayerParams, input_shape) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    d_kernels = np.einsum("bol,bclw->ocw", d_out, windows)
    d_bias = d_out.sum(axis=(0, 2))
    d_windows = np.einsum("bol,ocw->bclw", d_out, layer.kernels)
    d_x = np.zeros(input_shape)
    n_out = d_out.shape[2]
    span = layer.stride * (n_out - 1) + 1
    for j in range(layer.width):
        d_x[:, :, j:j + span:layer.stride] += d_windows[:, :, :, j]
    return d_kernels, d_bias, d_x


def conv1d_forward(kernel, bias: float, stride: int, signal) -> np.ndarray:
    """Single-channel valid cross-correlation: out_j = bias + sum_k kernel_k * signal_{j*stride+k}."""
    kernel = np.asarray(kernel, dtype=np.float64).ravel()
    signal = np.asarray(signal, dtype=np.float64).ravel()
    layer = ConvLayerParams(kernels=kernel[None, None, :], bias=np.array([float(bias)]), stride=int(stride))
    out, _ = _conv_forward(signal[None, None, :], layer)
    return out[0, 0]


def discriminator_forward_batch(params: DiscriminatorParams, sequences: np.ndarray) -> Tuple[np.ndarray, DiscriminatorCache]:
    seqs = np.asarray(sequences, dtype=np.float64)
    if seqs.ndim != 2 or seqs.shape[1] != params.input_length:
        raise ShapeMismatch(f"Sequences of shape {seqs.shape} do not match input length {params.input_length}")
    batch = seqs.shape[0]
    cache = DiscriminatorCache(batch_size=batch, input_length=params.input_length)

    x = seqs[:, None, :]
    for layer in params.conv_layers:
        cache.conv_input_shapes.append(x.shape)
        pre, windows = _conv_forward(x, layer)
        cache.conv_windows.append(windows)
        cache.conv_pre.append(pre)
        x = relu(pre)

    flat = x.reshape(batch, -1)
    last = len(params.dense_layers) - 1
    for k, layer in enumerate(params.dense_layers):
        if flat.shape[1] != layer.weights.shape[1]:
            raise ShapeMismatch(f"dense.{k} expects {layer.weights.shape[1]} inputs, got {flat.shape[1]}")
        cache.dense_inputs.append(flat)
        pre = flat @ layer.weights.T + layer.bias
        cache.dense_pre.append(pre)
        flat = pre if k == last else relu(pre)

    cache.logits = flat[:, 0]
    return sigmoid(cache.logits), cache


def discriminator_forward(params: DiscriminatorParams, sequence) -> Tuple[float, DiscriminatorCache]:
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 1:
        raise ShapeMismatch(f"A single sequence must be 1-D, got shape {seq.shape}")
    prob, cache = discriminator_forward_batch(params, seq[None, :])
    return float(prob[0]), cache


def discriminator_backward(params: DiscriminatorParams, cache: DiscriminatorCache, d_logit) -> Tuple[DiscriminatorParams, np.ndarray]:
    """Gradients of ``sum(d_logit * logit)`` for every parameter and for the input sequences."""
    if (
        cache.input_length != params.input_length
        or len(cache.conv_pre) != len(params.conv_layers)
        or len(cache.dense_pre) != len(params.dense_layers)
    ):
        raise StaleCache("Discriminator cache was produced by a differently shaped network")
    for pre, layer in zip(cache.dense_pre, params.dense_layers):
        if pre.shape[1] != layer.weights.shape[0]:
            raise StaleCache("Discriminator cache was produced by a differently shaped network")

    d = np.broadcast_to(np.asarray(d_logit, dtype=np.float64).reshape(-1), (cache.batch_size,))[:, None]
    grads = params.zeros_like()

    last = len(params.dense_layers) - 1
    for k in reversed(range(len(params.dense_layers))):
        layer = params.dense_layers[k]
        d_pre = d if k == last else d * (cache.dense_pre[k] > 0)
        grads.dense_layers[k].weights[...] += d_pre.T @ cache.dense_inputs[k]
        grads.dense_layers[k].bias[...] += d_pre.sum(axis=0)
        d = d_pre @ layer.weights

    if params.conv_layers:
        d = d.reshape(cache.conv_pre[-1].shape)
        for k in reversed(range(len(params.conv_layers))):
            d_pre = d * (cache.conv_pre[k] > 0)
            d_kernels, d_bias, d = _conv_backward(d_pre, cache.conv_windows[k], params.conv_layers[k], cache.conv_input_shapes[k])
            grads.conv_layers[k].kernels[...] += d_kernels
            grads.conv_layers[k].bias[...] += d_bias
        d_input = d[:, 0, :]
    else:
        d_input = d.reshape(cache.batch_size, cache.input_length)
    return grads, d_input
