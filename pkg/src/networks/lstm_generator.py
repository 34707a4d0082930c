"""LSTM generator: one prediction per input window, trained through BPTT.

Gate equations (peephole terms only when ``params.peephole`` is set)::

    f_t = sigmoid(W_f x_t + R_f h_{t-1} + V_f * c_{t-1} + b_f)
    i_t = sigmoid(W_i x_t + R_i h_{t-1} + V_i * c_{t-1} + b_i)
    g_t = tanh(W_c x_t + R_c h_{t-1} + b_c)
    c_t = i_t * g_t + f_t * c_{t-1}
    o_t = sigmoid(W_o x_t + R_o h_{t-1} + V_o * c_t + b_o)
    h_t = o_t * tanh(c_t)

The prediction is ``W_y h_m + b_y`` on the top layer's final state.
"""
import logging
from typing import Tuple

import numpy as np

from models.network_params import (
    GATE_INPUT_FIELDS,
    GATE_RECURRENT_FIELDS,
    ForwardCache,
    GateRecord,
    GeneratorParams,
    LstmLayerParams,
    LstmState,
)
from utils.errors import ShapeMismatch, StaleCache
from utils.numerics import sigmoid, xavier_init

logger = logging.getLogger(__name__)

_GATES = ("i", "f", "c", "o")


def init_generator(
    input_size: int,
    hidden_size: int,
    rng: np.random.Generator,
    num_layers: int = 1,
    peephole: bool = True,
) -> GeneratorParams:
    params = GeneratorParams.zeros(input_size, hidden_size, num_layers, peephole)
    for layer in params.layers:
        for name in GATE_INPUT_FIELDS:
            getattr(layer, name)[...] = xavier_init(hidden_size, layer.input_size, rng)
        for name in GATE_RECURRENT_FIELDS:
            getattr(layer, name)[...] = xavier_init(hidden_size, hidden_size, rng)
        if peephole:
            for name in ("V_i", "V_f", "V_o"):
                getattr(layer, name)[...] = xavier_init(1, hidden_size, rng)[0]
    params.W_y[...] = xavier_init(1, hidden_size, rng)
    logger.debug(f"Initialized generator: {num_layers} layer(s), hidden {hidden_size}, {params.size} parameters")
    return params


def lstm_cell_forward(
    layer: LstmLayerParams,
    x_t: np.ndarray,
    prev: LstmState,
    peephole: bool = True,
) -> Tuple[LstmState, GateRecord]:
    """One timestep. ``x_t`` is (input,) or (batch, input); state arrays match its leading shape."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape[-1] != layer.input_size:
        raise ShapeMismatch(f"Input has {x_t.shape[-1]} features, layer expects {layer.input_size}")
    if prev.h.shape[-1] != layer.hidden_size or prev.c.shape != prev.h.shape:
        raise ShapeMismatch(f"State shapes {prev.h.shape}/{prev.c.shape} do not match hidden size {layer.hidden_size}")

    pre_i = x_t @ layer.W_i.T + prev.h @ layer.R_i.T + layer.b_i
    pre_f = x_t @ layer.W_f.T + prev.h @ layer.R_f.T + layer.b_f
    pre_g = x_t @ layer.W_c.T + prev.h @ layer.R_c.T + layer.b_c
    pre_o = x_t @ layer.W_o.T + prev.h @ layer.R_o.T + layer.b_o
    if peephole:
        pre_i = pre_i + layer.V_i * prev.c
        pre_f = pre_f + layer.V_f * prev.c

    i = sigmoid(pre_i)
    f = sigmoid(pre_f)
    g = np.tanh(pre_g)
    c = i * g + f * prev.c
    if peephole:
        pre_o = pre_o + layer.V_o * c
    o = sigmoid(pre_o)
    h = o * np.tanh(c)

    record = GateRecord(x=x_t, h_prev=prev.h, c_prev=prev.c, i=i, f=f, o=o, g=g, c=c, h=h)
    return LstmState(h=h, c=c), record


def _as_sequence_batch(params: GeneratorParams, windows: np.ndarray) -> np.ndarray:
    seq = np.asarray(windows, dtype=np.float64)
    if seq.ndim == 2:
        if params.input_size != 1:
            raise ShapeMismatch(f"Generator expects {params.input_size} features per step, windows are scalar")
        seq = seq[:, :, None]
    if seq.ndim != 3 or seq.shape[2] != params.input_size:
        raise ShapeMismatch(f"Windows of shape {np.shape(windows)} do not match input size {params.input_size}")
    if seq.shape[1] < 1:
        raise ShapeMismatch("Windows must hold at least one timestep")
    return seq


def generator_forward_batch(params: GeneratorParams, windows: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """Predict for a batch of windows shaped (batch, m) or (batch, m, features)."""
    seq = _as_sequence_batch(params, windows)
    batch, steps, _ = seq.shape
    hidden = params.hidden_size

    inputs = [seq[:, t, :] for t in range(steps)]
    layer_records = []
    for layer in params.layers:
        state = LstmState(h=np.zeros((batch, hidden)), c=np.zeros((batch, hidden)))
        records = []
        outputs = []
        for x_t in inputs:
            state, record = lstm_cell_forward(layer, x_t, state, params.peephole)
            records.append(record)
            outputs.append(state.h)
        layer_records.append(records)
        inputs = outputs

    prediction = inputs[-1] @ params.W_y[0] + params.b_y[0]
    cache = ForwardCache(layers=layer_records, input_size=params.input_size, hidden_size=hidden, window_length=steps)
    return prediction, cache


def generator_forward(params: GeneratorParams, window: np.ndarray) -> Tuple[float, ForwardCache]:
    """Predict the next value for one window shaped (m,) or (m, features)."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim not in (1, 2):
        raise ShapeMismatch(f"A single window must be 1-D or 2-D, got shape {window.shape}")
    prediction, cache = generator_forward_batch(params, window[None, ...])
    return float(prediction[0]), cache


def generator_backward(params: GeneratorParams, cache: ForwardCache, d_prediction) -> GeneratorParams:
    """Gradients of ``sum(d_prediction * prediction)`` with respect to every parameter."""
    if (
        cache.hidden_size != params.hidden_size
        or cache.input_size != params.input_size
        or len(cache.layers) != params.num_layers
    ):
        raise StaleCache(
            f"Cache (layers={len(cache.layers)}, hidden={cache.hidden_size}, input={cache.input_size}) "
            f"does not match params (layers={params.num_layers}, hidden={params.hidden_size}, input={params.input_size})"
        )
    top = cache.layers[-1]
    batch = top[-1].h.shape[0]
    d_pred = np.broadcast_to(np.asarray(d_prediction, dtype=np.float64).reshape(-1), (batch,))

    grads = params.zeros_like()
    grads.W_y[0] = d_pred @ top[-1].h
    grads.b_y[0] = d_pred.sum()

    steps = cache.window_length
    hidden = params.hidden_size
    dh_external = [np.zeros((batch, hidden)) for _ in range(steps)]
    dh_external[-1] = d_pred[:, None] * params.W_y[0][None, :]

    for k in reversed(range(params.num_layers)):
        layer, grad, records = params.layers[k], grads.layers[k], cache.layers[k]
        dh_next = np.zeros((batch, hidden))
        dc_next = np.zeros((batch, hidden))
        dx_seq = [None] * steps
        for t in reversed(range(steps)):
            rec = records[t]
            dh = dh_external[t] + dh_next
            tanh_c = np.tanh(rec.c)
            da_o = dh * tanh_c * rec.o * (1.0 - rec.o)
            dc = dc_next + dh * rec.o * (1.0 - tanh_c ** 2)
            if params.peephole:
                dc = dc + da_o * layer.V_o
            da_i = dc * rec.g * rec.i * (1.0 - rec.i)
            da_f = dc * rec.c_prev * rec.f * (1.0 - rec.f)
            da_g = dc * rec.i * (1.0 - rec.g ** 2)

            for gate, da in zip(_GATES, (da_i, da_f, da_g, da_o)):
                getattr(grad, f"W_{gate}")[...] += da.T @ rec.x
                getattr(grad, f"R_{gate}")[...] += da.T @ rec.h_prev
                getattr(grad, f"b_{gate}")[...] += da.sum(axis=0)
            if params.peephole:
                grad.V_i[...] += (da_i * rec.c_prev).sum(axis=0)
                grad.V_f[...] += (da_f * rec.c_prev).sum(axis=0)
                grad.V_o[...] += (da_o * rec.c).sum(axis=0)

            dx_seq[t] = da_i @ layer.W_i + da_f @ layer.W_f + da_g @ layer.W_c + da_o @ layer.W_o
            dh_next = da_i @ layer.R_i + da_f @ layer.R_f + da_g @ layer.R_c + da_o @ layer.R_o
            dc_next = dc * rec.f
            if params.peephole:
                dc_next = dc_next + da_i * layer.V_i + da_f * layer.V_f
        dh_external = dx_seq

    return grads
