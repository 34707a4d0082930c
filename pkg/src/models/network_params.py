import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from utils.errors import ShapeMismatch

GATE_INPUT_FIELDS = ("W_i", "W_f", "W_c", "W_o")
GATE_RECURRENT_FIELDS = ("R_i", "R_f", "R_c", "R_o")
PEEPHOLE_FIELDS = ("V_i", "V_f", "V_o")
OFFSET_FIELDS = ("b_i", "b_f", "b_c", "b_o")
LSTM_FIELDS = GATE_INPUT_FIELDS + GATE_RECURRENT_FIELDS + PEEPHOLE_FIELDS + OFFSET_FIELDS


class ParameterSet:
    """Shared flatten / copy / JSON plumbing for learnable parameter containers."""

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        raise NotImplementedError

    def copy(self):
        return copy.deepcopy(self)

    def zeros_like(self):
        clone = self.copy()
        for _, arr in clone.named_arrays():
            arr[...] = 0.0
        return clone

    @property
    def size(self) -> int:
        return sum(arr.size for _, arr in self.named_arrays())

    def to_vector(self) -> np.ndarray:
        return np.concatenate([arr.ravel() for _, arr in self.named_arrays()])

    def from_vector(self, vector: np.ndarray):
        """A copy of this set with every array replaced from the flat ``vector``."""
        vector = np.asarray(vector, dtype=np.float64).ravel()
        if vector.size != self.size:
            raise ShapeMismatch(f"Vector of {vector.size} values for {self.size} parameters")
        clone = self.copy()
        offset = 0
        for _, arr in clone.named_arrays():
            arr[...] = vector[offset:offset + arr.size].reshape(arr.shape)
            offset += arr.size
        return clone

    def arrays_to_dict(self) -> Dict[str, dict]:
        return {
            name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
            for name, arr in self.named_arrays()
        }

    def fill_from_dict(self, fields: Dict[str, dict]) -> None:
        for name, arr in self.named_arrays():
            entry = fields.get(name)
            if entry is None:
                raise ShapeMismatch(f"Serialized parameters lack field '{name}'")
            shape = tuple(entry.get("shape", ()))
            if shape != arr.shape:
                raise ShapeMismatch(f"Field '{name}' has shape {shape}, expected {arr.shape}")
            data = np.asarray(entry.get("data", []), dtype=np.float64)
            if data.size != arr.size:
                raise ShapeMismatch(f"Field '{name}' holds {data.size} values, expected {arr.size}")
            arr[...] = data.reshape(arr.shape)


@dataclass(eq=False)
class LstmLayerParams:
    W_i: np.ndarray
    W_f: np.ndarray
    W_c: np.ndarray
    W_o: np.ndarray
    R_i: np.ndarray
    R_f: np.ndarray
    R_c: np.ndarray
    R_o: np.ndarray
    V_i: np.ndarray
    V_f: np.ndarray
    V_o: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> "LstmLayerParams":
        values = {}
        for name in GATE_INPUT_FIELDS:
            values[name] = np.zeros((hidden_size, input_size))
        for name in GATE_RECURRENT_FIELDS:
            values[name] = np.zeros((hidden_size, hidden_size))
        for name in PEEPHOLE_FIELDS + OFFSET_FIELDS:
            values[name] = np.zeros(hidden_size)
        return cls(**values)

    @property
    def hidden_size(self) -> int:
        return self.W_i.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_i.shape[1]


@dataclass(eq=False)
class GeneratorParams(ParameterSet):
    layers: List[LstmLayerParams]
    W_y: np.ndarray
    b_y: np.ndarray
    peephole: bool = True

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int, num_layers: int = 1, peephole: bool = True) -> "GeneratorParams":
        layers = [LstmLayerParams.zeros(input_size if k == 0 else hidden_size, hidden_size) for k in range(num_layers)]
        return cls(layers=layers, W_y=np.zeros((1, hidden_size)), b_y=np.zeros(1), peephole=peephole)

    @property
    def hidden_size(self) -> int:
        return self.layers[0].hidden_size

    @property
    def input_size(self) -> int:
        return self.layers[0].input_size

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        out = []
        for k, layer in enumerate(self.layers):
            for name in LSTM_FIELDS:
                out.append((f"layers.{k}.{name}", getattr(layer, name)))
        out.append(("W_y", self.W_y))
        out.append(("b_y", self.b_y))
        return out

    def check_shapes(self) -> None:
        hidden = self.hidden_size
        for k, layer in enumerate(self.layers):
            expected_in = self.input_size if k == 0 else hidden
            for name in GATE_INPUT_FIELDS:
                if getattr(layer, name).shape != (hidden, expected_in):
                    raise ShapeMismatch(f"layers.{k}.{name} has shape {getattr(layer, name).shape}, expected {(hidden, expected_in)}")
            for name in GATE_RECURRENT_FIELDS:
                if getattr(layer, name).shape != (hidden, hidden):
                    raise ShapeMismatch(f"layers.{k}.{name} has shape {getattr(layer, name).shape}, expected {(hidden, hidden)}")
            for name in PEEPHOLE_FIELDS + OFFSET_FIELDS:
                if getattr(layer, name).shape != (hidden,):
                    raise ShapeMismatch(f"layers.{k}.{name} has shape {getattr(layer, name).shape}, expected {(hidden,)}")
        if self.W_y.shape != (1, hidden) or self.b_y.shape != (1,):
            raise ShapeMismatch(f"Output head shapes {self.W_y.shape}/{self.b_y.shape} do not match hidden size {hidden}")

    def to_dict(self) -> dict:
        return {
            "input_size": self.input_size,
            "hidden_size": self.hidden_size,
            "num_layers": self.num_layers,
            "peephole": self.peephole,
            "fields": self.arrays_to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorParams":
        try:
            params = cls.zeros(int(data["input_size"]), int(data["hidden_size"]), int(data["num_layers"]), bool(data["peephole"]))
            params.fill_from_dict(data["fields"])
        except (KeyError, TypeError, ValueError) as e:
            raise ShapeMismatch(f"Malformed generator parameters: {e}") from e
        return params


@dataclass(eq=False)
class LstmState:
    h: np.ndarray
    c: np.ndarray


@dataclass(eq=False)
class GateRecord:
    """Everything one LSTM step needs for its backward pass."""
    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c: np.ndarray
    h: np.ndarray


@dataclass(eq=False)
class ForwardCache:
    # layers[k][t] is the record of layer k at timestep t
    layers: List[List[GateRecord]]
    input_size: int
    hidden_size: int
    window_length: int


@dataclass(eq=False)
class ConvLayerParams:
    kernels: np.ndarray  # (out_channels, in_channels, width)
    bias: np.ndarray     # (out_channels,)
    stride: int = 1

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[0]

    @property
    def in_channels(self) -> int:
        return self.kernels.shape[1]

    @property
    def width(self) -> int:
        return self.kernels.shape[2]


@dataclass(eq=False)
class DenseLayerParams:
    weights: np.ndarray  # (out_units, in_units)
    bias: np.ndarray     # (out_units,)


def conv_output_length(length: int, width: int, stride: int) -> int:
    return (length - width) // stride + 1


@dataclass(eq=False)
class DiscriminatorParams(ParameterSet):
    conv_layers: List[ConvLayerParams]
    dense_layers: List[DenseLayerParams]
    input_length: int

    @classmethod
    def zeros(
        cls,
        input_length: int,
        channels: List[int],
        kernel_width: int,
        stride: int,
        dense_units: List[int],
    ) -> "DiscriminatorParams":
        conv_layers = []
        in_channels, length = 1, input_length
        for out_channels in channels:
            if length < kernel_width:
                raise ShapeMismatch(f"Conv layer of width {kernel_width} cannot run on length {length}")
            conv_layers.append(ConvLayerParams(np.zeros((out_channels, in_channels, kernel_width)), np.zeros(out_channels), stride))
            length = conv_output_length(length, kernel_width, stride)
            in_channels = out_channels
        dense_layers = []
        in_units = in_channels * length
        for units in list(dense_units) + [1]:
            dense_layers.append(DenseLayerParams(np.zeros((units, in_units)), np.zeros(units)))
            in_units = units
        return cls(conv_layers=conv_layers, dense_layers=dense_layers, input_length=input_length)

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        out = []
        for k, layer in enumerate(self.conv_layers):
            out.append((f"conv.{k}.kernels", layer.kernels))
            out.append((f"conv.{k}.bias", layer.bias))
        for k, layer in enumerate(self.dense_layers):
            out.append((f"dense.{k}.weights", layer.weights))
            out.append((f"dense.{k}.bias", layer.bias))
        return out

    def check_shapes(self) -> None:
        in_channels, length = 1, self.input_length
        for k, layer in enumerate(self.conv_layers):
            if layer.in_channels != in_channels or layer.bias.shape != (layer.out_channels,):
                raise ShapeMismatch(f"conv.{k} expects {layer.in_channels} input channels, previous layer gives {in_channels}")
            if layer.stride < 1 or length < layer.width:
                raise ShapeMismatch(f"conv.{k} (width {layer.width}, stride {layer.stride}) cannot run on length {length}")
            length = conv_output_length(length, layer.width, layer.stride)
            in_channels = layer.out_channels
        in_units = in_channels * length
        for k, layer in enumerate(self.dense_layers):
            if layer.weights.shape[1] != in_units or layer.bias.shape != (layer.weights.shape[0],):
                raise ShapeMismatch(f"dense.{k} expects {layer.weights.shape[1]} inputs, previous layer gives {in_units}")
            in_units = layer.weights.shape[0]
        if in_units != 1:
            raise ShapeMismatch(f"Discriminator head must output one logit, got {in_units}")

    def to_dict(self) -> dict:
        return {
            "input_length": self.input_length,
            "conv": [{"out_channels": l.out_channels, "in_channels": l.in_channels, "width": l.width, "stride": l.stride} for l in self.conv_layers],
            "dense": [{"out_units": l.weights.shape[0], "in_units": l.weights.shape[1]} for l in self.dense_layers],
            "fields": self.arrays_to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiscriminatorParams":
        try:
            conv_layers = [
                ConvLayerParams(np.zeros((c["out_channels"], c["in_channels"], c["width"])), np.zeros(c["out_channels"]), int(c["stride"]))
                for c in data["conv"]
            ]
            dense_layers = [
                DenseLayerParams(np.zeros((d["out_units"], d["in_units"])), np.zeros(d["out_units"]))
                for d in data["dense"]
            ]
            params = cls(conv_layers=conv_layers, dense_layers=dense_layers, input_length=int(data["input_length"]))
            params.fill_from_dict(data["fields"])
        except (KeyError, TypeError, ValueError) as e:
            raise ShapeMismatch(f"Malformed discriminator parameters: {e}") from e
        params.check_shapes()
        return params


@dataclass(eq=False)
class DiscriminatorCache:
    batch_size: int
    input_length: int
    conv_windows: List[np.ndarray] = field(default_factory=list)    # (B, C_in, L_out, width) per conv layer
    conv_pre: List[np.ndarray] = field(default_factory=list)        # (B, C_out, L_out) before ReLU
    conv_input_shapes: List[Tuple[int, ...]] = field(default_factory=list)
    dense_inputs: List[np.ndarray] = field(default_factory=list)    # (B, in_units) per dense layer
    dense_pre: List[np.ndarray] = field(default_factory=list)       # (B, out_units) before activation
    logits: Optional[np.ndarray] = None
