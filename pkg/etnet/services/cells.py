"""
Recurrent primitives: LSTM and GRU steps, the stochastic skip recurrence (SRNN)
and the dilated recurrence.

All states are batch matrices with one row per sample; a single sample is a
1-row batch. Gate weights act on the concatenation ``[h, x]`` and are stored
as ``(hidden + input) x hidden`` matrices.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import ConfigError, MaskError, SeriesError, ShapeError
from . import numcore as nc
from .numcore import ParameterSet, Tensor

CELL_KINDS = ("lstm", "gru")
LSTM_GATES = ("o", "f", "i", "c")
GRU_GATES = ("u", "h", "r")
MAX_SKIP = 3
MASK_CHOICES = ((0, 1), (1, 0), (1, 1))


@dataclass
class CellParams:
    kind: str
    input_size: int
    hidden_size: int
    weights: Dict[str, Tensor]
    standard_lstm_output: bool = False

    def __post_init__(self) -> None:
        if self.kind not in CELL_KINDS:
            raise ConfigError(f"Unknown cell kind {self.kind!r}", {"kind": self.kind})
        rows = self.hidden_size + self.input_size
        for gate in LSTM_GATES if self.kind == "lstm" else GRU_GATES:
            w, b = self.weights[f"W_{gate}"], self.weights[f"b_{gate}"]
            if w.shape != (rows, self.hidden_size) or b.shape != (self.hidden_size,):
                raise ShapeError(f"{self.kind} gate {gate}", w.shape, b.shape)


def make_cell(
    params: ParameterSet,
    prefix: str,
    kind: str,
    input_size: int,
    hidden_size: int,
    rng: np.random.Generator,
    standard_lstm_output: bool = False,
) -> CellParams:
    """Register a cell's weights in ``params`` under ``prefix``"""
    if kind not in CELL_KINDS:
        raise ConfigError(f"Unknown cell kind {kind!r}", {"kind": kind})
    fan_in = hidden_size + input_size
    weights: Dict[str, Tensor] = {}
    for gate in LSTM_GATES if kind == "lstm" else GRU_GATES:
        weights[f"W_{gate}"] = params.uniform(
            f"{prefix}.W_{gate}", (fan_in, hidden_size), fan_in, rng
        )
        weights[f"b_{gate}"] = params.uniform(
            f"{prefix}.b_{gate}", (hidden_size,), fan_in, rng
        )
    return CellParams(kind, input_size, hidden_size, weights, standard_lstm_output)


def zero_state(batch: int, hidden_size: int) -> Tensor:
    return nc.constant(np.zeros((batch, hidden_size)))


def _check_inputs(params: CellParams, h_prev: Tensor, x_t: Tensor) -> None:
    if h_prev.values.ndim != 2 or h_prev.shape[1] != params.hidden_size:
        raise ShapeError(f"{params.kind} state", h_prev.shape, (h_prev.shape[0], params.hidden_size))
    if x_t.values.ndim != 2 or x_t.shape != (h_prev.shape[0], params.input_size):
        raise ShapeError(f"{params.kind} input", x_t.shape, (h_prev.shape[0], params.input_size))


def _gate(params: CellParams, gate: str, hx: Tensor) -> Tensor:
    return nc.add_bias(nc.matmul(hx, params.weights[f"W_{gate}"]), params.weights[f"b_{gate}"])


def lstm_step(
    params: CellParams, h_prev: Tensor, c_prev: Tensor, x_t: Tensor
) -> Tuple[Tensor, Tensor]:
    """One LSTM step; the output is ``o * c`` unless ``standard_lstm_output``"""
    _check_inputs(params, h_prev, x_t)
    if c_prev.shape != h_prev.shape:
        raise ShapeError("lstm memory", c_prev.shape, h_prev.shape)

    hx = nc.concat([h_prev, x_t])
    o = nc.sigmoid(_gate(params, "o", hx))
    f = nc.sigmoid(_gate(params, "f", hx))
    i = nc.sigmoid(_gate(params, "i", hx))
    c_tilde = nc.tanh(_gate(params, "c", hx))
    c = nc.add(nc.hadamard(f, c_prev), nc.hadamard(i, c_tilde))
    h = nc.hadamard(o, nc.tanh(c) if params.standard_lstm_output else c)
    return h, c


def gru_step(params: CellParams, h_prev: Tensor, x_t: Tensor) -> Tensor:
    _check_inputs(params, h_prev, x_t)

    hx = nc.concat([h_prev, x_t])
    u = nc.sigmoid(_gate(params, "u", hx))
    r = nc.sigmoid(_gate(params, "r", hx))
    h_tilde = nc.tanh(_gate(params, "h", nc.concat([nc.hadamard(r, h_prev), x_t])))
    return nc.add(nc.hadamard(nc.sub(1.0, u), h_prev), nc.hadamard(u, h_tilde))


def rnn_step(
    params: CellParams, h_prev: Tensor, c_prev: Optional[Tensor], x_t: Tensor
) -> Tuple[Tensor, Optional[Tensor]]:
    """Dispatch on cell kind; GRU cells carry no memory (``c`` is None)"""
    if params.kind == "lstm":
        if c_prev is None:
            c_prev = zero_state(h_prev.shape[0], params.hidden_size)
        return lstm_step(params, h_prev, c_prev, x_t)
    return gru_step(params, h_prev, x_t), None


# ---------------------------------------------------------------------------
# stochastic skip recurrence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SrnnMask:
    w1: Tuple[int, ...]
    w2: Tuple[int, ...]
    skip: int
    skip_weight: Tensor = field(compare=False)
    skip_bias: Tensor = field(compare=False)

    def __post_init__(self) -> None:
        if len(self.w1) != len(self.w2):
            raise MaskError("Mask weight sequences differ in length")
        if not 1 <= self.skip <= MAX_SKIP:
            raise MaskError(
                f"Skip length {self.skip} outside [1, {MAX_SKIP}]", {"skip": self.skip}
            )
        for t, (a, b) in enumerate(zip(self.w1, self.w2)):
            if a not in (0, 1) or b not in (0, 1) or a + b == 0:
                raise MaskError(
                    f"Mask weights ({a}, {b}) at t={t} violate w1 + w2 != 0",
                    {"t": t, "w1": a, "w2": b},
                )

    @property
    def length(self) -> int:
        return len(self.w1)

    def at(self, t: int) -> Tuple[int, int]:
        if not 0 <= t < self.length:
            raise MaskError(f"Mask undefined at t={t}", {"t": t, "length": self.length})
        return self.w1[t], self.w2[t]


def sample_mask(
    params: ParameterSet,
    prefix: str,
    length: int,
    skip: int,
    input_size: int,
    hidden_size: int,
    rng: np.random.Generator,
) -> SrnnMask:
    """Draw (w1, w2) per step uniformly over the non-zero pairs"""
    picks = rng.integers(0, len(MASK_CHOICES), size=length)
    fan_in = hidden_size + input_size
    return SrnnMask(
        w1=tuple(MASK_CHOICES[p][0] for p in picks),
        w2=tuple(MASK_CHOICES[p][1] for p in picks),
        skip=skip,
        skip_weight=params.uniform(f"{prefix}.W_s", (fan_in, hidden_size), fan_in, rng),
        skip_bias=params.uniform(f"{prefix}.b_s", (hidden_size,), fan_in, rng),
    )


def skip_path(mask: SrnnMask, h_skip: Tensor, x_t: Tensor) -> Tensor:
    """The affine map f' applied to [h(t - s), x(t)]"""
    return nc.add_bias(nc.matmul(nc.concat([h_skip, x_t]), mask.skip_weight), mask.skip_bias)


def srnn_step(
    cell: CellParams,
    mask: SrnnMask,
    h_prev: Tensor,
    h_skip: Tensor,
    x_t: Tensor,
    t: int,
    c_prev: Optional[Tensor] = None,
) -> Tuple[Tensor, Optional[Tensor]]:
    """Mix the recurrent and skip paths with the step's mask weights.

    Returns ``(h_t, c_t)``; ``c_t`` is the LSTM memory (None for GRU), which
    always advances through the recurrent path.
    """
    w1, w2 = mask.at(t)
    h_rnn, c_t = rnn_step(cell, h_prev, c_prev, x_t)
    if w2 == 0:
        return h_rnn, c_t

    h_lin = skip_path(mask, h_skip, x_t)
    if w1 == 0:
        return h_lin, c_t
    return nc.scale(nc.add(h_rnn, h_lin), 1.0 / (w1 + w2)), c_t


def srnn_forward(
    cell: CellParams, mask: SrnnMask, inputs: Sequence[Tensor]
) -> List[Tensor]:
    """Run an SRNN over per-step inputs from a zero state; returns every h(t)"""
    if not inputs:
        raise SeriesError("Cannot run a recurrence over an empty sequence")
    batch = inputs[0].shape[0]
    zero = zero_state(batch, cell.hidden_size)
    states: List[Tensor] = []
    c: Optional[Tensor] = None
    for t, x_t in enumerate(inputs):
        h_prev = states[t - 1] if t >= 1 else zero
        h_skip = states[t - mask.skip] if t >= mask.skip else zero
        h, c = srnn_step(cell, mask, h_prev, h_skip, x_t, t, c)
        states.append(h)
    return states


# ---------------------------------------------------------------------------
# dilated recurrence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DilationSchedule:
    dilations: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.dilations or any(d < 1 for d in self.dilations):
            raise ConfigError(
                "Dilations must be integers >= 1", {"dilations": list(self.dilations)}
            )

    @classmethod
    def exponential(cls, n_layers: int, base: int = 3) -> "DilationSchedule":
        """d^i = base^i for layers i = 1..n_layers"""
        return cls(tuple(base**i for i in range(1, n_layers + 1)))

    def __len__(self) -> int:
        return len(self.dilations)


@dataclass
class DilatedOutput:
    states: List[List[Tensor]]

    @property
    def finals(self) -> List[Tensor]:
        return [layer[-1] for layer in self.states]


def dilated_forward(
    layers: Sequence[CellParams], schedule: DilationSchedule, inputs: Sequence[Tensor]
) -> DilatedOutput:
    """h^i(t) = f(h^{i-1}(t), h^i(t - d^i)) with h^0(t) = x(t)"""
    if not inputs:
        raise SeriesError("Cannot run a recurrence over an empty sequence")
    if len(layers) != len(schedule):
        raise ConfigError(
            f"{len(layers)} layers but {len(schedule)} dilations",
            {"layers": len(layers), "dilations": list(schedule.dilations)},
        )

    batch = inputs[0].shape[0]
    below: Sequence[Tensor] = inputs
    states: List[List[Tensor]] = []
    for cell, d in zip(layers, schedule.dilations):
        zero = zero_state(batch, cell.hidden_size)
        hs: List[Tensor] = []
        cs: List[Optional[Tensor]] = []
        for t, x_t in enumerate(below):
            h_prev = hs[t - d] if t >= d else zero
            c_prev = cs[t - d] if t >= d else None
            h, c = rnn_step(cell, h_prev, c_prev, x_t)
            hs.append(h)
            cs.append(c)
        states.append(hs)
        below = hs
    return DilatedOutput(states)
