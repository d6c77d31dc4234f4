"""
Compression networks.

The W branch runs ``N_E`` SRNN encoder/decoder pairs with distinct skip
lengths. Encoder final states are combined into one compressed latent that
every decoder reconstructs from. The D branch stacks ``N_L`` dilated layers
and decodes with a single recurrent layer.

Decoders receive the compressed latent as a constant input at every step,
start from a zero state and emit one value per step through a linear readout.
The emitted sequence reconstructs the input in reverse order.

Both branches extend the compressed latent with two reconstruction features:
relative distance and cosine similarity between the input and a reconstruction.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.errors import SeriesError
from . import cells
from . import numcore as nc
from .cells import CellParams, DilationSchedule, SrnnMask
from .numcore import ParameterSet, Tensor

EPS = 1e-12


# ---------------------------------------------------------------------------
# reconstruction features
# ---------------------------------------------------------------------------


def _pair(x: Sequence[float], x_rec: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(x_rec, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise SeriesError(
            f"Series lengths differ: {a.size} vs {b.size}",
            {"lengths": [int(a.size), int(b.size)]},
        )
    return a, b


def rel_distance(x: Sequence[float], x_rec: Sequence[float]) -> float:
    """||x - x'|| / max(||x||, eps)"""
    a, b = _pair(x, x_rec)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), EPS))


def cos_similarity(x: Sequence[float], x_rec: Sequence[float]) -> float:
    a, b = _pair(x, x_rec)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < EPS or nb < EPS:
        return 0.0
    return float(np.clip(a @ b / (na * nb + EPS), -1.0, 1.0))


def rel_distance_graph(x: np.ndarray, x_rec: Tensor) -> Tensor:
    """Row-wise relative distance, recorded; ``x`` is a constant batch"""
    x_norm = np.maximum(np.linalg.norm(x, axis=1, keepdims=True), EPS)
    diff = nc.sub(nc.constant(x), x_rec)
    dist = nc.sqrt(nc.reduce_sum(nc.square(diff), axis=1, keepdims=True))
    return nc.div(dist, nc.constant(x_norm))


def cos_similarity_graph(x: np.ndarray, x_rec: Tensor) -> Tensor:
    """Row-wise cosine similarity, recorded; zero where either norm < eps"""
    x_norm = np.linalg.norm(x, axis=1, keepdims=True)
    rec_norm = nc.sqrt(nc.reduce_sum(nc.square(x_rec), axis=1, keepdims=True))
    dot = nc.reduce_sum(nc.mul(nc.constant(x), x_rec), axis=1, keepdims=True)
    cos = nc.div(dot, nc.add(nc.mul(rec_norm, nc.constant(x_norm)), EPS))
    valid = ((x_norm >= EPS) & (rec_norm.values >= EPS)).astype(np.float64)
    return nc.mul(nc.clip(cos, -1.0, 1.0), nc.constant(valid))


def _select(columns: List[Tensor], index: np.ndarray) -> Tensor:
    """Pick column ``index[m]`` of row m from side-by-side (M x 1) tensors"""
    stacked = nc.concat(columns)
    onehot = np.zeros(stacked.shape)
    onehot[np.arange(stacked.shape[0]), index] = 1.0
    return nc.reduce_sum(nc.mul(stacked, nc.constant(onehot)), axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# shared pieces
# ---------------------------------------------------------------------------


@dataclass
class Readout:
    weight: Tensor
    bias: Tensor

    def __call__(self, h: Tensor) -> Tensor:
        return nc.add_bias(nc.matmul(h, self.weight), self.bias)


def _make_readout(params: ParameterSet, prefix: str, hidden: int, rng: np.random.Generator) -> Readout:
    return Readout(
        params.uniform(f"{prefix}.W_out", (hidden, 1), hidden, rng),
        params.uniform(f"{prefix}.b_out", (1,), hidden, rng),
    )


def _step_inputs(x: np.ndarray) -> List[Tensor]:
    return [nc.constant(x[:, t : t + 1]) for t in range(x.shape[1])]


def _as_batch(x: Sequence[float]) -> np.ndarray:
    batch = np.asarray(x, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch.reshape(1, -1)
    if batch.ndim != 2 or batch.shape[1] == 0 or batch.shape[0] == 0:
        raise SeriesError("Input series must be non-empty", {"shape": list(batch.shape)})
    return batch


def _emit(readout: Readout, states: List[Tensor]) -> Tensor:
    """Read one value per step and restore the original (forward) order"""
    return nc.reverse_columns(nc.concat([readout(h) for h in states]))


@dataclass
class BranchOutput:
    reconstructions: List[Tensor]
    z_c: Tensor
    z: Tensor
    rel_index: np.ndarray
    cos_index: np.ndarray

    @property
    def width(self) -> int:
        return self.z.shape[1]


# ---------------------------------------------------------------------------
# W branch
# ---------------------------------------------------------------------------


@dataclass
class WBranch:
    params: ParameterSet
    encoders: List[CellParams]
    encoder_masks: List[SrnnMask]
    decoders: List[CellParams]
    decoder_masks: List[SrnnMask]
    readouts: List[Readout]
    combiner_weight: Tensor
    combiner_bias: Tensor
    latent_size: int
    length: int

    @property
    def n_tasks(self) -> int:
        return len(self.encoders)

    def masks(self) -> Dict[str, Dict[str, list]]:
        named = {f"enc{i}": m for i, m in enumerate(self.encoder_masks)}
        named.update({f"dec{i}": m for i, m in enumerate(self.decoder_masks)})
        return {
            name: {"w1": list(m.w1), "w2": list(m.w2), "skip": m.skip}
            for name, m in named.items()
        }

    def load_masks(self, stored: Dict[str, Dict[str, list]]) -> None:
        def rebuild(name: str, mask: SrnnMask) -> SrnnMask:
            entry = stored[name]
            return SrnnMask(
                tuple(int(v) for v in entry["w1"]),
                tuple(int(v) for v in entry["w2"]),
                int(entry["skip"]),
                mask.skip_weight,
                mask.skip_bias,
            )

        self.encoder_masks = [rebuild(f"enc{i}", m) for i, m in enumerate(self.encoder_masks)]
        self.decoder_masks = [rebuild(f"dec{i}", m) for i, m in enumerate(self.decoder_masks)]


def build_w_branch(
    length: int,
    n_tasks: int,
    hidden_size: int,
    latent_size: int,
    rng: np.random.Generator,
    cell_kind: str = "lstm",
    standard_lstm_output: bool = False,
) -> WBranch:
    """Encoder/decoder i uses skip length ((i mod 3) + 1)"""
    params = ParameterSet()
    encoders, enc_masks, decoders, dec_masks, readouts = [], [], [], [], []
    for i in range(n_tasks):
        skip = i % cells.MAX_SKIP + 1
        encoders.append(
            cells.make_cell(params, f"w.enc{i}", cell_kind, 1, hidden_size, rng, standard_lstm_output)
        )
        enc_masks.append(cells.sample_mask(params, f"w.enc{i}", length, skip, 1, hidden_size, rng))
        decoders.append(
            cells.make_cell(
                params, f"w.dec{i}", cell_kind, latent_size, hidden_size, rng, standard_lstm_output
            )
        )
        dec_masks.append(
            cells.sample_mask(params, f"w.dec{i}", length, skip, latent_size, hidden_size, rng)
        )
        readouts.append(_make_readout(params, f"w.dec{i}", hidden_size, rng))

    fan_in = n_tasks * hidden_size
    weight = params.uniform("w.W_w", (fan_in, latent_size), fan_in, rng)
    bias = params.uniform("w.b_w", (latent_size,), fan_in, rng)
    return WBranch(
        params, encoders, enc_masks, decoders, dec_masks, readouts, weight, bias, latent_size, length
    )


def w_forward(branch: WBranch, x: Sequence[float]) -> BranchOutput:
    """Encode with every SRNN, combine, decode with every SRNN, extend the latent"""
    batch = _as_batch(x)
    inputs = _step_inputs(batch)

    finals = [
        cells.srnn_forward(enc, mask, inputs)[-1]
        for enc, mask in zip(branch.encoders, branch.encoder_masks)
    ]
    z_c = nc.add_bias(nc.matmul(nc.concat(finals), branch.combiner_weight), branch.combiner_bias)

    steps = [z_c] * batch.shape[1]
    reconstructions = [
        _emit(readout, cells.srnn_forward(dec, mask, steps))
        for dec, mask, readout in zip(branch.decoders, branch.decoder_masks, branch.readouts)
    ]

    rel = [rel_distance_graph(batch, r) for r in reconstructions]
    cos = [cos_similarity_graph(batch, r) for r in reconstructions]
    rel_values = np.hstack([d.values for d in rel])
    cos_values = np.hstack([c.values for c in cos])
    p = np.argmin(rel_values, axis=1)
    q = np.argmin(1.0 - cos_values, axis=1)

    z = nc.concat([z_c, _select(rel, p), _select(cos, q)])
    return BranchOutput(reconstructions, z_c, z, p, q)


# ---------------------------------------------------------------------------
# D branch
# ---------------------------------------------------------------------------


@dataclass
class DBranch:
    params: ParameterSet
    layers: List[CellParams]
    schedule: DilationSchedule
    decoder: CellParams
    readout: Readout
    combiner_weight: Tensor
    combiner_bias: Tensor
    latent_size: int
    length: int


def build_d_branch(
    length: int,
    n_layers: int,
    hidden_size: int,
    latent_size: int,
    rng: np.random.Generator,
    cell_kind: str = "gru",
    standard_lstm_output: bool = False,
    schedule: Optional[DilationSchedule] = None,
) -> DBranch:
    params = ParameterSet()
    layers = [
        cells.make_cell(
            params,
            f"d.enc{i}",
            cell_kind,
            1 if i == 0 else hidden_size,
            hidden_size,
            rng,
            standard_lstm_output,
        )
        for i in range(n_layers)
    ]
    decoder = cells.make_cell(
        params, "d.dec", cell_kind, latent_size, hidden_size, rng, standard_lstm_output
    )
    readout = _make_readout(params, "d.dec", hidden_size, rng)
    fan_in = n_layers * hidden_size
    weight = params.uniform("d.W_d", (fan_in, latent_size), fan_in, rng)
    bias = params.uniform("d.b_d", (latent_size,), fan_in, rng)
    return DBranch(
        params,
        layers,
        schedule or DilationSchedule.exponential(n_layers),
        decoder,
        readout,
        weight,
        bias,
        latent_size,
        length,
    )


def _plain_forward(cell: CellParams, inputs: Sequence[Tensor]) -> List[Tensor]:
    h = cells.zero_state(inputs[0].shape[0], cell.hidden_size)
    c: Optional[Tensor] = None
    states = []
    for x_t in inputs:
        h, c = cells.rnn_step(cell, h, c, x_t)
        states.append(h)
    return states


def d_forward(branch: DBranch, x: Sequence[float]) -> BranchOutput:
    batch = _as_batch(x)
    encoded = cells.dilated_forward(branch.layers, branch.schedule, _step_inputs(batch))
    z_c = nc.add_bias(
        nc.matmul(nc.concat(encoded.finals), branch.combiner_weight), branch.combiner_bias
    )
    reconstruction = _emit(branch.readout, _plain_forward(branch.decoder, [z_c] * batch.shape[1]))

    rel = rel_distance_graph(batch, reconstruction)
    cos = cos_similarity_graph(batch, reconstruction)
    z = nc.concat([z_c, rel, cos])
    zeros = np.zeros(batch.shape[0], dtype=int)
    return BranchOutput([reconstruction], z_c, z, zeros, zeros)
