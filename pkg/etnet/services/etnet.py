"""
ET-Net assembly: two compression branches, each with its own estimation
network, trained independently and combined at scoring time.

Training keeps memory bounded by recording one chunk of samples at a time.
The mixture weights are the mean membership over *all* samples, so their
contribution to the gradient is computed in closed form from a first
unrecorded pass and fed back into each chunk's objective as a linear term.
Summed over chunks the gradient equals the full-batch one. Identical
samples are forwarded once and weighted by their count.

After training each branch refits its mixture on the final embeddings, fits
its membership estimator to the mixture responsibilities, and the D
branch's components are reordered to match W's.
"""

import contextlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from ..models import Explanation, ModelConfig, Reference, ScoredSample, TimeSeries
from ..utils import storage
from ..utils.errors import ModelFormatError, SeriesError, TrainingError
from ..utils.logging import log_event, log_metrics
from ..utils.versioning import FORMAT_VERSION
from . import compnet
from . import numcore as nc
from .compnet import BranchOutput, DBranch, WBranch
from .mixture import (
    GmmState,
    MembershipNet,
    build_membership,
    em_update,
    energy,
    energy_graph,
    init_gmm,
    log_likelihood,
    membership,
    phi_gradient,
    responsibilities,
    update_phi,
)
from .numcore import Tensor

BRANCHES = ("w", "d")
MEMBERSHIP_RATE = 0.01
SeriesBatch = Union[Sequence[TimeSeries], np.ndarray]


@dataclass
class Scaler:
    """Dataset-wide min-max scaling to [0, 1]"""

    minimum: float
    maximum: float

    @classmethod
    def fit(cls, values: np.ndarray) -> "Scaler":
        return cls(float(np.min(values)), float(np.max(values)))

    @property
    def span(self) -> float:
        span = self.maximum - self.minimum
        return span if span > 0 else 1.0

    def transform(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.minimum) / self.span

    def to_dict(self) -> Dict[str, float]:
        return {"min": self.minimum, "max": self.maximum}

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "Scaler":
        return cls(float(data["min"]), float(data["max"]))


@dataclass
class BranchModel:
    name: str
    network: Union[WBranch, DBranch]
    membership: MembershipNet
    gmm: Optional[GmmState] = None
    energy_mean: float = 0.0
    energy_std: float = 1.0
    history: List[Dict[str, float]] = field(default_factory=list)

    @property
    def params(self) -> nc.ParameterSet:
        return self.network.params

    @property
    def n_decoders(self) -> int:
        return self.network.n_tasks if isinstance(self.network, WBranch) else 1

    def forward(self, x: np.ndarray) -> BranchOutput:
        if isinstance(self.network, WBranch):
            return compnet.w_forward(self.network, x)
        return compnet.d_forward(self.network, x)

    def fitted_gmm(self) -> GmmState:
        if self.gmm is None:
            raise ModelFormatError(f"Branch {self.name} has no fitted mixture")
        return self.gmm


@dataclass
class EtNetModel:
    config: ModelConfig
    length: int
    scaler: Scaler
    w: BranchModel
    d: BranchModel
    train_scores: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def branches(self) -> Tuple[BranchModel, BranchModel]:
        return self.w, self.d

    def branch(self, name: str) -> BranchModel:
        return self.w if name == "w" else self.d


@dataclass
class Embeddings:
    """Per-sample latents, memberships and energies for both branches"""

    z_w: np.ndarray
    z_d: np.ndarray
    gamma_w: np.ndarray
    gamma_d: np.ndarray
    energy_w: np.ndarray
    energy_d: np.ndarray

    def __len__(self) -> int:
        return int(self.z_w.shape[0])

    def latent(self, branch: str) -> np.ndarray:
        return self.z_w if branch == "w" else self.z_d


def build_model(config: ModelConfig, length: int, scaler: Scaler) -> EtNetModel:
    """Fresh, untrained model; each branch draws from its own seeded stream"""
    latent = config.latent_size + 2
    w_rng = np.random.default_rng([config.seed, 0])
    w_net = compnet.build_w_branch(
        length,
        config.n_tasks,
        config.hidden_size,
        config.latent_size,
        w_rng,
        cell_kind=config.w_cell,
        standard_lstm_output=config.standard_lstm_output,
    )
    d_rng = np.random.default_rng([config.seed, 1])
    d_net = compnet.build_d_branch(
        length,
        config.n_layers,
        config.hidden_size,
        config.latent_size,
        d_rng,
        cell_kind=config.d_cell,
        standard_lstm_output=config.standard_lstm_output,
    )
    return EtNetModel(
        config=config,
        length=length,
        scaler=scaler,
        w=BranchModel("w", w_net, build_membership(w_net.params, latent, config.n_components, w_rng)),
        d=BranchModel("d", d_net, build_membership(d_net.params, latent, config.n_components, d_rng)),
    )


# ---------------------------------------------------------------------------
# loss and training
# ---------------------------------------------------------------------------


def branch_loss(
    reconstructions: Sequence[Tensor],
    x: np.ndarray,
    sample_energy: Optional[Tensor],
    lambda_energy: float,
    n_samples: Optional[int] = None,
    weights: Optional[np.ndarray] = None,
) -> Tensor:
    """Mean squared-norm reconstruction error over samples and decoders plus
    lambda times the mean energy.

    ``weights`` gives the number of samples each row stands for. ``n_samples``
    overrides the divisor so that losses of disjoint chunks sum to the loss
    of the whole batch.
    """
    x = np.asarray(x, dtype=np.float64).reshape(len(x), -1)
    counts = np.ones((x.shape[0], 1)) if weights is None else np.asarray(weights, dtype=np.float64).reshape(-1, 1)
    total = n_samples or float(counts.sum())
    target = nc.constant(x)
    rows = nc.constant(counts)
    errors = [
        nc.reduce_sum(nc.mul(nc.reduce_sum(nc.square(nc.sub(target, r)), axis=1, keepdims=True), rows))
        for r in reconstructions
    ]
    recon = errors[0]
    for e in errors[1:]:
        recon = nc.add(recon, e)
    loss = nc.scale(recon, 1.0 / (total * len(reconstructions)))
    if sample_energy is not None and lambda_energy > 0:
        loss = nc.add(loss, nc.scale(nc.reduce_sum(nc.mul(sample_energy, rows)), lambda_energy / total))
    return loss


@dataclass
class DistinctRows:
    """Distinct rows of a batch in order of first occurrence, with how many
    samples each stands for"""

    values: np.ndarray
    counts: np.ndarray
    inverse: np.ndarray

    @classmethod
    def of(cls, x: np.ndarray) -> "DistinctRows":
        _, first, inverse, counts = np.unique(
            x, axis=0, return_index=True, return_inverse=True, return_counts=True
        )
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(order.size)
        return cls(x[first[order]], counts[order].astype(np.float64), rank[inverse.reshape(-1)])

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def expand(self, per_row: np.ndarray) -> np.ndarray:
        """Per-sample view of a per-row array"""
        return per_row[self.inverse]


def _chunks(x: np.ndarray, size: int) -> List[np.ndarray]:
    return [x[i : i + size] for i in range(0, x.shape[0], size)]


def _chunk_objective(
    out: BranchOutput,
    gamma: Tensor,
    x: np.ndarray,
    counts: np.ndarray,
    state: GmmState,
    phi_grad: np.ndarray,
    config: ModelConfig,
    n_samples: int,
) -> Tensor:
    lam = config.lambda_energy
    if lam == 0:
        return branch_loss(out.reconstructions, x, None, 0.0, n_samples, counts)
    loss = branch_loss(out.reconstructions, x, energy_graph(state, out.z), lam, n_samples, counts)
    # phi is the batch-mean membership; its gradient enters linearly through gamma
    weights = nc.constant(np.outer(counts, phi_grad))
    return nc.add(loss, nc.scale(nc.reduce_sum(nc.mul(gamma, weights)), 1.0 / n_samples))


def _abort(branch: BranchModel, epoch: int, loss: float) -> None:
    log_event("training_aborted", {"branch": branch.name, "epoch": epoch, "loss": loss})
    raise TrainingError(
        f"Non-finite loss in branch {branch.name} at epoch {epoch}", epoch, branch.name
    )


def _train_branch(branch: BranchModel, x: np.ndarray, config: ModelConfig) -> None:
    tensors = branch.params.tensors()
    optimizer = nc.adam_init(tensors, learning_rate=config.learning_rate)
    rng = np.random.default_rng([config.seed, BRANCHES.index(branch.name), 2])
    rows = DistinctRows.of(x)
    chunks = list(zip(_chunks(rows.values, config.chunk_size), _chunks(rows.counts, config.chunk_size)))
    retain = len(chunks) == 1
    n_samples = x.shape[0]
    best, stale = np.inf, 0
    log_event("training_rows", {"branch": branch.name, "samples": n_samples, "distinct": len(rows)})

    for epoch in range(1, config.epochs + 1):
        passes: List[Tuple[BranchOutput, Tensor]] = []
        recon = 0.0
        for xc, cc in chunks:
            with contextlib.nullcontext() if retain else nc.no_grad():
                out = branch.forward(xc)
                gamma = membership(branch.membership, out.z)
            passes.append((out, gamma))
            recon += sum(float(cc @ ((xc - r.values) ** 2).sum(axis=1)) for r in out.reconstructions)

        z = rows.expand(np.vstack([out.z.values for out, _ in passes]))
        recon_loss = recon / (n_samples * branch.n_decoders)
        if not (np.isfinite(recon_loss) and np.isfinite(z).all()):
            _abort(branch, epoch, recon_loss)
        phi = update_phi(rows.expand(np.vstack([g.values for _, g in passes])))
        if branch.gmm is None:
            branch.gmm = init_gmm(z, config.n_components, rng, config.reg)
        state = replace(branch.gmm, phi=phi)
        energies = energy(state, z)
        loss = recon_loss + config.lambda_energy * float(energies.mean())
        if not np.isfinite(loss):
            _abort(branch, epoch, loss)

        phi_grad = phi_gradient(state, phi, z, config.lambda_energy / n_samples)
        branch.params.zero_grad()
        for i, (xc, cc) in enumerate(chunks):
            if retain:
                out, gamma = passes[i]
            else:
                out = branch.forward(xc)
                gamma = membership(branch.membership, out.z)
            nc.backward(
                _chunk_objective(out, gamma, xc, cc, state, phi_grad, config, n_samples)
            )
        passes.clear()

        grads = [p.grad if p.grad is not None else np.zeros_like(p.values) for p in tensors]
        values, optimizer = nc.adam_step(tensors, grads, optimizer)
        branch.params.assign(values)
        branch.gmm = em_update(state, z, config.em_iterations)

        record = {
            "epoch": epoch,
            "loss": loss,
            "reconstruction": recon_loss,
            "energy": float(energies.mean()),
        }
        branch.history.append(record)
        log_metrics(f"train.{branch.name}", record)

        if loss < best - config.min_improvement:
            best, stale = loss, 0
        else:
            stale += 1
        if stale >= config.patience:
            log_event("early_stop", {"branch": branch.name, "epoch": epoch, "loss": loss})
            break


def _embed_branch(branch: BranchModel, x: np.ndarray, chunk_size: int) -> Tuple[np.ndarray, np.ndarray]:
    zs, gammas = [], []
    with nc.no_grad():
        for xc in _chunks(x, chunk_size):
            out = branch.forward(xc)
            zs.append(out.z.values)
            gammas.append(membership(branch.membership, out.z).values)
    return np.vstack(zs), np.vstack(gammas)


def refit_mixture(
    state: GmmState, z: np.ndarray, config: ModelConfig, rng: np.random.Generator
) -> GmmState:
    """Refit the mixture on final embeddings.

    EM runs from the trained state and from a fresh k-means++ seeding, with
    the weights following the responsibilities; the higher log-likelihood
    wins. A component that lost its samples while the latents moved is
    reseeded this way.
    """
    fitted = []
    for start in (state, init_gmm(z, config.n_components, rng, config.reg)):
        for _ in range(config.refit_iterations):
            start = em_update(start, z)
            start = replace(start, phi=responsibilities(start, z).mean(axis=0))
        fitted.append(start)
    scores = [log_likelihood(s, z) for s in fitted]
    log_event("mixture_refit", {"log_likelihood": scores, "reseeded": bool(scores[1] > scores[0])})
    return fitted[1] if scores[1] > scores[0] else fitted[0]


def fit_membership(
    net: MembershipNet, z: np.ndarray, target: np.ndarray, weights: np.ndarray, steps: int
) -> float:
    """Fit the membership estimator to mixture responsibilities by weighted
    cross-entropy; returns the final loss"""
    params = list(net.weights)
    optimizer = nc.adam_init(params, learning_rate=MEMBERSHIP_RATE)
    inputs = nc.constant(z)
    scaled = nc.constant(target * (weights / weights.sum())[:, None])
    loss = nc.constant(0.0)
    for _ in range(steps):
        for p in params:
            p.zero_grad()
        gamma = nc.clip(membership(net, inputs), 1e-12, 1.0)
        loss = nc.neg(nc.reduce_sum(nc.mul(scaled, nc.log(gamma))))
        nc.backward(loss)
        grads = [p.grad if p.grad is not None else np.zeros_like(p.values) for p in params]
        values, optimizer = nc.adam_step(params, grads, optimizer)
        for p, v in zip(params, values):
            p.values = v
    return loss.item()


def _finalize_branch(branch: BranchModel, x: np.ndarray, config: ModelConfig) -> np.ndarray:
    """Refit the mixture and the membership estimator on final embeddings;
    returns training energies"""
    rows = DistinctRows.of(x)
    z_rows, _ = _embed_branch(branch, rows.values, config.chunk_size)
    z = rows.expand(z_rows)
    rng = np.random.default_rng([config.seed, BRANCHES.index(branch.name), 3])
    state = refit_mixture(branch.fitted_gmm(), z, config, rng)
    if config.membership_steps and config.n_components > 1:
        loss = fit_membership(
            branch.membership, z_rows, responsibilities(state, z_rows), rows.counts, config.membership_steps
        )
        log_event("membership_fit", {"branch": branch.name, "cross_entropy": loss})
    with nc.no_grad():
        gamma = membership(branch.membership, nc.constant(z_rows)).values
    branch.gmm = replace(state, phi=update_phi(rows.expand(gamma)))
    energies = energy(branch.gmm, z)
    branch.energy_mean = float(energies.mean())
    std = float(energies.std())
    branch.energy_std = std if std > 1e-12 else 1.0
    return energies


def align_components(model: EtNetModel, x: np.ndarray) -> np.ndarray:
    """Reorder the D branch's components to agree with W's on the training
    set, so a cluster index means the same in both branches; returns the
    order applied"""
    rows = DistinctRows.of(x)
    size = model.config.chunk_size
    _, g_w = _embed_branch(model.w, rows.values, size)
    _, g_d = _embed_branch(model.d, rows.values, size)
    agreement = (g_w * rows.counts[:, None]).T @ g_d
    _, order = linear_sum_assignment(agreement, maximize=True)
    d = model.d
    for name in ("m.W_2", "m.b_2"):
        d.params[name].values = d.params[name].values[..., order].copy()
    gmm = d.fitted_gmm()
    d.gmm = replace(gmm, phi=gmm.phi[order], means=gmm.means[order], covariances=gmm.covariances[order])
    log_event("components_aligned", {"order": order.tolist()})
    return order


def _as_matrix(data: SeriesBatch) -> np.ndarray:
    if isinstance(data, np.ndarray):
        matrix = np.asarray(data, dtype=np.float64)
        return matrix.reshape(1, -1) if matrix.ndim == 1 else matrix
    if not data:
        raise SeriesError("Empty set of series")
    lengths = {s.length for s in data}
    if len(lengths) != 1:
        raise SeriesError(
            f"Series lengths are not uniform: {sorted(lengths)}", {"lengths": sorted(lengths)}
        )
    return np.vstack([s.array for s in data])


def train(config: ModelConfig, data: SeriesBatch) -> EtNetModel:
    """Train both branches on a uniform-length training set"""
    matrix = _as_matrix(data)
    if matrix.shape[0] == 0:
        raise SeriesError("Empty training set")
    scaler = Scaler.fit(matrix)
    x = scaler.transform(matrix)
    model = build_model(config, matrix.shape[1], scaler)
    log_event(
        "training_start",
        {"samples": x.shape[0], "length": x.shape[1], "config": config.dump()},
    )

    if config.parallel_branches:
        with ThreadPoolExecutor(max_workers=2) as pool:
            futures = [pool.submit(_train_branch, b, x, config) for b in model.branches]
            for f in futures:
                f.result()
    else:
        for branch in model.branches:
            _train_branch(branch, x, config)

    e_w = _finalize_branch(model.w, x, config)
    e_d = _finalize_branch(model.d, x, config)
    if config.n_components > 1:
        align_components(model, x)
    model.train_scores = combine_energies(model, e_w, e_d)
    log_event(
        "training_end",
        {
            b.name: {"epochs": len(b.history), "energy_mean": b.energy_mean, "energy_std": b.energy_std}
            for b in model.branches
        },
    )
    return model


# ---------------------------------------------------------------------------
# inference
# ---------------------------------------------------------------------------


def prepare(model: EtNetModel, data: SeriesBatch) -> np.ndarray:
    """Scale a batch with the stored scaler after checking its length"""
    matrix = _as_matrix(data)
    if matrix.shape[1] != model.length:
        raise SeriesError(
            f"Series length {matrix.shape[1]} does not match model length {model.length}",
            {"length": int(matrix.shape[1]), "expected": model.length},
        )
    return model.scaler.transform(matrix)


def embed_matrix(model: EtNetModel, x: np.ndarray) -> Embeddings:
    """Embed an already-scaled batch"""
    size = model.config.chunk_size
    z_w, g_w = _embed_branch(model.w, x, size)
    z_d, g_d = _embed_branch(model.d, x, size)
    return Embeddings(
        z_w, z_d, g_w, g_d, energy(model.w.fitted_gmm(), z_w), energy(model.d.fitted_gmm(), z_d)
    )


def embed_batch(model: EtNetModel, data: SeriesBatch, workers: int = 1) -> Embeddings:
    x = prepare(model, data)
    if workers <= 1 or x.shape[0] <= model.config.chunk_size:
        return embed_matrix(model, x)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda xc: embed_matrix(model, xc), _chunks(x, model.config.chunk_size)))
    return Embeddings(
        *(np.concatenate([getattr(p, name) for p in parts]) for name in Embeddings.__dataclass_fields__)
    )


def combine_energies(model: EtNetModel, e_w: np.ndarray, e_d: np.ndarray) -> np.ndarray:
    """Anomaly score under the configured mode; the ensemble takes the max"""
    e_w = np.asarray(e_w, dtype=np.float64)
    e_d = np.asarray(e_d, dtype=np.float64)
    if model.config.normalize_ensemble_energy:
        e_w = (e_w - model.w.energy_mean) / model.w.energy_std
        e_d = (e_d - model.d.energy_mean) / model.d.energy_std
    mode = model.config.score_mode
    if mode == "w":
        return e_w
    if mode == "d":
        return e_d
    return np.maximum(e_w, e_d)


def assign_cluster(gamma_w: Sequence[float], gamma_d: Sequence[float]) -> int:
    """Argmax of the sharper membership; ties go to W, then the lowest index"""
    gamma_w = np.asarray(gamma_w, dtype=np.float64)
    gamma_d = np.asarray(gamma_d, dtype=np.float64)
    chosen = gamma_w if gamma_w.max() >= gamma_d.max() else gamma_d
    return int(np.argmax(chosen))


def threshold(model: EtNetModel, percentile: float) -> float:
    """Score at the given percentile of the training scores"""
    if model.train_scores.size == 0:
        raise ModelFormatError("Model carries no training scores")
    return float(np.percentile(model.train_scores, percentile))


def _ids(data: SeriesBatch, n: int) -> List[str]:
    if isinstance(data, np.ndarray):
        return [str(i) for i in range(n)]
    return [s.id for s in data]


def _labels(data: SeriesBatch, n: int) -> List[Optional[str]]:
    if isinstance(data, np.ndarray):
        return [None] * n
    return [s.label for s in data]


def score_batch(
    model: EtNetModel,
    data: SeriesBatch,
    workers: int = 1,
    threshold_percentile: Optional[float] = None,
    with_clusters: bool = False,
) -> List[ScoredSample]:
    emb = embed_batch(model, data, workers)
    scores = combine_energies(model, emb.energy_w, emb.energy_d)
    cut = threshold(model, threshold_percentile) if threshold_percentile is not None else None
    ids, labels = _ids(data, len(emb)), _labels(data, len(emb))
    samples = [
        ScoredSample(
            id=ids[i],
            score=float(scores[i]),
            E_w=float(emb.energy_w[i]),
            E_d=float(emb.energy_d[i]),
            z_w=emb.z_w[i].tolist(),
            z_d=emb.z_d[i].tolist(),
            gamma_w=emb.gamma_w[i].tolist(),
            gamma_d=emb.gamma_d[i].tolist(),
            predicted_label=assign_cluster(emb.gamma_w[i], emb.gamma_d[i]) if with_clusters else None,
            label=labels[i],
            flag=bool(scores[i] > cut) if cut is not None else None,
        )
        for i in range(len(emb))
    ]
    log_event("scored_batch", {"samples": len(samples), "workers": workers})
    return samples


def anomaly_score(model: EtNetModel, x: Union[TimeSeries, Sequence[float]]) -> ScoredSample:
    series = x if isinstance(x, TimeSeries) else TimeSeries(id="0", values=list(x))
    return score_batch(model, [series])[0]


def cluster_assign(model: EtNetModel, x: Union[TimeSeries, Sequence[float]]) -> int:
    sample = anomaly_score(model, x)
    return assign_cluster(sample.gamma_w, sample.gamma_d)


def cluster_batch(model: EtNetModel, data: SeriesBatch, workers: int = 1) -> np.ndarray:
    emb = embed_batch(model, data, workers)
    return np.array([assign_cluster(gw, gd) for gw, gd in zip(emb.gamma_w, emb.gamma_d)])


def line_points(start: np.ndarray, end: np.ndarray, n_points: int) -> np.ndarray:
    """``n_points`` interior points equally spaced from ``start`` to ``end``"""
    fractions = np.arange(1, n_points + 1) / (n_points + 1)
    return start[None, :] + fractions[:, None] * (end - start)[None, :]


def attribute(
    model: EtNetModel,
    x_anomaly: TimeSeries,
    training: Sequence[TimeSeries],
    branch: str = "w",
    n_points: int = 5,
    k_neighbors: int = 1,
) -> Explanation:
    """Training samples nearest to points on the line from the sample to the
    normal center, ordered from the anomaly end to the center end"""
    if not training:
        raise SeriesError("Attribution needs a non-empty training set")
    if n_points < 1 or k_neighbors < 1:
        raise SeriesError(
            "n_points and k_neighbors must be positive",
            {"n_points": n_points, "k_neighbors": k_neighbors},
        )
    target = model.branch(branch)
    z_sample = embed_batch(model, [x_anomaly]).latent(branch)[0]
    z_train = embed_batch(model, training).latent(branch)
    center = target.fitted_gmm().center()

    distances = cdist(line_points(z_sample, center, n_points), z_train)
    k = min(k_neighbors, len(training))
    references: List[Reference] = []
    for j, row in enumerate(distances):
        for idx in np.argsort(row, kind="stable")[:k]:
            references.append(
                Reference(
                    point=j,
                    id=training[idx].id,
                    distance=float(row[idx]),
                    values=list(training[idx].values),
                )
            )
    log_event("attribution", {"id": x_anomaly.id, "branch": branch, "references": len(references)})
    return Explanation(
        id=x_anomaly.id,
        branch=branch,  # type: ignore[arg-type]
        values=list(x_anomaly.values),
        center=center.tolist(),
        references=references,
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def to_document(model: EtNetModel) -> Dict[str, Any]:
    branches: Dict[str, Any] = {}
    for b in model.branches:
        entry: Dict[str, Any] = {
            "params": b.params.to_dict(),
            "gmm": b.fitted_gmm().to_dict(),
            "energy": {"mean": b.energy_mean, "std": b.energy_std},
            "history": b.history,
        }
        if isinstance(b.network, WBranch):
            entry["masks"] = b.network.masks()
        branches[b.name] = entry
    return {
        "format_version": FORMAT_VERSION,
        "config": model.config.dump(),
        "length": model.length,
        "scaler": model.scaler.to_dict(),
        "branches": branches,
        "train_scores": model.train_scores.tolist(),
    }


def from_document(document: Dict[str, Any]) -> EtNetModel:
    try:
        config = ModelConfig.model_validate(document["config"])
        model = build_model(config, int(document["length"]), Scaler.from_dict(document["scaler"]))
        for b in model.branches:
            entry = document["branches"][b.name]
            b.params.load_dict(entry["params"])
            if isinstance(b.network, WBranch):
                b.network.load_masks(entry["masks"])
            b.gmm = GmmState.from_dict(entry["gmm"])
            b.energy_mean = float(entry["energy"]["mean"])
            b.energy_std = float(entry["energy"]["std"])
            b.history = list(entry.get("history", []))
        model.train_scores = np.asarray(document.get("train_scores", []), dtype=np.float64)
    except KeyError as e:
        raise ModelFormatError(f"Model document is missing field {e}", {"field": str(e)}) from None
    except ValidationError as e:
        raise ModelFormatError(
            "Model document has an invalid config",
            {"errors": [err["msg"] for err in e.errors()]},
        ) from None
    return model


def save_model(model: EtNetModel, path: str) -> str:
    """Write the model document; returns its SHA-256 fingerprint"""
    return storage.write_document(to_document(model), path)


def load_model(path: str) -> EtNetModel:
    return from_document(storage.read_document(path))
