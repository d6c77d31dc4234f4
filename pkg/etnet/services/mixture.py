"""
Estimation network: membership estimator, mixture weights, EM-maintained
means/covariances and the sample energy.
"""

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from ..utils.errors import CovarianceError, SeriesError, ShapeError
from ..utils.logging import log_event
from . import numcore as nc
from .numcore import ParameterSet, Tensor

LOG_2PI = float(np.log(2.0 * np.pi))
MEMBERSHIP_HIDDEN = 10


# ---------------------------------------------------------------------------
# membership estimator
# ---------------------------------------------------------------------------


@dataclass
class MembershipNet:
    params: ParameterSet
    input_size: int
    n_components: int

    @property
    def weights(self) -> Tuple[Tensor, Tensor, Tensor, Tensor]:
        p = self.params
        return p["m.W_1"], p["m.b_1"], p["m.W_2"], p["m.b_2"]


def build_membership(
    params: ParameterSet, input_size: int, n_components: int, rng: np.random.Generator
) -> MembershipNet:
    params.uniform("m.W_1", (input_size, MEMBERSHIP_HIDDEN), input_size, rng)
    params.uniform("m.b_1", (MEMBERSHIP_HIDDEN,), input_size, rng)
    params.uniform("m.W_2", (MEMBERSHIP_HIDDEN, n_components), MEMBERSHIP_HIDDEN, rng)
    params.uniform("m.b_2", (n_components,), MEMBERSHIP_HIDDEN, rng)
    return MembershipNet(params, input_size, n_components)


def membership(net: MembershipNet, z: Tensor) -> Tensor:
    """gamma = softmax(W_2 tanh(W_1 z + b_1) + b_2), one row per sample"""
    z = nc.tensor(z)
    if z.values.ndim == 1:
        z = nc.constant(z.values.reshape(1, -1))
    if z.shape[1] != net.input_size:
        raise ShapeError("membership", z.shape, (z.shape[0], net.input_size))
    w1, b1, w2, b2 = net.weights
    hidden = nc.tanh(nc.add_bias(nc.matmul(z, w1), b1))
    return nc.softmax(nc.add_bias(nc.matmul(hidden, w2), b2))


def update_phi(gamma: np.ndarray) -> np.ndarray:
    """Mixture weights as the column mean of the membership batch"""
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.ndim != 2 or gamma.shape[0] == 0:
        raise SeriesError("update_phi needs a non-empty (M x K) batch", {"shape": list(gamma.shape)})
    return gamma.mean(axis=0)


# ---------------------------------------------------------------------------
# mixture state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GmmState:
    phi: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    reg: float = 1e-6

    def __post_init__(self) -> None:
        k = self.phi.shape[0]
        if self.means.shape[0] != k or self.covariances.shape[:2] != (k, self.means.shape[1]):
            raise ShapeError("GmmState", self.phi.shape, self.means.shape, self.covariances.shape)
        if np.any(self.phi < 0) or abs(float(self.phi.sum()) - 1.0) > 1e-9:
            raise ValueError(f"Mixture weights must be a probability vector, got {self.phi}")

    @property
    def n_components(self) -> int:
        return int(self.phi.shape[0])

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    def center(self) -> np.ndarray:
        """phi-weighted mean of the component means"""
        return self.phi @ self.means

    def to_dict(self) -> Dict[str, object]:
        return {
            "phi": self.phi.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
            "reg": self.reg,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "GmmState":
        return cls(
            phi=np.asarray(data["phi"], dtype=np.float64),
            means=np.asarray(data["means"], dtype=np.float64),
            covariances=np.asarray(data["covariances"], dtype=np.float64),
            reg=float(data["reg"]),  # type: ignore[arg-type]
        )


def _cholesky(cov: np.ndarray, reg: float, k: int) -> np.ndarray:
    # stored covariances already carry the reg loading
    if not np.all(np.isfinite(cov)):
        raise CovarianceError(f"Covariance {k} is not finite", {"component": k})
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        raise CovarianceError(
            f"Covariance {k} is not positive definite after loading {reg}",
            {"component": k, "reg": reg},
        ) from None


def _factors(state: GmmState) -> List[np.ndarray]:
    return [_cholesky(c, state.reg, k) for k, c in enumerate(state.covariances)]


def _batch(z: Sequence[float]) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    return z.reshape(1, -1) if z.ndim == 1 else z


def component_log_density(state: GmmState, z: np.ndarray) -> np.ndarray:
    """log N(z_i; mu_k, Sigma_k) as an (M x K) matrix"""
    z = _batch(z)
    if z.shape[1] != state.dim:
        raise ShapeError("log density", z.shape, state.means.shape)
    out = np.empty((z.shape[0], state.n_components))
    for k, chol in enumerate(_factors(state)):
        v = linalg.solve_triangular(chol, (z - state.means[k]).T, lower=True)
        log_det = 2.0 * np.log(np.diag(chol)).sum()
        out[:, k] = -0.5 * (state.dim * LOG_2PI + log_det + (v * v).sum(axis=0))
    return out


def _weighted(state: GmmState, log_density: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(state.phi) + log_density


def energy(state: GmmState, z: Sequence[float]) -> np.ndarray:
    """Per-sample -log sum_k phi_k N(z; mu_k, Sigma_k)"""
    return -logsumexp(_weighted(state, component_log_density(state, z)), axis=1)


def sample_energy(state: GmmState, z: Sequence[float]) -> float:
    return float(energy(state, z)[0])


def log_likelihood(state: GmmState, z: Sequence[float]) -> float:
    return float(-energy(state, z).sum())


def responsibilities(state: GmmState, z: Sequence[float]) -> np.ndarray:
    weighted = _weighted(state, component_log_density(state, z))
    return np.exp(weighted - logsumexp(weighted, axis=1, keepdims=True))


def energy_graph(state: GmmState, z: Tensor, phi: Optional[Tensor] = None) -> Tensor:
    """Recorded energy of each row of ``z`` (M x 1).

    Means and covariances enter as constants; gradients reach ``z`` and, when
    given, the mixture weights ``phi``.
    """
    if z.shape[1] != state.dim:
        raise ShapeError("energy", z.shape, state.means.shape)
    quads, offsets = [], []
    for k, chol in enumerate(_factors(state)):
        inv_t = linalg.solve_triangular(chol, np.eye(state.dim), lower=True).T
        v = nc.matmul(nc.add_bias(z, nc.constant(-state.means[k])), nc.constant(inv_t))
        quads.append(nc.reduce_sum(nc.square(v), axis=1, keepdims=True))
        offsets.append(-0.5 * (state.dim * LOG_2PI + 2.0 * np.log(np.diag(chol)).sum()))
    logits = nc.add_bias(nc.scale(nc.concat(quads), -0.5), nc.constant(np.array(offsets)))
    weights = nc.log(phi) if phi is not None else nc.constant(np.log(state.phi))
    return nc.neg(nc.logsumexp(nc.add_bias(logits, weights), axis=1))


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------


def init_gmm(
    z: np.ndarray, n_components: int, rng: np.random.Generator, reg: float = 1e-6
) -> GmmState:
    """k-means++ seeding of the means, pooled covariance, uniform weights"""
    z = _batch(z)
    if z.shape[0] == 0:
        raise SeriesError("Cannot initialize a mixture from an empty batch")
    centers = [z[rng.integers(z.shape[0])]]
    for _ in range(1, n_components):
        d2 = np.min([((z - c) ** 2).sum(axis=1) for c in centers], axis=0)
        total = d2.sum()
        idx = rng.integers(z.shape[0]) if total <= 0 else rng.choice(z.shape[0], p=d2 / total)
        centers.append(z[idx])

    pooled = np.cov(z, rowvar=False, bias=True).reshape(z.shape[1], z.shape[1])
    pooled = pooled + reg * np.eye(z.shape[1])
    return GmmState(
        phi=np.full(n_components, 1.0 / n_components),
        means=np.array(centers, dtype=np.float64),
        covariances=np.repeat(pooled[None], n_components, axis=0),
        reg=reg,
    )


def em_update(state: GmmState, z: np.ndarray, iterations: int = 1) -> GmmState:
    """Run EM on means and covariances with the mixture weights held fixed"""
    z = _batch(z)
    dim = z.shape[1]
    for it in range(iterations):
        resp = responsibilities(state, z)
        counts = resp.sum(axis=0)
        means = state.means.copy()
        covs = state.covariances.copy()
        for k in range(state.n_components):
            if counts[k] < 1e-12:
                # component holds no mass; keep it where it is
                continue
            means[k] = resp[:, k] @ z / counts[k]
            centered = z - means[k]
            covs[k] = (resp[:, k, None] * centered).T @ centered / counts[k]
            covs[k] = covs[k] + state.reg * np.eye(dim)
            _cholesky(covs[k], state.reg, k)
        state = replace(state, means=means, covariances=covs)
        log_event(
            "em_iteration",
            {"iteration": it, "log_likelihood": log_likelihood(state, z)},
        )
    return state


def phi_gradient(state: GmmState, phi: np.ndarray, z: np.ndarray, weight: float) -> np.ndarray:
    """d/dphi of ``weight * sum_i E(z_i)`` with ``phi`` in place of state.phi"""
    resp = responsibilities(replace(state, phi=phi), z)
    return -weight * resp.sum(axis=0) / phi
