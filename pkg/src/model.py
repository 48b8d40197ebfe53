"""Two-layer GCN encoder with an inner-product decoder, AE and VAE variants.

Gradients are derived by hand: decoder -> (reparameterization) -> output
layer(s) -> ReLU -> first layer, each propagation through the normalized
adjacency being a sparse-dense product in O(m h).
"""

import json
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from src.graph import NodeFeatures, NormalizedAdjacency
from src.params import MODEL_KINDS, LossConfig
from src.sampler import SubgraphSample

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
# rows of the decoded block handled at once; bounds memory to DECODE_CHUNK x n_S
DECODE_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class GcnModel:
    kind: str
    weights: Dict[str, np.ndarray]

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r} (expected one of {MODEL_KINDS})")
        expected = {"W0", "W1"} if self.kind == "ae" else {"W0", "W1_mu", "W1_sigma"}
        if set(self.weights) != expected:
            raise ValueError(f"{self.kind} model needs weights {sorted(expected)}, got {sorted(self.weights)}")
        for name, w in self.weights.items():
            if not np.isfinite(w).all():
                raise ValueError(f"weight {name} has non-finite entries")

    @property
    def in_dim(self) -> int:
        return self.weights["W0"].shape[0]

    @property
    def hidden(self) -> int:
        return self.weights["W0"].shape[1]

    @property
    def dim(self) -> int:
        head = self.weights["W1"] if self.kind == "ae" else self.weights["W1_mu"]
        return head.shape[1]


@dataclass(eq=False)
class ForwardCache:
    h1_pre: np.ndarray
    h1: np.ndarray
    ah1: np.ndarray
    z: np.ndarray
    x_mask: Optional[np.ndarray] = None
    h1_mask: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    log_sigma: Optional[np.ndarray] = None
    noise: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class BlockTarget:
    """All pairs of a node set, labels I + A restricted to it (sparse)."""

    nodes: np.ndarray
    labels: sp.csr_matrix

    @classmethod
    def from_sample(cls, sample: SubgraphSample) -> "BlockTarget":
        k = len(sample.support)
        a, b = sample.pos_pairs[:, 0], sample.pos_pairs[:, 1]
        diag = np.arange(k, dtype=np.int64)
        rows = np.concatenate((diag, a, b))
        cols = np.concatenate((diag, b, a))
        labels = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(k, k))
        return cls(nodes=sample.support, labels=labels)

    @property
    def n_pairs(self) -> int:
        return len(self.nodes) ** 2

    @property
    def n_positive(self) -> int:
        return int(self.labels.nnz)

    def touched_nodes(self) -> np.ndarray:
        return self.nodes


@dataclass(frozen=True, eq=False)
class PairTarget:
    """Explicit labelled node pairs (negative-sampling baseline)."""

    rows: np.ndarray
    cols: np.ndarray
    labels: np.ndarray

    @property
    def n_pairs(self) -> int:
        return len(self.rows)

    @property
    def n_positive(self) -> int:
        return int(np.count_nonzero(self.labels))

    def touched_nodes(self) -> np.ndarray:
        return np.unique(np.concatenate((self.rows, self.cols)))


DecodeTarget = Union[BlockTarget, PairTarget]


def init_glorot(f: int, h: int, d: int, kind: str, seed: int) -> GcnModel:
    """Weights uniform on +-sqrt(6 / (fan_in + fan_out))."""
    if min(f, h, d) < 1:
        raise ValueError(f"dimensions must be >= 1, got f={f}, h={h}, d={d}")
    rng = np.random.default_rng(seed)

    def glorot(fan_in: int, fan_out: int) -> np.ndarray:
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    weights = {"W0": glorot(f, h)}
    if kind == "ae":
        weights["W1"] = glorot(h, d)
    else:
        weights["W1_mu"] = glorot(h, d)
        weights["W1_sigma"] = glorot(h, d)
    return GcnModel(kind=kind, weights=weights)


def _dropout_mask(shape, rate: float, rng: np.random.Generator) -> np.ndarray:
    keep = 1.0 - rate
    return (rng.random(shape) < keep) / keep


def encode(
    model: GcnModel,
    a_norm: NormalizedAdjacency,
    features: NodeFeatures,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[np.ndarray] = None,
    dropout: float = 0.0,
) -> ForwardCache:
    """Forward pass over all nodes.

    - AE: Z = A ReLU(A X W0) W1.
    - VAE: mu, log_sigma from two heads sharing W0; Z = mu + exp(log_sigma) * noise.
    - Identity features skip X: the first product is A W0 directly.
    """
    n = a_norm.shape[0]
    w0 = model.weights["W0"]
    if features.n != n:
        raise ValueError(f"features describe {features.n} nodes, adjacency has {n}")
    if features.dim != w0.shape[0]:
        raise ValueError(f"W0 expects {w0.shape[0]} input features, got {features.dim}")
    if dropout > 0.0 and rng is None:
        raise ValueError("dropout needs a random generator")

    x_mask = None
    if features.is_identity:
        if dropout > 0.0:
            # dropping entries of X = I removes rows of W0
            x_mask = _dropout_mask((n, 1), dropout, rng)
            xw = w0 * x_mask
        else:
            xw = w0
    else:
        x = features.matrix
        if dropout > 0.0:
            x_mask = _dropout_mask(x.shape, dropout, rng)
            x = x * x_mask
        xw = x @ w0
    h1_pre = np.asarray(a_norm @ xw)
    h1 = np.maximum(h1_pre, 0.0)
    h1_mask = _dropout_mask(h1.shape, dropout, rng) if dropout > 0.0 else None
    ah1 = np.asarray(a_norm @ (h1 if h1_mask is None else h1 * h1_mask))

    if model.kind == "ae":
        z = ah1 @ model.weights["W1"]
        return ForwardCache(h1_pre=h1_pre, h1=h1, ah1=ah1, z=z, x_mask=x_mask, h1_mask=h1_mask)

    mu = ah1 @ model.weights["W1_mu"]
    log_sigma = ah1 @ model.weights["W1_sigma"]
    if noise is None:
        if rng is None:
            raise ValueError("variational encoding needs a random generator or a fixed noise draw")
        noise = rng.standard_normal(mu.shape)
    elif noise.shape != mu.shape:
        raise ValueError(f"noise must have shape {mu.shape}, got {noise.shape}")
    z = mu + np.exp(log_sigma) * noise
    return ForwardCache(
        h1_pre=h1_pre, h1=h1, ah1=ah1, z=z, x_mask=x_mask, h1_mask=h1_mask,
        mu=mu, log_sigma=log_sigma, noise=noise,
    )


def embed(model: GcnModel, a_norm: NormalizedAdjacency, features: NodeFeatures) -> np.ndarray:
    """Inference embeddings: Z for AE, posterior means for VAE."""
    cache = encode(model, a_norm, features, noise=None if model.kind == "ae" else np.zeros((a_norm.shape[0], model.dim)))
    return cache.z if model.kind == "ae" else cache.mu


def decode_pair(z: np.ndarray, i: int, j: int) -> float:
    return float(expit(z[i] @ z[j]))


def positive_weight(config: LossConfig, n_pairs: int, n_positive: int) -> float:
    """Re-weighting of positive pairs: fixed, or (#pairs - #positives) / #positives."""
    if config.pos_weight is not None:
        return config.pos_weight
    if n_positive == 0:
        raise ValueError("decoded pair set has no positive pair; cannot derive pos_weight")
    if n_positive == n_pairs:
        # nothing to balance against
        return 1.0
    return (n_pairs - n_positive) / n_positive


def _pair_terms(logits: np.ndarray, y: np.ndarray, w: float, clip: float, need_grad: bool):
    prob_raw = expit(logits)
    prob = np.clip(prob_raw, clip, 1.0 - clip)
    loss_sum = float(-(w * y * np.log(prob) + (1.0 - y) * np.log(1.0 - prob)).sum())
    if not need_grad:
        return loss_sum, None
    inside = (prob_raw > clip) & (prob_raw < 1.0 - clip)
    grad = np.where(inside, (1.0 - y) * prob - w * y * (1.0 - prob), 0.0)
    return loss_sum, grad


def _block_loss(z: np.ndarray, target: BlockTarget, config: LossConfig, need_grad: bool):
    zs = z[target.nodes]
    k = len(target.nodes)
    if k == 0:
        raise ValueError("empty pair set")
    n_pairs = target.n_pairs
    w = positive_weight(config, n_pairs, target.n_positive)
    total = 0.0
    dzs = np.zeros_like(zs) if need_grad else None
    for start in range(0, k, DECODE_CHUNK):
        stop = min(k, start + DECODE_CHUNK)
        logits = zs[start:stop] @ zs.T
        y = target.labels[start:stop].toarray()
        loss_sum, grad = _pair_terms(logits, y, w, config.clip_epsilon, need_grad)
        total += loss_sum
        if need_grad:
            grad /= n_pairs
            dzs[start:stop] += grad @ zs
            dzs += grad.T @ zs[start:stop]
    dz = None
    if need_grad:
        dz = np.zeros_like(z)
        dz[target.nodes] = dzs
    return total / n_pairs, dz


def _pairs_loss(z: np.ndarray, target: PairTarget, config: LossConfig, need_grad: bool):
    if target.n_pairs == 0:
        raise ValueError("empty pair set")
    w = positive_weight(config, target.n_pairs, target.n_positive)
    zr, zc = z[target.rows], z[target.cols]
    logits = np.einsum("ij,ij->i", zr, zc)
    loss_sum, grad = _pair_terms(logits, target.labels, w, config.clip_epsilon, need_grad)
    dz = None
    if need_grad:
        grad = grad / target.n_pairs
        dz = np.zeros_like(z)
        np.add.at(dz, target.rows, grad[:, None] * zc)
        np.add.at(dz, target.cols, grad[:, None] * zr)
    return loss_sum / target.n_pairs, dz


def _reconstruction(z: np.ndarray, target: DecodeTarget, config: LossConfig, need_grad: bool):
    if isinstance(target, BlockTarget):
        return _block_loss(z, target, config, need_grad)
    return _pairs_loss(z, target, config, need_grad)


def reconstruction_loss(z: np.ndarray, target: DecodeTarget, config: Optional[LossConfig] = None) -> float:
    """Weighted cross entropy averaged over the decoded pairs, decoder output clipped."""
    loss, _ = _reconstruction(z, target, config or LossConfig(), need_grad=False)
    return loss


def _kl_terms(mu: np.ndarray, log_sigma: np.ndarray, rows: Optional[np.ndarray]):
    if rows is not None:
        mu, log_sigma = mu[rows], log_sigma[rows]
    count = mu.shape[0]
    var = np.exp(2.0 * log_sigma)
    kl = float(-0.5 * (1.0 + 2.0 * log_sigma - mu * mu - var).sum() / count)
    return kl, mu / count, (var - 1.0) / count


def kl_divergence(mu: np.ndarray, log_sigma: np.ndarray) -> float:
    """KL(q || N(0, I)) summed over dimensions, averaged over nodes."""
    if mu.shape != log_sigma.shape:
        raise ValueError(f"mu {mu.shape} and log_sigma {log_sigma.shape} differ in shape")
    return _kl_terms(mu, log_sigma, None)[0]


def _loss_and_grads(
    model: GcnModel,
    cache: ForwardCache,
    a_norm: NormalizedAdjacency,
    features: NodeFeatures,
    target: DecodeTarget,
    config: LossConfig,
) -> Tuple[float, Dict[str, np.ndarray]]:
    if cache.z.shape[0] != a_norm.shape[0]:
        raise ValueError("forward cache does not match the adjacency")
    loss, dz = _reconstruction(cache.z, target, config, need_grad=True)
    w = model.weights
    grads: Dict[str, np.ndarray] = {}
    if model.kind == "ae":
        grads["W1"] = cache.ah1.T @ dz
        d_ah1 = dz @ w["W1"].T
    else:
        rows = None if config.kl_on_all_nodes else target.touched_nodes()
        kl, dmu_kl, dls_kl = _kl_terms(cache.mu, cache.log_sigma, rows)
        loss += kl
        dmu = dz.copy()
        dls = dz * np.exp(cache.log_sigma) * cache.noise
        if rows is None:
            dmu += dmu_kl
            dls += dls_kl
        else:
            dmu[rows] += dmu_kl
            dls[rows] += dls_kl
        grads["W1_mu"] = cache.ah1.T @ dmu
        grads["W1_sigma"] = cache.ah1.T @ dls
        d_ah1 = dmu @ w["W1_mu"].T + dls @ w["W1_sigma"].T
    # the normalized adjacency is symmetric, so it is its own transpose
    d_h1 = np.asarray(a_norm @ d_ah1)
    if cache.h1_mask is not None:
        d_h1 = d_h1 * cache.h1_mask
    d_h1_pre = d_h1 * (cache.h1_pre > 0.0)
    d_xw = np.asarray(a_norm @ d_h1_pre)
    if features.is_identity:
        grads["W0"] = d_xw if cache.x_mask is None else d_xw * cache.x_mask
    else:
        x = features.matrix if cache.x_mask is None else features.matrix * cache.x_mask
        grads["W0"] = x.T @ d_xw
    return loss, grads


def backward(
    model: GcnModel,
    cache: ForwardCache,
    a_norm: NormalizedAdjacency,
    features: NodeFeatures,
    target: DecodeTarget,
    config: Optional[LossConfig] = None,
) -> Dict[str, np.ndarray]:
    """Exact gradients of reconstruction loss (+ KL for VAE) w.r.t. every weight."""
    return _loss_and_grads(model, cache, a_norm, features, target, config or LossConfig())[1]


def loss_and_gradients(
    model: GcnModel,
    a_norm: NormalizedAdjacency,
    features: NodeFeatures,
    target: DecodeTarget,
    config: Optional[LossConfig] = None,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[np.ndarray] = None,
    dropout: float = 0.0,
) -> Tuple[float, Dict[str, np.ndarray], ForwardCache]:
    """One forward + backward pass; returns (loss, gradients, cache)."""
    cache = encode(model, a_norm, features, rng=rng, noise=noise, dropout=dropout)
    loss, grads = _loss_and_grads(model, cache, a_norm, features, target, config or LossConfig())
    return loss, grads, cache


def total_loss(
    model: GcnModel,
    a_norm: NormalizedAdjacency,
    features: NodeFeatures,
    target: DecodeTarget,
    config: Optional[LossConfig] = None,
    noise: Optional[np.ndarray] = None,
) -> float:
    """Loss value only (reconstruction + KL for VAE), no dropout."""
    config = config or LossConfig()
    cache = encode(model, a_norm, features, noise=noise)
    loss = reconstruction_loss(cache.z, target, config)
    if model.kind == "vae":
        rows = None if config.kl_on_all_nodes else target.touched_nodes()
        loss += _kl_terms(cache.mu, cache.log_sigma, rows)[0]
    return loss


def save_checkpoint(model: GcnModel, path: str, config: Optional[dict] = None) -> None:
    """Write weights, model kind, format version and run config to an .npz file."""
    arrays = {f"weight_{name}": w for name, w in model.weights.items()}
    with open(path, "wb") as f:
        np.savez(
            f,
            format_version=np.array(CHECKPOINT_VERSION),
            kind=np.array(model.kind),
            config=np.array(json.dumps(config or {}, sort_keys=True)),
            **arrays,
        )
    logger.debug("checkpoint written to %s", path)


def load_checkpoint(path: str) -> Tuple[GcnModel, dict]:
    with np.load(path, allow_pickle=False) as data:
        version = int(data["format_version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version} in {path}")
        weights = {key[len("weight_"):]: np.array(data[key]) for key in data.files if key.startswith("weight_")}
        model = GcnModel(kind=str(data["kind"]), weights=weights)
        config = json.loads(str(data["config"]))
    return model, config
