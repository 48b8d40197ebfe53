import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.graph import Graph, core_numbers, degrees
from src.params import MEASURES, ThresholdParams

# enumeration oracle limits (factorial cost)
EXACT_MAX_NODES = 10
EXACT_MAX_SAMPLE = 4


@dataclass(frozen=True, eq=False)
class ImportanceDistribution:
    """p_i = f(i)^alpha / sum_j f(j)^alpha for the chosen importance measure f."""

    measure: str
    sharpening_alpha: float
    probs: np.ndarray

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs))


@dataclass(frozen=True, eq=False)
class SubgraphSample:
    """Sampled node set V_S and its induced edges.

    - nodes: draw order (repeats possible when sampling with replacement).
    - support: sorted distinct nodes; decoding runs on support x support.
    - pos_pairs: induced edges as (a, b), a < b, positions into `support`.
    """

    nodes: np.ndarray
    support: np.ndarray
    pos_pairs: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    @classmethod
    def full(cls, g: Graph) -> "SubgraphSample":
        nodes = np.arange(g.n, dtype=np.int64)
        return cls(nodes=nodes, support=nodes, pos_pairs=np.array(g.edges, dtype=np.int64))


def importance_scores(g: Graph, measure: str) -> np.ndarray:
    if measure == "uniform":
        return np.ones(g.n, dtype=np.float64)
    if measure == "degree":
        return degrees(g).astype(np.float64)
    if measure == "core":
        return core_numbers(g).astype(np.float64)
    raise ValueError(f"unknown importance measure {measure!r} (expected one of {MEASURES})")


def build_distribution(g: Graph, measure: str, sharpening_alpha: float = 1.0) -> ImportanceDistribution:
    """Sampling distribution over nodes from an importance measure.

    - alpha = 0 or measure 'uniform' gives 1/n everywhere.
    - With alpha > 0, nodes whose importance is 0 get p_i = 0 and are never sampled.
    """
    if sharpening_alpha < 0.0:
        raise ValueError(f"sharpening_alpha must be >= 0, got {sharpening_alpha}")
    if g.n == 0:
        raise ValueError("cannot build a sampling distribution on an empty graph")
    scores = importance_scores(g, measure)
    if measure == "uniform" or sharpening_alpha == 0.0:
        weights = np.ones(g.n, dtype=np.float64)
    else:
        weights = np.power(scores, sharpening_alpha)
    total = math.fsum(weights.tolist())
    if total <= 0.0:
        raise ValueError(f"all {measure} importance scores are zero; use alpha=0 or another measure")
    probs = weights / total
    probs.setflags(write=False)
    return ImportanceDistribution(measure=measure, sharpening_alpha=float(sharpening_alpha), probs=probs)


def threshold_constant(params: Optional[ThresholdParams] = None) -> float:
    """C (cross entropy, capped decoder) or C' (Frobenius loss) of n*_S = C sqrt(n)."""
    params = params or ThresholdParams()
    log_conf = -math.log(params.confidence_alpha / 2.0)
    if params.loss_kind == "frobenius":
        return math.sqrt(log_conf / (2.0 * params.gamma ** 2))
    return math.sqrt(log_conf * math.log(params.epsilon) ** 2 / (2.0 * params.gamma ** 2))


def threshold_subgraph_size(n: int, params: Optional[ThresholdParams] = None) -> int:
    """Subgraph size n*_S = round(C sqrt(n)), capped at n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    size = int(math.floor(threshold_constant(params) * math.sqrt(n) + 0.5))
    return max(1, min(n, size))


def hoeffding_bound(gamma: float, n_s: int, n: int, epsilon: float) -> float:
    """Upper bound on P(|L(i) - E[L(i)]| >= gamma) for node-level subgraph losses."""
    return 2.0 * math.exp(-2.0 * (gamma / math.log(epsilon)) ** 2 * n_s ** 2 / n)


def draw_node_sets(
    dist: ImportanceDistribution,
    n_s: int,
    draws: int,
    replacement: bool,
    rng: np.random.Generator,
) -> np.ndarray:
    """Return a (draws, n_s) array of node sets in draw order.

    Without replacement each node gets an exponential key E_i / p_i and the n_s
    smallest keys are kept in increasing order; this has the same law as
    sequential draws renormalized over the remaining nodes.
    """
    probs = dist.probs
    if n_s < 1:
        raise ValueError(f"subgraph size must be >= 1, got {n_s}")
    if replacement:
        return rng.choice(dist.n, size=(draws, n_s), replace=True, p=probs)
    if n_s > dist.support_size:
        raise ValueError(
            f"cannot draw {n_s} distinct nodes: only {dist.support_size} have positive probability"
        )
    exp = rng.standard_exponential(size=(draws, dist.n))
    with np.errstate(divide="ignore"):
        keys = np.where(probs > 0.0, exp / np.where(probs > 0.0, probs, 1.0), np.inf)
    if n_s < dist.n:
        chosen = np.argpartition(keys, n_s - 1, axis=1)[:, :n_s]
    else:
        chosen = np.broadcast_to(np.arange(dist.n), (draws, dist.n))
    chosen_keys = np.take_along_axis(keys, chosen, axis=1)
    order = np.argsort(chosen_keys, axis=1, kind="stable")
    return np.take_along_axis(chosen, order, axis=1).astype(np.int64)


def induced_pairs(g: Graph, support: np.ndarray) -> np.ndarray:
    """Edges of g inside `support`, as positions (a < b) into support.

    Costs O(sum of degrees over support) plus one O(n) position map.
    """
    local = np.full(g.n, -1, dtype=np.int64)
    local[support] = np.arange(len(support), dtype=np.int64)
    starts = g.row_offsets[support]
    lengths = g.row_offsets[support + 1] - starts
    src = np.repeat(np.arange(len(support), dtype=np.int64), lengths)
    flat = np.repeat(starts - np.cumsum(lengths) + lengths, lengths) + np.arange(lengths.sum())
    dst = local[g.col_indices[flat]]
    keep = dst > src
    return np.column_stack((src[keep], dst[keep]))


def sample_nodes(
    dist: ImportanceDistribution,
    n_s: int,
    replacement: bool,
    rng: np.random.Generator,
    graph: Optional[Graph] = None,
) -> SubgraphSample:
    """Draw one subgraph; induced edges are extracted when `graph` is given."""
    nodes = draw_node_sets(dist, n_s, 1, replacement, rng)[0]
    support = np.unique(nodes)
    if graph is None:
        pos_pairs = np.empty((0, 2), dtype=np.int64)
    else:
        pos_pairs = induced_pairs(graph, support)
    return SubgraphSample(nodes=nodes, support=support, pos_pairs=pos_pairs)


def inclusion_prob_with_replacement(
    dist: ImportanceDistribution, n_s: int, i: int, j: Optional[int] = None
) -> float:
    p = dist.probs
    if j is None or j == i:
        return 1.0 - (1.0 - p[i]) ** n_s
    return 1.0 - ((1.0 - p[i]) ** n_s + (1.0 - p[j]) ** n_s - max(0.0, 1.0 - p[i] - p[j]) ** n_s)


def _inclusion_matrix_with_replacement(dist: ImportanceDistribution, n_s: int) -> np.ndarray:
    p = dist.probs
    miss = (1.0 - p) ** n_s
    both_miss = np.clip(1.0 - p[:, None] - p[None, :], 0.0, None) ** n_s
    out = 1.0 - (miss[:, None] + miss[None, :] - both_miss)
    np.fill_diagonal(out, 1.0 - miss)
    return out


def _inclusion_matrix_exact(dist: ImportanceDistribution, n_s: int) -> np.ndarray:
    n = dist.n
    if n > EXACT_MAX_NODES or n_s > EXACT_MAX_SAMPLE:
        raise ValueError(
            f"exact enumeration limited to n <= {EXACT_MAX_NODES} and n_s <= {EXACT_MAX_SAMPLE}, "
            f"got n={n}, n_s={n_s}"
        )
    if n_s > n:
        raise ValueError(f"cannot draw {n_s} distinct nodes out of {n}")
    p = dist.probs.tolist()
    out = np.zeros((n, n), dtype=np.float64)
    for seq in itertools.permutations(range(n), n_s):
        prob = 1.0
        taken = 0.0
        for u in seq:
            remaining = 1.0 - taken
            if p[u] == 0.0 or remaining <= 0.0:
                prob = 0.0
                break
            prob *= p[u] / remaining
            taken += p[u]
        if prob == 0.0:
            continue
        idx = np.asarray(seq)
        out[np.ix_(idx, idx)] += prob
    return out


def inclusion_matrix(dist: ImportanceDistribution, n_s: int, replacement: bool) -> np.ndarray:
    """P((i,j) in V_S^2) for all pairs; the diagonal holds P(i in V_S)."""
    if replacement:
        return _inclusion_matrix_with_replacement(dist, n_s)
    return _inclusion_matrix_exact(dist, n_s)


def inclusion_prob_exact(dist: ImportanceDistribution, n_s: int, i: int, j: Optional[int] = None) -> float:
    """Sum over ordered node sequences containing i (and j) of their draw probability."""
    mat = _inclusion_matrix_exact(dist, n_s)
    return float(mat[i, i if j is None else j])


def expected_fastgae_loss(
    dist: ImportanceDistribution, n_s: int, losses: np.ndarray, replacement: bool
) -> float:
    """(1/n_s^2) sum_{(i,j)} P((i,j) in V_S^2) L_ij, diagonal pairs included."""
    losses = np.asarray(losses, dtype=np.float64)
    if losses.shape != (dist.n, dist.n):
        raise ValueError(f"loss matrix must be {dist.n}x{dist.n}, got {losses.shape}")
    return float((inclusion_matrix(dist, n_s, replacement) * losses).sum() / n_s ** 2)


def fastgae_loss_of(node_set: np.ndarray, losses: np.ndarray, n_s: int) -> float:
    """Realized subgraph loss (1/n_s^2) sum_{i,j in V_S} L_ij."""
    support = np.unique(node_set)
    return float(losses[np.ix_(support, support)].sum() / n_s ** 2)


def node_level_losses(node_set: np.ndarray, losses: np.ndarray, n_s: int) -> np.ndarray:
    """L(i) = (1/n_s) sum_{j in V_S} L_ij for every node i."""
    support = np.unique(node_set)
    return np.asarray(losses)[:, support].sum(axis=1) / n_s


def expected_node_level_losses(
    dist: ImportanceDistribution, n_s: int, losses: np.ndarray, replacement: bool
) -> np.ndarray:
    node_probs = np.diag(inclusion_matrix(dist, n_s, replacement))
    return np.asarray(losses) @ node_probs / n_s
