import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

COMMENT_PREFIXES = ("#", "%")
# rejection sampling gives up after this many attempts per requested pair
REJECTION_FACTOR = 1000
MAX_NODE_ID = int(np.iinfo(np.int64).max)

NormalizedAdjacency = sp.csr_matrix


class GraphFormatError(ValueError):
    """Malformed line in an edge-list file."""

    def __init__(self, path: str, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph stored as a symmetric CSR adjacency.

    - Each undirected edge is stored in both directions (2m entries).
    - Column indices are strictly increasing within each row, no self-loops.
    - node_ids[i] is the original id of compact node i.
    """

    row_offsets: np.ndarray
    col_indices: np.ndarray
    node_ids: np.ndarray

    def __post_init__(self):
        for arr in (self.row_offsets, self.col_indices, self.node_ids):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.row_offsets) - 1

    @property
    def m(self) -> int:
        return len(self.col_indices) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.col_indices[self.row_offsets[i]:self.row_offsets[i + 1]]

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        data = np.ones(len(self.col_indices), dtype=np.float64)
        return sp.csr_matrix((data, self.col_indices, self.row_offsets), shape=(self.n, self.n))

    @cached_property
    def edges(self) -> np.ndarray:
        """(m, 2) array of undirected edges with i < j, in lexicographic order."""
        rows = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.row_offsets))
        cols = self.col_indices.astype(np.int64)
        upper = rows < cols
        out = np.column_stack((rows[upper], cols[upper]))
        out.setflags(write=False)
        return out

    @cached_property
    def edge_keys(self) -> np.ndarray:
        """Sorted keys i*n + j (i < j) of all edges."""
        e = self.edges
        keys = e[:, 0] * self.n + e[:, 1]
        keys.setflags(write=False)
        return keys

    def contains_keys(self, keys: np.ndarray) -> np.ndarray:
        """Vectorized membership test for canonical pair keys."""
        edge_keys = self.edge_keys
        if len(edge_keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        idx = np.searchsorted(edge_keys, keys)
        idx = np.minimum(idx, len(edge_keys) - 1)
        return edge_keys[idx] == keys

    def has_edge(self, i: int, j: int) -> bool:
        if i == j:
            return False
        lo, hi = min(i, j), max(i, j)
        return bool(self.contains_keys(np.array([lo * self.n + hi], dtype=np.int64))[0])


@dataclass(frozen=True, eq=False)
class NodeFeatures:
    """Node feature matrix X; `matrix is None` stands for X = I_n."""

    n: int
    matrix: Optional[np.ndarray] = None

    @classmethod
    def identity(cls, n: int) -> "NodeFeatures":
        return cls(n=n)

    @classmethod
    def dense(cls, matrix: np.ndarray) -> "NodeFeatures":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError(f"feature matrix must be 2-D, got shape {matrix.shape}")
        return cls(n=matrix.shape[0], matrix=matrix)

    @property
    def is_identity(self) -> bool:
        return self.matrix is None

    @property
    def kind(self) -> str:
        return "identity" if self.is_identity else "dense"

    @property
    def dim(self) -> int:
        return self.n if self.matrix is None else self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class EdgeSplit:
    train_graph: Graph
    val_pos: np.ndarray
    val_neg: np.ndarray
    test_pos: np.ndarray
    test_neg: np.ndarray
    seed: int


def from_edges(n: int, pairs, node_ids: Optional[np.ndarray] = None) -> Graph:
    """Build a Graph on n nodes from (u, v) pairs.

    Directions are ignored; self-loops and duplicates are dropped.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n):
        raise ValueError(f"edge endpoints must lie in [0, {n})")
    u, v = pairs[:, 0], pairs[:, 1]
    keep = u != v
    lo = np.minimum(u, v)[keep]
    hi = np.maximum(u, v)[keep]
    keys = np.unique(lo * n + hi)
    lo, hi = keys // n, keys % n
    rows = np.concatenate((lo, hi))
    cols = np.concatenate((hi, lo))
    order = np.lexsort((cols, rows))
    rows, cols = rows[order], cols[order]
    row_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=row_offsets[1:])
    if node_ids is None:
        node_ids = np.arange(n, dtype=np.int64)
    else:
        node_ids = np.array(node_ids, dtype=np.int64)
        if len(node_ids) != n:
            raise ValueError(f"node_ids has {len(node_ids)} entries for {n} nodes")
    return Graph(row_offsets=row_offsets, col_indices=cols.astype(np.int64), node_ids=node_ids)


def load_edge_list(path: str) -> Graph:
    """Read a whitespace-separated edge list.

    - Lines starting with '#' or '%' and blank lines are skipped.
    - Columns after the first two (weights, timestamps) are ignored.
    - Ids are remapped to 0..n-1 in first-appearance order.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Edge list not found: {path}")
    index: Dict[int, int] = {}
    pairs: List[Tuple[int, int]] = []
    with open(path, "rb") as f:
        for lineno, raw_bytes in enumerate(f, start=1):
            try:
                raw = raw_bytes.decode("utf-8")
            except UnicodeDecodeError as e:
                raise GraphFormatError(path, lineno, f"invalid UTF-8 ({e.reason})") from None
            line = raw.strip()
            if not line or line.startswith(COMMENT_PREFIXES):
                continue
            tokens = line.split()
            if len(tokens) < 2:
                raise GraphFormatError(path, lineno, f"expected two node ids, got {line!r}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise GraphFormatError(path, lineno, f"node ids must be integers, got {line!r}") from None
            if u < 0 or v < 0:
                raise GraphFormatError(path, lineno, f"node ids must be non-negative, got {line!r}")
            if u > MAX_NODE_ID or v > MAX_NODE_ID:
                raise GraphFormatError(path, lineno, f"node ids must be at most {MAX_NODE_ID}, got {line!r}")
            cu = index.setdefault(u, len(index))
            cv = index.setdefault(v, len(index))
            pairs.append((cu, cv))
    if not index:
        raise ValueError(f"No nodes found in {path}")
    node_ids = np.fromiter(index.keys(), dtype=np.int64, count=len(index))
    return from_edges(len(index), pairs, node_ids=node_ids)


def load_features(path: str, n: int) -> NodeFeatures:
    """Read a header-less CSV of n rows of real features."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Feature file not found: {path}")
    try:
        matrix = pd.read_csv(path, header=None, dtype=np.float64).to_numpy()
    except ValueError as e:
        raise ValueError(f"Unreadable feature file {path}: {e}") from e
    if matrix.shape[0] != n:
        raise ValueError(f"Feature file {path} has {matrix.shape[0]} rows, graph has {n} nodes")
    if not np.isfinite(matrix).all():
        raise ValueError(f"Feature file {path} contains non-finite values")
    return NodeFeatures.dense(matrix)


def load_labels(path: str, n: int) -> np.ndarray:
    """Read one integer label per line; line i is the label of compact node i."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Label file not found: {path}")
    try:
        labels = pd.read_csv(path, header=None, dtype=np.int64).iloc[:, 0].to_numpy()
    except ValueError as e:
        raise ValueError(f"Unreadable label file {path}: {e}") from e
    if len(labels) != n:
        raise ValueError(f"Label file {path} has {len(labels)} lines, graph has {n} nodes")
    return labels


def edge_list_node_order(g: Graph) -> np.ndarray:
    """Compact nodes in the order they first appear in `write_edge_list` output."""
    flat = g.edges.reshape(-1)
    _, first = np.unique(flat, return_index=True)
    return flat[np.sort(first)]


def write_edge_list(g: Graph, path: str) -> None:
    """Write edges (i < j, lexicographic) using original node ids."""
    ids = g.node_ids[g.edges] if g.m else np.empty((0, 2), dtype=np.int64)
    pd.DataFrame(ids).to_csv(path, sep=" ", header=False, index=False)


def write_labels(g: Graph, labels: np.ndarray, path: str) -> None:
    """Write labels aligned with the numbering `load_edge_list` gives the edge file.

    Isolated nodes never appear in an edge list, so their labels are omitted.
    """
    order = edge_list_node_order(g)
    pd.Series(np.asarray(labels)[order]).to_csv(path, header=False, index=False)


def degrees(g: Graph) -> np.ndarray:
    return np.diff(g.row_offsets).astype(np.int64)


def normalize_adjacency(g: Graph) -> NormalizedAdjacency:
    """Return D^{-1/2}(A + I)D^{-1/2} in CSR form, O(m + n).

    - Entry (i,j) equals 1/sqrt((d_i+1)(d_j+1)).
    - Isolated nodes keep a unit diagonal.
    """
    n = g.n
    inv_sqrt = 1.0 / np.sqrt(degrees(g).astype(np.float64) + 1.0)
    a_hat = (g.adjacency + sp.identity(n, format="csr", dtype=np.float64)).tocoo()
    data = inv_sqrt[a_hat.row] * inv_sqrt[a_hat.col]
    out = sp.csr_matrix((data, (a_hat.row, a_hat.col)), shape=(n, n))
    out.sort_indices()
    return out


def core_numbers(g: Graph) -> np.ndarray:
    """Core number of every node by bucket peeling, O(n + m).

    Nodes are kept in an array sorted by current degree; removing the node of
    minimum degree decrements its higher-degree neighbours and moves each one
    to the front of its bucket.
    """
    n = g.n
    deg = degrees(g)
    if n == 0:
        return deg
    max_deg = int(deg.max())
    counts = np.bincount(deg, minlength=max_deg + 1)
    bin_start = np.zeros(max_deg + 1, dtype=np.int64)
    bin_start[1:] = np.cumsum(counts)[:-1]
    vert = np.argsort(deg, kind="stable")
    pos = np.empty(n, dtype=np.int64)
    pos[vert] = np.arange(n)

    # scalar access on Python lists is much faster than on numpy arrays
    deg_l = deg.tolist()
    vert_l = vert.tolist()
    pos_l = pos.tolist()
    bin_l = bin_start.tolist()
    offsets = g.row_offsets.tolist()
    cols = g.col_indices.tolist()
    for i in range(n):
        v = vert_l[i]
        dv = deg_l[v]
        for k in range(offsets[v], offsets[v + 1]):
            u = cols[k]
            du = deg_l[u]
            if du > dv:
                pu = pos_l[u]
                pw = bin_l[du]
                w = vert_l[pw]
                if u != w:
                    pos_l[u] = pw
                    vert_l[pu] = w
                    pos_l[w] = pu
                    vert_l[pw] = u
                bin_l[du] += 1
                deg_l[u] = du - 1
    return np.asarray(deg_l, dtype=np.int64)


def sample_non_edges(g: Graph, count: int, rng: np.random.Generator, distinct: bool = True) -> np.ndarray:
    """Draw `count` node pairs (i < j) absent from g, uniformly, by rejection.

    - distinct=True returns pairwise different pairs.
    - Gives up after REJECTION_FACTOR * count candidate draws.
    """
    if count <= 0:
        return np.empty((0, 2), dtype=np.int64)
    n = g.n
    available = n * (n - 1) // 2 - g.m
    if available < (count if distinct else 1):
        raise ValueError(f"Graph too dense: {available} unconnected pairs, {count} requested")
    cap = REJECTION_FACTOR * count
    found: List[int] = []
    seen = set()
    attempts = 0
    while len(found) < count:
        if attempts >= cap:
            raise ValueError(f"Could not find {count} unconnected pairs after {attempts} attempts")
        batch = min(max(2 * (count - len(found)), 64), cap - attempts)
        u = rng.integers(0, n, size=batch)
        v = rng.integers(0, n, size=batch)
        attempts += batch
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        keys = lo * n + hi
        ok = (lo != hi) & ~g.contains_keys(keys)
        for key in keys[ok].tolist():
            if distinct:
                if key in seen:
                    continue
                seen.add(key)
            found.append(key)
            if len(found) == count:
                break
    keys = np.asarray(found, dtype=np.int64)
    return np.column_stack((keys // n, keys % n))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_edges(g: Graph, val_frac: float = 0.05, test_frac: float = 0.10, seed: int = 0) -> EdgeSplit:
    """Hold out validation and test edges plus as many unconnected pairs.

    - Each undirected edge is counted once; both CSR directions go together.
    - Negatives are distinct pairs absent from the original graph.
    - Connectivity of the train graph is not enforced.
    """
    if val_frac < 0.0 or test_frac < 0.0 or not val_frac + test_frac < 1.0:
        raise ValueError(f"need 0 <= val_frac + test_frac < 1, got {val_frac} + {test_frac}")
    rng = np.random.default_rng(seed)
    edges = g.edges
    n_val = _round_half_up(val_frac * g.m)
    n_test = _round_half_up(test_frac * g.m)
    perm = rng.permutation(g.m)
    val_pos = edges[perm[:n_val]]
    test_pos = edges[perm[n_val:n_val + n_test]]
    train = edges[perm[n_val + n_test:]]
    negatives = sample_non_edges(g, n_val + n_test, rng, distinct=True)
    return EdgeSplit(
        train_graph=from_edges(g.n, train, node_ids=g.node_ids),
        val_pos=val_pos,
        val_neg=negatives[:n_val],
        test_pos=test_pos,
        test_neg=negatives[n_val:],
        seed=seed,
    )


def graph_stats(g: Graph) -> Dict[str, object]:
    """Structural summary printed by the `stats` command."""
    deg = degrees(g)
    cores = core_numbers(g)
    n_components, _ = connected_components(g.adjacency, directed=False)
    return {
        "n": g.n,
        "m": g.m,
        "max_core": int(cores.max()) if g.n else 0,
        "isolated": int((deg == 0).sum()),
        "components": int(n_components),
        "degree": {
            "min": int(deg.min()),
            "max": int(deg.max()),
            "mean": float(deg.mean()),
            "median": float(np.median(deg)),
            "std": float(deg.std()),
        },
    }
