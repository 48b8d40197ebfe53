import logging
import math
from typing import Tuple

import numpy as np

from src.graph import Graph, from_edges
from src.params import SbmSpec

logger = logging.getLogger(__name__)


def geometric_positions(total: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices in [0, total) kept by independent Bernoulli(p) trials.

    Gaps between kept indices are geometric, so the cost is O(total * p)
    rather than O(total).
    """
    if total <= 0 or p <= 0.0:
        return np.empty(0, dtype=np.int64)
    if p >= 1.0:
        return np.arange(total, dtype=np.int64)
    expected = total * p
    batch = int(expected + 4.0 * math.sqrt(expected) + 16)
    chunks = []
    current = -1
    while True:
        candidates = current + np.cumsum(rng.geometric(p, size=batch))
        chunks.append(candidates[candidates < total])
        if candidates[-1] >= total:
            break
        current = int(candidates[-1])
    return np.concatenate(chunks).astype(np.int64)


def triangle_pairs(idx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Map linear indices over {(i, j) : i < j} (ordered by j, then i) to (i, j)."""
    idx = np.asarray(idx, dtype=np.int64)
    j = np.floor((1.0 + np.sqrt(1.0 + 8.0 * idx.astype(np.float64))) / 2.0).astype(np.int64)
    # float sqrt can be off by one near perfect squares
    j -= (j * (j - 1) // 2 > idx).astype(np.int64)
    j += ((j + 1) * j // 2 <= idx).astype(np.int64)
    i = idx - j * (j - 1) // 2
    return i, j


def generate_sbm(spec: SbmSpec) -> Tuple[Graph, np.ndarray]:
    """Stochastic block model with equal-size blocks.

    - Same-block pairs are linked with p_in, cross-block pairs with p_out.
    - Each block pair draws from its own seed derived from spec.seed.
    - Labels are block ids; nodes are numbered block by block.
    """
    if spec.p_out > spec.p_in:
        logger.warning("p_out=%g exceeds p_in=%g: communities will be disassortative", spec.p_out, spec.p_in)
    blocks, size = spec.num_communities, spec.community_size
    seeds = np.random.SeedSequence(spec.seed).spawn(blocks * (blocks + 1) // 2)
    chunks = []
    k = 0
    for a in range(blocks):
        for b in range(a, blocks):
            rng = np.random.default_rng(seeds[k])
            k += 1
            if a == b:
                idx = geometric_positions(size * (size - 1) // 2, spec.p_in, rng)
                i, j = triangle_pairs(idx)
                chunks.append(np.column_stack((a * size + i, a * size + j)))
            else:
                idx = geometric_positions(size * size, spec.p_out, rng)
                chunks.append(np.column_stack((a * size + idx // size, b * size + idx % size)))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    labels = np.repeat(np.arange(blocks, dtype=np.int64), size)
    g = from_edges(spec.n, edges)
    logger.info("SBM: %d nodes, %d edges, %d blocks", g.n, g.m, blocks)
    return g, labels
