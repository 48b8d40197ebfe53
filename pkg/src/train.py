import logging
import time
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from tqdm import tqdm

from src.graph import Graph, NodeFeatures, normalize_adjacency, sample_non_edges
from src.model import BlockTarget, GcnModel, PairTarget, embed, init_glorot, loss_and_gradients
from src.optim import AdamState, adam_step
from src.params import TrainConfig
from src.sampler import (
    ImportanceDistribution,
    SubgraphSample,
    build_distribution,
    sample_nodes,
    threshold_subgraph_size,
)

logger = logging.getLogger(__name__)

STREAM_NAMES = ("init", "sampler", "model", "split", "cluster")


@dataclass(eq=False)
class TrainResult:
    model: GcnModel
    embeddings: np.ndarray
    loss_history: List[float]
    n_s_used: Optional[int]
    sample_seconds: float
    train_seconds: float
    iteration_seconds: float


def default_iterations(n: int) -> int:
    return 200 if n < 100000 else 300


def seed_streams(seed: int) -> Dict[str, np.random.Generator]:
    """Independent generators for weight init, subgraph sampling, model noise,
    edge splitting and k-means, all spawned from one run seed."""
    children = np.random.SeedSequence(seed).spawn(len(STREAM_NAMES))
    return {name: np.random.default_rng(child) for name, child in zip(STREAM_NAMES, children)}


def stream_seed(seed: int, name: str) -> int:
    """Integer seed in [0, 2**32) drawn from one named stream, for APIs that take an int."""
    return int(seed_streams(seed)[name].integers(0, 2 ** 32))


def resolve_subgraph_size(n: int, config: TrainConfig, support_size: Optional[int] = None) -> Optional[int]:
    """n_S decoded per iteration: n for the full decoder, None for negative sampling.

    An automatic size (subgraph_size=None) drawn without replacement is capped
    at support_size, the number of nodes with positive probability; an
    explicit size above it is an error raised by `train`.
    """
    if config.strategy == "full":
        return n
    if config.strategy == "negative":
        return None
    if config.subgraph_size is not None:
        size = config.subgraph_size
        if size > n:
            raise ValueError(f"subgraph size {size} exceeds the number of nodes {n}")
        return size
    size = threshold_subgraph_size(n, config.threshold)
    if support_size is not None and not config.replacement and size > support_size:
        logger.warning(
            "automatic subgraph size %d capped at the %d nodes with positive %s importance",
            size, support_size, config.measure,
        )
        size = support_size
    return size


def negative_sampling_pairs(g: Graph, rng: np.random.Generator) -> PairTarget:
    """All m edges labelled 1 plus m uniform non-edges labelled 0 (i.i.d., repeats allowed)."""
    if g.m == 0:
        raise ValueError("negative sampling needs at least one edge")
    negatives = sample_non_edges(g, g.m, rng, distinct=False)
    edges = g.edges
    return PairTarget(
        rows=np.concatenate((edges[:, 0], negatives[:, 0])),
        cols=np.concatenate((edges[:, 1], negatives[:, 1])),
        labels=np.concatenate((np.ones(g.m), np.zeros(g.m))),
    )


def train(
    g: Graph,
    features: NodeFeatures,
    config: TrainConfig,
    distribution: Optional[ImportanceDistribution] = None,
) -> TrainResult:
    """Train a GCN autoencoder, decoding a fresh target every iteration.

    - full: all n^2 pairs.
    - fastgae: pairs within n_S nodes drawn from the importance distribution.
    - negative: all edges plus m random non-edges.
    """
    if features.n != g.n:
        raise ValueError(f"features describe {features.n} nodes, graph has {g.n}")
    streams = seed_streams(config.seed)
    a_norm = normalize_adjacency(g)
    n_s = resolve_subgraph_size(g.n, config)

    sample_seconds = 0.0
    dist = None
    if config.strategy == "fastgae":
        start = time.perf_counter()
        dist = distribution or build_distribution(g, config.measure, config.sharpening_alpha)
        sample_seconds = time.perf_counter() - start
        if dist.n != g.n:
            raise ValueError(f"distribution covers {dist.n} nodes, graph has {g.n}")
        n_s = resolve_subgraph_size(g.n, config, dist.support_size)
        if not config.replacement and n_s > dist.support_size:
            raise ValueError(
                f"subgraph size {n_s} exceeds the {dist.support_size} nodes with positive "
                f"{config.measure} importance"
            )
        logger.info("sampling %d nodes per iteration (%s, alpha=%g)", n_s, config.measure, config.sharpening_alpha)

    init_seed = int(streams["init"].integers(0, 2 ** 63 - 1))
    model = init_glorot(features.dim, config.hidden, config.dim, config.kind, init_seed)
    state = AdamState.zeros(model, config.adam)
    full_target = BlockTarget.from_sample(SubgraphSample.full(g)) if config.strategy == "full" else None

    history: List[float] = []
    iterations = range(config.iterations)
    if config.progress:
        iterations = tqdm(iterations, desc=f"{config.kind}/{config.strategy}", unit="it")
    start = time.perf_counter()
    for it in iterations:
        if config.strategy == "full":
            target = full_target
        elif config.strategy == "fastgae":
            sample = sample_nodes(dist, n_s, config.replacement, streams["sampler"], graph=g)
            target = BlockTarget.from_sample(sample)
        else:
            target = negative_sampling_pairs(g, streams["sampler"])
        loss, grads, _ = loss_and_gradients(
            model, a_norm, features, target, config.loss, rng=streams["model"], dropout=config.dropout
        )
        model, state = adam_step(state, model, grads)
        history.append(loss)
        logger.debug("iteration %d: loss %.6f", it + 1, loss)
    train_seconds = time.perf_counter() - start

    return TrainResult(
        model=model,
        embeddings=embed(model, a_norm, features),
        loss_history=history,
        n_s_used=n_s,
        sample_seconds=sample_seconds,
        train_seconds=train_seconds,
        iteration_seconds=train_seconds / config.iterations if config.iterations else 0.0,
    )
