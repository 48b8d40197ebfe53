import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning
from sklearn.metrics import adjusted_mutual_info_score

from src.graph import EdgeSplit


@dataclass(frozen=True, eq=False)
class ScoredPairs:
    pos_scores: np.ndarray
    neg_scores: np.ndarray

    def __post_init__(self):
        if len(self.pos_scores) == 0 or len(self.neg_scores) == 0:
            raise ValueError("need at least one positive and one negative score")
        if not (np.isfinite(self.pos_scores).all() and np.isfinite(self.neg_scores).all()):
            raise ValueError("scores must be finite")


@dataclass(eq=False)
class Clustering:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    inertia_history: List[float] = field(default_factory=list)
    iterations: int = 0


def score_pairs(z: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Decoder output sigma(z_i . z_j) for each row (i, j) of pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return expit(np.einsum("ij,ij->i", z[pairs[:, 0]], z[pairs[:, 1]]))


def auc(scored: ScoredPairs) -> float:
    """Area under the ROC curve from mid-ranks (ties count one half)."""
    n_pos, n_neg = len(scored.pos_scores), len(scored.neg_scores)
    ranks = rankdata(np.concatenate((scored.pos_scores, scored.neg_scores)))
    return float((ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def average_precision(scored: ScoredPairs) -> float:
    """Sum over the ranking of recall increments times precision.

    Ties are ordered pessimistically: negatives before positives.
    """
    scores = np.concatenate((scored.pos_scores, scored.neg_scores))
    labels = np.concatenate((np.ones(len(scored.pos_scores)), np.zeros(len(scored.neg_scores))))
    order = np.lexsort((labels, -scores))
    hits = labels[order]
    precision = np.cumsum(hits) / np.arange(1, len(hits) + 1)
    return float((precision * hits).sum() / len(scored.pos_scores))


def link_prediction_report(z: np.ndarray, split: EdgeSplit) -> Dict[str, Optional[float]]:
    report: Dict[str, Optional[float]] = {"val_auc": None, "val_ap": None, "auc": None, "ap": None}
    for prefix, pos, neg in (("val_", split.val_pos, split.val_neg), ("", split.test_pos, split.test_neg)):
        if len(pos) == 0 or len(neg) == 0:
            continue
        scored = ScoredPairs(score_pairs(z, pos), score_pairs(z, neg))
        report[f"{prefix}auc"] = auc(scored)
        report[f"{prefix}ap"] = average_precision(scored)
    return report


def _fit_kmeans(z: np.ndarray, k: int, seed: int, max_iter: int) -> KMeans:
    # tol=0: Lloyd runs until assignments stop changing
    return KMeans(n_clusters=k, init="k-means++", n_init=1, algorithm="lloyd", max_iter=max_iter,
                  tol=0.0, random_state=seed).fit(z)


def kmeans(z: np.ndarray, k: int, seed: int = 0, max_iters: int = 300) -> Clustering:
    """Lloyd iterations from k-means++ seeding, until assignments stop changing.

    inertia_history[t] is the inertia after t + 1 Lloyd steps; fits share the
    seed, so each one replays the same k-means++ start.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    with warnings.catch_warnings():
        # fewer distinct points than k
        warnings.simplefilter("ignore", ConvergenceWarning)
        fitted = _fit_kmeans(z, k, seed, max_iters)
        history = [_fit_kmeans(z, k, seed, t).inertia_ for t in range(1, fitted.n_iter_)]
    history.append(fitted.inertia_)
    return Clustering(
        assignments=fitted.labels_.astype(np.int64),
        centroids=fitted.cluster_centers_,
        inertia=float(fitted.inertia_),
        inertia_history=[float(v) for v in history],
        iterations=int(fitted.n_iter_),
    )


def adjusted_mutual_information(pred, truth) -> float:
    """Chance-corrected mutual information, arithmetic-mean normalization."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"label vectors differ in shape: {pred.shape} vs {truth.shape}")
    if len(pred) == 0:
        raise ValueError("label vectors are empty")
    n_pred = len(np.unique(pred))
    n_pairs = len(np.unique(np.column_stack((pred, truth)), axis=0))
    if n_pred == n_pairs == len(np.unique(truth)):
        # same partition under a renaming of labels
        return 1.0
    return float(adjusted_mutual_info_score(truth, pred, average_method="arithmetic"))


def cluster_embeddings(z: np.ndarray, labels: Optional[np.ndarray], k: Optional[int] = None, seed: int = 0):
    """k-means on embeddings; k defaults to the number of ground-truth communities."""
    if k is None:
        if labels is None:
            raise ValueError("number of clusters needed when no ground-truth labels are given")
        k = len(np.unique(labels))
    clustering = kmeans(z, k, seed=seed)
    ami = adjusted_mutual_information(clustering.assignments, labels) if labels is not None else None
    return clustering, ami
