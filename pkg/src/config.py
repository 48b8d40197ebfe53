"""RunConfig: every CLI flag of a training run, with defaults resolved.

The resolved config is written as config.yaml next to the run outputs and can
be fed back with `train --config`.
"""

from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Union

import yaml

from src.params import AdamParams, LossConfig, ThresholdParams, TrainConfig
from src.train import default_iterations

MODEL_CHOICES = {"gae": "ae", "vgae": "vae"}
SAMPLER_CHOICES = ("none", "uniform", "degree", "core", "negative")
TASK_CHOICES = ("lp", "cluster", "both")


@dataclass
class RunConfig:
    input: str
    features: Optional[str] = None
    labels: Optional[str] = None
    model: str = "gae"
    sampler: str = "degree"
    alpha: float = 1.0
    subgraph_size: Union[str, int] = "auto"
    replacement: bool = False
    dim: int = 16
    hidden: int = 32
    lr: float = 0.01
    iterations: Optional[int] = None
    dropout: float = 0.0
    kl_all_nodes: bool = True
    val_frac: float = 0.05
    test_frac: float = 0.10
    gamma: float = 1.0
    confidence: float = 0.1
    epsilon: float = 0.001
    seed: int = 0
    task: str = "lp"
    clusters: Optional[int] = None
    out_dir: str = "output"

    def __post_init__(self):
        if self.model not in MODEL_CHOICES:
            raise ValueError(f"unknown model {self.model!r} (expected one of {sorted(MODEL_CHOICES)})")
        if self.sampler not in SAMPLER_CHOICES:
            raise ValueError(f"unknown sampler {self.sampler!r} (expected one of {SAMPLER_CHOICES})")
        if self.task not in TASK_CHOICES:
            raise ValueError(f"unknown task {self.task!r} (expected one of {TASK_CHOICES})")
        if isinstance(self.subgraph_size, str) and self.subgraph_size != "auto":
            try:
                self.subgraph_size = int(self.subgraph_size)
            except ValueError:
                raise ValueError(f"--subgraph-size must be an integer or 'auto', got {self.subgraph_size!r}") from None

    @classmethod
    def from_mapping(cls, values: Dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in known})

    @property
    def threshold(self) -> ThresholdParams:
        return ThresholdParams(gamma=self.gamma, confidence_alpha=self.confidence, epsilon=self.epsilon)

    def resolve(self, n: int) -> "RunConfig":
        """Fill the iteration count from the graph size and check an explicit subgraph size.

        "auto" is kept: the trainer sizes the subgraph once the sampling
        distribution is known.
        """
        iterations = self.iterations if self.iterations is not None else default_iterations(n)
        if self.sampler in ("uniform", "degree", "core") and self.subgraph_size != "auto" and self.subgraph_size > n:
            raise ValueError(f"--subgraph-size {self.subgraph_size} exceeds the number of nodes {n}")
        return replace(self, iterations=iterations)

    def to_train_config(self) -> TrainConfig:
        if self.iterations is None:
            raise ValueError("resolve() the run config before building a training config")
        strategy = {"none": "full", "negative": "negative"}.get(self.sampler, "fastgae")
        return TrainConfig(
            kind=MODEL_CHOICES[self.model],
            strategy=strategy,
            measure=self.sampler if strategy == "fastgae" else "uniform",
            sharpening_alpha=self.alpha,
            subgraph_size=self.subgraph_size if isinstance(self.subgraph_size, int) else None,
            replacement=self.replacement,
            hidden=self.hidden,
            dim=self.dim,
            iterations=self.iterations,
            dropout=self.dropout,
            seed=self.seed,
            loss=LossConfig(kl_on_all_nodes=self.kl_all_nodes),
            adam=AdamParams(lr=self.lr),
            threshold=self.threshold,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            yaml.safe_dump(self.to_dict(), f, sort_keys=True)


def load_run_config(path: str) -> Dict[str, Any]:
    """Read a config.yaml as a flat mapping of flag destinations."""
    with open(path, "r", encoding="utf-8") as f:
        values = yaml.safe_load(f) or {}
    if not isinstance(values, dict):
        raise ValueError(f"{path} does not hold a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ValueError(f"{path}: unknown keys {unknown}")
    return values
