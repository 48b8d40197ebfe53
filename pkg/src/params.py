from dataclasses import dataclass, field
from typing import Optional

LOSS_KINDS = ("cross_entropy", "frobenius")
MODEL_KINDS = ("ae", "vae")
STRATEGIES = ("full", "fastgae", "negative")
MEASURES = ("uniform", "degree", "core")


@dataclass
class ThresholdParams:
    gamma: float = 1.0
    confidence_alpha: float = 0.1
    epsilon: float = 0.001
    loss_kind: str = "cross_entropy"

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not 0.0 < self.confidence_alpha < 1.0:
            raise ValueError(f"confidence_alpha must lie in (0,1), got {self.confidence_alpha}")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0,1), got {self.epsilon}")
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"unknown loss kind {self.loss_kind!r} (expected one of {LOSS_KINDS})")


@dataclass
class LossConfig:
    # None means Auto: (#pairs - #positives) / #positives on each decoded pair set
    pos_weight: Optional[float] = None
    clip_epsilon: float = 1e-7
    kl_on_all_nodes: bool = True

    def __post_init__(self):
        if not 0.0 < self.clip_epsilon < 0.5:
            raise ValueError(f"clip_epsilon must lie in (0, 0.5), got {self.clip_epsilon}")
        if self.pos_weight is not None and self.pos_weight <= 0.0:
            raise ValueError(f"pos_weight must be > 0, got {self.pos_weight}")


@dataclass
class AdamParams:
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps_opt: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0.0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0,1)")


@dataclass
class TrainConfig:
    kind: str = "ae"
    strategy: str = "fastgae"
    measure: str = "degree"
    sharpening_alpha: float = 1.0
    subgraph_size: Optional[int] = None  # None -> threshold_subgraph_size(n)
    replacement: bool = False
    hidden: int = 32
    dim: int = 16
    iterations: int = 200
    dropout: float = 0.0
    seed: int = 0
    progress: bool = False
    loss: LossConfig = field(default_factory=LossConfig)
    adam: AdamParams = field(default_factory=AdamParams)
    threshold: ThresholdParams = field(default_factory=ThresholdParams)

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r} (expected one of {MODEL_KINDS})")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r} (expected one of {STRATEGIES})")
        if self.measure not in MEASURES:
            raise ValueError(f"unknown importance measure {self.measure!r} (expected one of {MEASURES})")
        if self.sharpening_alpha < 0.0:
            raise ValueError(f"sharpening_alpha must be >= 0, got {self.sharpening_alpha}")
        if self.subgraph_size is not None and self.subgraph_size < 1:
            raise ValueError(f"subgraph_size must be >= 1, got {self.subgraph_size}")
        if self.hidden < 1 or self.dim < 1:
            raise ValueError("hidden and dim must be >= 1")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must lie in [0,1), got {self.dropout}")


@dataclass
class SbmSpec:
    num_communities: int = 10
    community_size: int = 100
    p_in: float = 0.05
    p_out: float = 0.005
    seed: int = 0

    def __post_init__(self):
        if self.num_communities < 1 or self.community_size < 1:
            raise ValueError("num_communities and community_size must be >= 1")
        if self.num_communities * self.community_size < 2:
            raise ValueError("a stochastic block model needs at least 2 nodes")
        for name in ("p_in", "p_out"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0,1], got {value}")

    @property
    def n(self) -> int:
        return self.num_communities * self.community_size
