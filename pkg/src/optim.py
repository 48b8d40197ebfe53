from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from src.model import GcnModel
from src.params import AdamParams


@dataclass(frozen=True, eq=False)
class AdamState:
    params: AdamParams
    step: int
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]

    @classmethod
    def zeros(cls, model: GcnModel, params: Optional[AdamParams] = None) -> "AdamState":
        return cls(
            params=params or AdamParams(),
            step=0,
            m={name: np.zeros_like(w) for name, w in model.weights.items()},
            v={name: np.zeros_like(w) for name, w in model.weights.items()},
        )


def adam_step(state: AdamState, model: GcnModel, grads: Dict[str, np.ndarray]) -> Tuple[GcnModel, AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    p = state.params
    t = state.step + 1
    bc1 = 1.0 - p.beta1 ** t
    bc2 = 1.0 - p.beta2 ** t
    step_size = p.lr / bc1
    weights, m_new, v_new = {}, {}, {}
    for name, w in model.weights.items():
        g = grads[name]
        if g.shape != w.shape:
            raise ValueError(f"gradient for {name} has shape {g.shape}, weight has {w.shape}")
        m = p.beta1 * state.m[name] + (1.0 - p.beta1) * g
        v = p.beta2 * state.v[name] + (1.0 - p.beta2) * (g * g)
        weights[name] = w - step_size * m / (np.sqrt(v / bc2) + p.eps_opt)
        m_new[name] = m
        v_new[name] = v
    return GcnModel(kind=model.kind, weights=weights), AdamState(params=p, step=t, m=m_new, v=v_new)
