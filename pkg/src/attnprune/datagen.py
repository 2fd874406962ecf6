"""Synthetic calibration data: low-rank factored weights and Gaussian inputs.

All randomness flows through rng.SplitMix64, so a seed reproduces the same
matrices on any platform independent of numpy's own stream evolution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import linalg
from .attention import AttentionInstance, CalibrationSet
from .baselines import FactoredWeights
from .errors import NumericError
from .rng import SplitMix64

logger = logging.getLogger(__name__)

# an input is regenerated if its smallest singular value drops below this
FULL_RANK_TOL = 1e-9
_MAX_REGEN = 100


@dataclass(frozen=True)
class SyntheticSpec:
    n: int
    d: int
    k: int
    weight_rank: int = 4
    seed: int = 0
    use_causal_mask: bool = True

    def __post_init__(self):
        if self.n < 1 or self.d < 1 or self.k < 1:
            raise ValueError(f"n, d, k must be >= 1, got {self.n}, {self.d}, {self.k}")
        if not 1 <= self.weight_rank <= self.d:
            raise ValueError(
                f"weight_rank must be in [1, d={self.d}], got {self.weight_rank}"
            )


def _low_rank(rng: SplitMix64, d: int, rank: int) -> np.ndarray:
    # hard truncation: singular values past the target rank become 0, the
    # leading ones are kept as drawn
    g = rng.gaussian(d * d).reshape(d, d)
    u, s, v = linalg.svd(g)
    s = s.copy()
    s[rank:] = 0.0
    return (u * s) @ v.T


def generate(spec: SyntheticSpec) -> tuple[FactoredWeights, CalibrationSet]:
    """Draw factored weights and k full-rank Gaussian inputs.

    Each factor and each input gets its own sub-stream in a fixed order, so
    changing n or k never perturbs the weights drawn for a given seed.
    """
    master = SplitMix64(spec.seed)
    wq = _low_rank(master.child(), spec.d, spec.weight_rank)
    wk = _low_rank(master.child(), spec.d, spec.weight_rank)
    w = wq @ wk.T

    instances = []
    for j in range(spec.k):
        rng = master.child()
        for _ in range(_MAX_REGEN):
            x = rng.gaussian(spec.n * spec.d).reshape(spec.n, spec.d)
            sigma_min = float(np.linalg.svd(x, compute_uv=False)[-1])
            if sigma_min > FULL_RANK_TOL:
                break
            logger.info(
                "input %d rank-deficient (sigma_min=%.3e), redrawing", j, sigma_min
            )
        else:
            raise NumericError(
                f"input {j} stayed rank-deficient after {_MAX_REGEN} draws"
            )
        instances.append(AttentionInstance(x, w, spec.use_causal_mask))

    return FactoredWeights(wq=wq, wk=wk), CalibrationSet(tuple(instances))
