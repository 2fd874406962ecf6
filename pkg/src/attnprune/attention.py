"""Attention score matrices, causal masks, and masked softmax probabilities.

The central objects: an input X (n x d), a fused weight W (d x d), a pruning
mask M (d x d) applied entrywise to W, and an n x n attention mask that is
either lower-triangular (causal) or all ones. The probability matrix is the
row-normalized, attention-masked exponential of X (M o W) X^T.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, check_square, frozen
from .errors import DegenerateRowError, NumericError, ShapeError

# exp overflows float64 just above 709.78; anything this large is a modelling
# error rather than data, so fail loudly instead of returning inf
SCORE_CAP = 700.0

ROW_SUM_TOL = 1e-12


def causal_mask(n: int) -> np.ndarray:
    """n x n matrix with 1 where row >= col, else 0."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return np.tril(np.ones((n, n)))


@dataclass(frozen=True)
class AttentionInstance:
    """One calibration sample: input x (n x d), fused weight w (d x d).

    Immutable after construction. use_causal_mask selects the lower-triangular
    attention mask; False selects all ones (needed by the analytic checks,
    whose positivity assumptions fail under causal masking).
    """

    x: np.ndarray
    w: np.ndarray
    use_causal_mask: bool = True

    def __post_init__(self):
        x = as_matrix(self.x, "x")
        w = as_matrix(self.w, "w")
        check_square(w, "w")
        if x.shape[1] != w.shape[0]:
            raise ShapeError(f"x is {x.shape} but w is {w.shape}; inner dims differ")
        object.__setattr__(self, "x", frozen(x))
        object.__setattr__(self, "w", frozen(w))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def attention_mask(self) -> np.ndarray:
        if self.use_causal_mask:
            return causal_mask(self.n)
        return np.ones((self.n, self.n))


@dataclass(frozen=True)
class SoftmaxMatrix:
    """Row-stochastic n x n probability matrix.

    Invariants checked on construction: entries in [0, 1] and rows sum to 1
    within 1e-12. Producers that mask guarantee exact zeros at masked entries.
    """

    probs: np.ndarray

    def __post_init__(self):
        p = as_matrix(self.probs, "probs")
        check_square(p, "probs")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")
        row_err = np.abs(p.sum(axis=1) - 1.0)
        if np.any(row_err > ROW_SUM_TOL):
            worst = int(np.argmax(row_err))
            raise ValueError(
                f"row {worst} sums to 1{row_err[worst]:+.3e}, beyond {ROW_SUM_TOL}"
            )
        object.__setattr__(self, "probs", frozen(p))

    @property
    def n(self) -> int:
        return self.probs.shape[0]


def _raw_scores(inst: AttentionInstance, mask) -> np.ndarray:
    if mask is None:
        w_eff = inst.w
    else:
        mask = as_matrix(mask, "mask")
        if mask.shape != inst.w.shape:
            raise ShapeError(f"mask is {mask.shape}, weight is {inst.w.shape}")
        w_eff = mask * inst.w
    return inst.x @ w_eff @ inst.x.T


def exp_scores(inst: AttentionInstance, mask=None) -> np.ndarray:
    """Entrywise exp of X (M o W) X^T, mask defaulting to all ones.

    Deliberately un-shifted (downstream formulas reference these raw values);
    scores beyond SCORE_CAP raise instead of overflowing to inf.
    """
    scores = _raw_scores(inst, mask)
    peak = float(np.max(scores))
    if peak > SCORE_CAP:
        raise NumericError(f"max attention score {peak!r} exceeds cap {SCORE_CAP}")
    return np.exp(scores)


def masked_softmax(scores, m_c) -> SoftmaxMatrix:
    """Row-normalize positive scores restricted to the attention mask.

    Row i of the result is (scores_i o mask_i) / sum_j (scores o mask)[i, j].
    """
    scores = as_matrix(scores, "scores")
    check_square(scores, "scores")
    m_c = as_matrix(m_c, "m_c")
    if m_c.shape != scores.shape:
        raise ShapeError(f"mask is {m_c.shape}, scores are {scores.shape}")
    if np.any(scores <= 0.0):
        raise ValueError("scores must be strictly positive (exponentiated form)")
    masked = scores * m_c
    denom = masked.sum(axis=1)
    dead = np.where(denom == 0.0)[0]
    if dead.size:
        raise DegenerateRowError(int(dead[0]))
    return SoftmaxMatrix(masked / denom[:, None])


def attention_probs(inst: AttentionInstance, mask=None) -> SoftmaxMatrix:
    """Probability matrix of an instance under an optional pruning mask.

    Equivalent to masked_softmax(exp_scores(inst, mask), attention mask) but
    subtracts each row's max unmasked score before exponentiating, so large
    scores cannot overflow. Softmax is invariant to that shift.
    """
    scores = _raw_scores(inst, mask)
    m_c = inst.attention_mask()
    keep = m_c > 0.0
    shifted = np.where(keep, scores, -np.inf)
    row_max = shifted.max(axis=1, keepdims=True)
    expd = np.exp(shifted - row_max)
    # exp(-inf) = 0 exactly, so masked entries vanish without multiplication
    denom = expd.sum(axis=1, keepdims=True)
    return SoftmaxMatrix(expd / denom)


@dataclass(frozen=True)
class CalibrationSet:
    """k instances sharing n, d, weight, and attention-mask mode.

    cached_refs[j] is the unpruned probability matrix of instance j, computed
    once so loss and gradient evaluations never rebuild it.
    """

    instances: tuple[AttentionInstance, ...]
    cached_refs: tuple[SoftmaxMatrix, ...] = field(default=())

    def __post_init__(self):
        instances = tuple(self.instances)
        if not instances:
            raise ValueError("calibration set must contain at least one instance")
        first = instances[0]
        for inst in instances[1:]:
            if (inst.n, inst.d, inst.use_causal_mask) != (
                first.n,
                first.d,
                first.use_causal_mask,
            ):
                raise ValueError("instances must share n, d, and mask mode")
        refs = tuple(self.cached_refs) or tuple(
            attention_probs(inst) for inst in instances
        )
        if len(refs) != len(instances):
            raise ValueError("cached_refs length must match instances")
        object.__setattr__(self, "instances", instances)
        object.__setattr__(self, "cached_refs", refs)

    @property
    def k(self) -> int:
        return len(self.instances)

    @property
    def n(self) -> int:
        return self.instances[0].n

    @property
    def d(self) -> int:
        return self.instances[0].d

    @property
    def use_causal_mask(self) -> bool:
        return self.instances[0].use_causal_mask
