"""Reconstruction loss over pruning masks and its closed-form gradient.

For an instance with reference probabilities f and masked probabilities
f_tilde(M), the objective is

    L(M) = 0.5 * ||f_tilde(M) - f||_F^2  +  0.5 * lambda_tilde * ||M||_F^2.

The gradient has the closed form W o (X^T p X) + lambda_tilde * M where, with
c = f_tilde - f:

    p1 = c o f_tilde
    p2 = diag(p1 @ 1) @ f_tilde
    p  = p1 - p2.

A central finite-difference oracle is provided for verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, frozen
from .attention import AttentionInstance, CalibrationSet, SoftmaxMatrix, attention_probs
from .errors import ShapeError

TOTAL_TOL = 1e-12


@dataclass(frozen=True)
class LossBreakdown:
    attn: float
    reg: float
    total: float

    def __post_init__(self):
        if self.attn < 0.0 or self.reg < 0.0:
            raise ValueError("loss components must be non-negative")
        if abs(self.total - (self.attn + self.reg)) > TOTAL_TOL * max(1.0, self.total):
            raise ValueError("total must equal attn + reg")


@dataclass(frozen=True)
class GradientParts:
    """All intermediates of the closed-form gradient, exposed for testing."""

    c: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p: np.ndarray
    grad: np.ndarray

    def __post_init__(self):
        for name in ("c", "p1", "p2", "p", "grad"):
            object.__setattr__(self, name, frozen(getattr(self, name)))


def _check_mask(inst: AttentionInstance, mask) -> np.ndarray:
    mask = as_matrix(mask, "mask")
    if mask.shape != inst.w.shape:
        raise ShapeError(f"mask is {mask.shape}, weight is {inst.w.shape}")
    return mask


def _check_lambda(lambda_tilde: float) -> float:
    lt = float(lambda_tilde)
    if not np.isfinite(lt) or lt < 0.0:
        raise ValueError(f"lambda_tilde must be finite and >= 0, got {lambda_tilde!r}")
    return lt


def loss(
    inst: AttentionInstance,
    mask,
    lambda_tilde: float,
    ref: SoftmaxMatrix | None = None,
) -> LossBreakdown:
    """Evaluate the objective at a mask. ref, if given, is the cached f."""
    mask = _check_mask(inst, mask)
    lt = _check_lambda(lambda_tilde)
    f = (ref or attention_probs(inst)).probs
    ft = attention_probs(inst, mask).probs
    diff = ft - f
    attn = 0.5 * float(np.sum(diff * diff))
    reg = 0.5 * lt * float(np.sum(mask * mask))
    return LossBreakdown(attn=attn, reg=reg, total=attn + reg)


def _attn_gradient_parts(inst: AttentionInstance, mask: np.ndarray, f: np.ndarray):
    ft = attention_probs(inst, mask).probs
    c = ft - f
    p1 = c * ft
    p2 = p1.sum(axis=1, keepdims=True) * ft
    p = p1 - p2
    attn_grad = inst.w * (inst.x.T @ p @ inst.x)
    return c, p1, p2, p, attn_grad


def gradient(
    inst: AttentionInstance,
    mask,
    lambda_tilde: float,
    ref: SoftmaxMatrix | None = None,
) -> GradientParts:
    """Closed-form gradient of the objective with all intermediates."""
    mask = _check_mask(inst, mask)
    lt = _check_lambda(lambda_tilde)
    f = (ref or attention_probs(inst)).probs
    c, p1, p2, p, attn_grad = _attn_gradient_parts(inst, mask, f)
    return GradientParts(c=c, p1=p1, p2=p2, p=p, grad=attn_grad + lt * mask)


def fd_gradient(inst: AttentionInstance, mask, lambda_tilde: float, h: float = 1e-5):
    """Central finite differences of loss().total, entry by entry."""
    mask = _check_mask(inst, mask)
    lt = _check_lambda(lambda_tilde)
    if not h > 0.0:
        raise ValueError(f"h must be > 0, got {h!r}")
    ref = attention_probs(inst)
    d = mask.shape[0]
    out = np.zeros_like(mask)
    for i in range(d):
        for j in range(d):
            bumped = mask.copy()
            bumped[i, j] = mask[i, j] + h
            plus = loss(inst, bumped, lt, ref=ref).total
            bumped[i, j] = mask[i, j] - h
            minus = loss(inst, bumped, lt, ref=ref).total
            out[i, j] = (plus - minus) / (2.0 * h)
    return out


def batch_gradient(cal_set: CalibrationSet, mask, lambda_tilde: float) -> np.ndarray:
    """Un-averaged update bracket: sum_j W_j o (X_j^T p_j X_j) + lambda_tilde * M.

    The regularizer appears once, outside the sum; the optimizer applies the
    eta/k scaling. Summation runs in instance order for reproducibility.
    """
    mask = _check_mask(cal_set.instances[0], mask)
    lt = _check_lambda(lambda_tilde)
    total = np.zeros_like(mask)
    for inst, ref in zip(cal_set.instances, cal_set.cached_refs):
        total += _attn_gradient_parts(inst, mask, ref.probs)[4]
    return total + lt * mask


def batch_loss(cal_set: CalibrationSet, mask, lambda_tilde: float) -> LossBreakdown:
    """Mean attention loss over the set plus the (single) regularizer term."""
    mask = _check_mask(cal_set.instances[0], mask)
    lt = _check_lambda(lambda_tilde)
    attn = 0.0
    for inst, ref in zip(cal_set.instances, cal_set.cached_refs):
        attn += loss(inst, mask, 0.0, ref=ref).attn
    attn /= cal_set.k
    reg = 0.5 * lt * float(np.sum(mask * mask))
    return LossBreakdown(attn=attn, reg=reg, total=attn + reg)
