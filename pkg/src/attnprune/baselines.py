"""Pruning baselines that act on the weight factors with linear criteria.

Wanda scores entries by weight magnitude times input-column norm and removes
the globally smallest. SparseGPT removes by inverse-Hessian saliency and
compensates the remaining entries in the same row. Magnitude and random masks
are the controls. All methods hit exactly floor(rho * d^2) zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_matrix, check_square, frozen
from .attention import AttentionInstance, CalibrationSet
from .errors import NumericError, ShapeError
from .metrics import relative_error
from .optimizer import binarize
from .rng import SplitMix64


@dataclass(frozen=True)
class FactoredWeights:
    """Query/key factors whose product is the fused weight."""

    wq: np.ndarray
    wk: np.ndarray

    def __post_init__(self):
        wq = as_matrix(self.wq, "wq")
        wk = as_matrix(self.wk, "wk")
        check_square(wq, "wq")
        if wk.shape != wq.shape:
            raise ShapeError(f"wq is {wq.shape}, wk is {wk.shape}")
        object.__setattr__(self, "wq", frozen(wq))
        object.__setattr__(self, "wk", frozen(wk))

    @property
    def d(self) -> int:
        return self.wq.shape[0]

    def fused(self) -> np.ndarray:
        return self.wq @ self.wk.T


def _stacked_inputs(cal_set: CalibrationSet) -> np.ndarray:
    return np.vstack([inst.x for inst in cal_set.instances])


def _check_weight(w, cal_set: CalibrationSet) -> np.ndarray:
    w = as_matrix(w, "w")
    check_square(w, "w")
    if w.shape[0] != cal_set.d:
        raise ShapeError(f"weight is {w.shape}, calibration inputs have d={cal_set.d}")
    return w


def magnitude_mask(w, rho: float) -> np.ndarray:
    """Zero the floor(rho*d^2) smallest |w| entries."""
    return binarize(np.abs(as_matrix(w, "w")), rho)


def wanda_mask(w, cal_set: CalibrationSet, rho: float) -> np.ndarray:
    """Score each entry by |w[i, j]| times the l2 norm of input column j over
    the stacked calibration inputs, then zero the globally smallest scores."""
    w = _check_weight(w, cal_set)
    stacked = _stacked_inputs(cal_set)
    col_norms = np.sqrt(np.sum(stacked * stacked, axis=0))
    return binarize(np.abs(w) * col_norms[None, :], rho)


def random_mask(d: int, rho: float, seed: int) -> np.ndarray:
    """Exactly floor(rho*d^2) zeros at seed-determined uniform positions."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    # random keys + stable argsort = uniform permutation of the d^2 cells
    keys = SplitMix64(seed).next_u64_array(d * d)
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho!r}")
    z = int(np.floor(rho * d * d))
    mask = np.ones((d, d))
    mask.ravel()[np.argsort(keys, kind="stable")[:z]] = 0.0
    return mask


def sparsegpt_prune(w, cal_set: CalibrationSet, rho: float, damp: float = 0.01):
    """One-shot saliency pruning with row-wise error compensation.

    H = Xs^T Xs + damp * mean(diag) * I over the stacked inputs Xs. Saliency
    of entry (i, j) is w[i, j]^2 / Hinv[j, j], computed once from the original
    weights; the globally smallest floor(rho*d^2) saliencies are removed.
    Columns are processed left to right: removing (i, j) subtracts
    (w[i, j] / Hinv[j, j]) * Hinv[j, j+1:] from the remaining row entries.
    Removed entries are exactly 0 in the result.
    """
    w = _check_weight(w, cal_set)
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho!r}")
    if damp < 0.0:
        raise ValueError(f"damp must be >= 0, got {damp!r}")
    d = w.shape[0]

    xs = _stacked_inputs(cal_set)
    h = xs.T @ xs
    h = h + damp * float(np.mean(np.diag(h))) * np.eye(d)
    try:
        np.linalg.cholesky(h)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"calibration Hessian singular after damping: {exc}") from exc
    hinv = np.linalg.inv(h)

    saliency = (w * w) / np.diag(hinv)[None, :]
    z = int(np.floor(rho * d * d))
    selected = np.zeros((d, d), dtype=bool)
    if z > 0:
        order = np.argsort(saliency.ravel(), kind="stable")
        selected.ravel()[order[:z]] = True

    out = w.copy()
    for j in range(d):
        rows = selected[:, j]
        if not rows.any():
            continue
        coeff = out[rows, j] / hinv[j, j]
        if j + 1 < d:
            out[rows, j + 1 :] -= np.outer(coeff, hinv[j, j + 1 :])
        out[rows, j] = 0.0
    return out


def baseline_attention_error(
    inst: AttentionInstance, fw: FactoredWeights, pruned_wq, pruned_wk
) -> float:
    """Relative attention error of the re-fused pruned factors.

    The approximation uses (pruned_wq)(pruned_wk)^T; the reference is the
    instance's own fused weight.
    """
    pruned_wq = as_matrix(pruned_wq, "pruned_wq")
    pruned_wk = as_matrix(pruned_wk, "pruned_wk")
    if pruned_wq.shape != fw.wq.shape or pruned_wk.shape != fw.wk.shape:
        raise ShapeError(
            f"pruned factors {pruned_wq.shape}/{pruned_wk.shape} do not match "
            f"originals {fw.wq.shape}/{fw.wk.shape}"
        )
    return relative_error(inst, pruned_wq @ pruned_wk.T)
