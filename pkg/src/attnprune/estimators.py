"""Estimator-style wrappers over the functional core.

Each pruner follows the familiar fit/transform shape: fit(X, w) learns a
binary mask for the weight matrix w from calibration inputs X (an array of
shape (k, n, d) or a CalibrationSet), transform(w) applies it. Hyper
parameters live in __init__ so get_params/set_params/clone work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from ._validation import as_matrix
from .attention import AttentionInstance, CalibrationSet
from .baselines import magnitude_mask, random_mask, sparsegpt_prune, wanda_mask
from .optimizer import PruneConfig, prune_mask_gd


def _as_calibration_set(X, w: np.ndarray, use_causal_mask: bool) -> CalibrationSet:
    if isinstance(X, CalibrationSet):
        return X
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise ValueError(f"X must be (k, n, d) or a CalibrationSet, got {arr.shape}")
    return CalibrationSet(
        tuple(AttentionInstance(x, w, use_causal_mask) for x in arr)
    )


class _MaskPrunerBase(BaseEstimator):
    """Shared mask bookkeeping: after fit, mask_ and pruned_weight_ are set."""

    def _check_fitted(self):
        if not hasattr(self, "mask_"):
            raise NotFittedError(f"{type(self).__name__} is not fitted yet")

    def transform(self, w=None) -> np.ndarray:
        """Apply the learned mask; defaults to the weight seen at fit time."""
        self._check_fitted()
        if w is None:
            return self.pruned_weight_.copy()
        w = as_matrix(w, "w")
        if w.shape != self.mask_.shape:
            raise ValueError(f"w is {w.shape}, mask is {self.mask_.shape}")
        return self.mask_ * w

    def fit_transform(self, X, w) -> np.ndarray:
        return self.fit(X, w).transform()


class MaskGDPruner(_MaskPrunerBase):
    """Gradient-descent mask pruner for fused attention weights.

    Minimizes the attention reconstruction loss over a real-valued mask, then
    keeps the largest entries at the requested sparsity.
    """

    def __init__(
        self,
        rho=0.5,
        lambda_ctrl=0.04,
        epochs=100,
        momentum=0.9,
        step_rule="inverse_lambda",
        step_value=0.1,
        clamp_mask=False,
        use_causal_mask=True,
        seed=0,
    ):
        self.rho = rho
        self.lambda_ctrl = lambda_ctrl
        self.epochs = epochs
        self.momentum = momentum
        self.step_rule = step_rule
        self.step_value = step_value
        self.clamp_mask = clamp_mask
        self.use_causal_mask = use_causal_mask
        self.seed = seed

    def fit(self, X, w):
        w = as_matrix(w, "w")
        cal_set = _as_calibration_set(X, w, self.use_causal_mask)
        config = PruneConfig(
            lambda_ctrl=self.lambda_ctrl,
            rho=self.rho,
            epochs=self.epochs,
            momentum=self.momentum,
            step_rule=self.step_rule,
            step_value=self.step_value,
            clamp_mask=self.clamp_mask,
            seed=self.seed,
        )
        result = prune_mask_gd(cal_set, config)
        self.result_ = result
        self.mask_ = np.asarray(result.binary_mask)
        self.real_mask_ = np.asarray(result.real_mask)
        self.loss_trace_ = result.loss_trace
        self.relative_errors_ = result.relative_errors
        self.pruned_weight_ = self.mask_ * w
        return self


class WandaPruner(_MaskPrunerBase):
    """Magnitude times input-column-norm scoring, no weight update."""

    def __init__(self, rho=0.5, use_causal_mask=True):
        self.rho = rho
        self.use_causal_mask = use_causal_mask

    def fit(self, X, w):
        w = as_matrix(w, "w")
        cal_set = _as_calibration_set(X, w, self.use_causal_mask)
        self.mask_ = wanda_mask(w, cal_set, self.rho)
        self.pruned_weight_ = self.mask_ * w
        return self


class SparseGPTPruner(_MaskPrunerBase):
    """Inverse-Hessian saliency pruning with row-wise error compensation.

    transform() with no argument returns the compensated weights; with an
    explicit weight it only applies the zero pattern.
    """

    def __init__(self, rho=0.5, damp=0.01, use_causal_mask=True):
        self.rho = rho
        self.damp = damp
        self.use_causal_mask = use_causal_mask

    def fit(self, X, w):
        w = as_matrix(w, "w")
        cal_set = _as_calibration_set(X, w, self.use_causal_mask)
        pruned = sparsegpt_prune(w, cal_set, self.rho, self.damp)
        self.pruned_weight_ = pruned
        self.mask_ = (pruned != 0.0).astype(np.float64)
        return self


class MagnitudePruner(_MaskPrunerBase):
    """Plain smallest-|w| pruning; calibration inputs are ignored."""

    def __init__(self, rho=0.5):
        self.rho = rho

    def fit(self, X, w):
        w = as_matrix(w, "w")
        self.mask_ = magnitude_mask(w, self.rho)
        self.pruned_weight_ = self.mask_ * w
        return self


class RandomPruner(_MaskPrunerBase):
    """Seed-determined uniform random mask; the control baseline."""

    def __init__(self, rho=0.5, seed=0):
        self.rho = rho
        self.seed = seed

    def fit(self, X, w):
        w = as_matrix(w, "w")
        self.mask_ = random_mask(w.shape[0], self.rho, self.seed)
        self.pruned_weight_ = self.mask_ * w
        return self
