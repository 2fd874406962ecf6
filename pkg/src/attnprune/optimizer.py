"""Momentum gradient descent on a real-valued pruning mask, then binarization.

The mask starts at all ones. Each epoch computes the summed gradient bracket
over the calibration set, folds it into a heavy-ball velocity, and steps by
eta/k. The final real mask is cut to exact sparsity: the floor(rho*d^2)
smallest entries become 0, the rest 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, frozen
from .attention import CalibrationSet
from .errors import DivergenceError
from .loss import LossBreakdown, batch_gradient, batch_loss
from .metrics import relative_error

logger = logging.getLogger(__name__)

STEP_RULES = ("fixed", "inverse_lambda")

# safety cap on eta = c / lambda_ctrl; tiny lambda would otherwise explode
MAX_STEP = 1e4


@dataclass(frozen=True)
class PruneConfig:
    """Hyper-parameters of one pruning run.

    lambda_ctrl is the user-facing regularization control; the optimizer
    internally scales it to lambda_tilde = n * lambda_ctrl. step_rule "fixed"
    uses eta = step_value directly; "inverse_lambda" uses
    eta = step_value / lambda_ctrl (capped at MAX_STEP, logged when hit).
    """

    lambda_ctrl: float = 0.04
    rho: float = 0.5
    epochs: int = 100
    momentum: float = 0.9
    step_rule: str = "inverse_lambda"
    step_value: float = 0.1
    clamp_mask: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.lambda_ctrl < 0.0 or not np.isfinite(self.lambda_ctrl):
            raise ValueError(f"lambda_ctrl must be >= 0, got {self.lambda_ctrl!r}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho!r}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs!r}")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum!r}")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if not self.step_value > 0.0:
            raise ValueError(f"step_value must be > 0, got {self.step_value!r}")
        if self.step_rule == "inverse_lambda" and self.lambda_ctrl == 0.0:
            raise ValueError("inverse_lambda step rule requires lambda_ctrl > 0")

    def step_size(self) -> float:
        if self.step_rule == "fixed":
            return self.step_value
        eta = self.step_value / self.lambda_ctrl
        if eta > MAX_STEP:
            logger.warning(
                "step size %.3e capped at %.0e (lambda_ctrl=%.3e)",
                eta,
                MAX_STEP,
                self.lambda_ctrl,
            )
            return MAX_STEP
        return eta


@dataclass(frozen=True)
class MaskResult:
    real_mask: np.ndarray
    binary_mask: np.ndarray
    loss_trace: tuple[LossBreakdown, ...]
    relative_errors: tuple[float, ...]
    config: PruneConfig = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "real_mask", frozen(self.real_mask))
        object.__setattr__(self, "binary_mask", frozen(self.binary_mask))
        object.__setattr__(self, "loss_trace", tuple(self.loss_trace))
        object.__setattr__(
            self, "relative_errors", tuple(float(e) for e in self.relative_errors)
        )


def binarize(mask, rho: float) -> np.ndarray:
    """Zero the floor(rho*d^2) smallest entries (ties: lower index first)."""
    mask = as_matrix(mask, "mask")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho!r}")
    d2 = mask.size
    z = int(np.floor(rho * d2))
    out = np.ones_like(mask)
    if z > 0:
        order = np.argsort(mask.ravel(), kind="stable")
        out.ravel()[order[:z]] = 0.0
    return out


def prune_mask_gd(cal_set: CalibrationSet, config: PruneConfig) -> MaskResult:
    """Run the full mask optimization and binarization pipeline.

    Deterministic given (cal_set, config). loss_trace[t] is the averaged loss
    at the iterate entering epoch t, so a monotone trace certifies descent.
    """
    n, d, k = cal_set.n, cal_set.d, cal_set.k
    lambda_tilde = n * config.lambda_ctrl
    eta = config.step_size()
    scale = eta / k

    mask = np.ones((d, d))
    velocity = np.zeros((d, d))
    trace = []
    for epoch in range(config.epochs):
        trace.append(batch_loss(cal_set, mask, lambda_tilde))
        bracket = batch_gradient(cal_set, mask, lambda_tilde)
        # overflow here is handled by the divergence check below, not by numpy
        with np.errstate(over="ignore", invalid="ignore"):
            velocity = config.momentum * velocity + bracket
            mask = mask - scale * velocity
        if config.clamp_mask:
            mask = np.clip(mask, 0.0, 1.0)
        if not np.all(np.isfinite(mask)):
            finite_norm = float(np.sqrt(np.sum(np.square(mask[np.isfinite(mask)]))))
            raise DivergenceError(epoch=epoch, mask_norm=finite_norm)

    binary = binarize(mask, config.rho)
    errors = tuple(
        relative_error(inst, binary * inst.w) for inst in cal_set.instances
    )
    return MaskResult(
        real_mask=mask,
        binary_mask=binary,
        loss_trace=tuple(trace),
        relative_errors=errors,
        config=config,
    )
