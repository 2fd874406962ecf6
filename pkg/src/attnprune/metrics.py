"""Evaluation metric: relative attention reconstruction error."""

from __future__ import annotations

import numpy as np

from ._validation import as_matrix
from .attention import AttentionInstance, attention_probs
from .errors import ShapeError


def relative_error(inst: AttentionInstance, pruned_fused_w) -> float:
    """||approx - exact||_F^2 / ||exact||_F^2 between probability matrices.

    exact comes from the instance's own weight, approx from pruned_fused_w,
    both under the instance's attention mask. Rows sum to 1, so the
    denominator is at least 1 and the ratio is always defined.
    """
    pruned = as_matrix(pruned_fused_w, "pruned_fused_w")
    if pruned.shape != inst.w.shape:
        raise ShapeError(f"pruned weight is {pruned.shape}, expected {inst.w.shape}")
    exact = attention_probs(inst).probs
    approx = attention_probs(
        AttentionInstance(inst.x, pruned, inst.use_causal_mask)
    ).probs
    diff = approx - exact
    return float(np.sum(diff * diff) / np.sum(exact * exact))
