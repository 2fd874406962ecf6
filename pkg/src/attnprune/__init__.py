"""attnprune: pruning masks for fused attention weight matrices.

The core pipeline optimizes a real-valued mask by momentum gradient descent
on a softmax-attention reconstruction loss, binarizes it at an exact
sparsity, and compares against Wanda, SparseGPT, magnitude, and random
baselines on seed-reproducible synthetic data. A verification suite evaluates
the analytic gradient, smoothness, and gradient-dominance properties the
optimizer relies on.
"""

from .attention import (
    AttentionInstance,
    CalibrationSet,
    SoftmaxMatrix,
    attention_probs,
    causal_mask,
    exp_scores,
    masked_softmax,
)
from .baselines import (
    FactoredWeights,
    baseline_attention_error,
    magnitude_mask,
    random_mask,
    sparsegpt_prune,
    wanda_mask,
)
from .datagen import SyntheticSpec, generate
from .errors import (
    DegenerateRowError,
    DivergenceError,
    NumericError,
    ShapeError,
)
from .estimators import (
    MagnitudePruner,
    MaskGDPruner,
    RandomPruner,
    SparseGPTPruner,
    WandaPruner,
)
from .loss import (
    GradientParts,
    LossBreakdown,
    batch_gradient,
    batch_loss,
    fd_gradient,
    gradient,
    loss,
)
from .metrics import relative_error
from .optimizer import MaskResult, PruneConfig, binarize, prune_mask_gd
from .rng import SplitMix64
from .sweep import SweepRow, SweepSpec, run_gradcheck, run_sweep, run_verify_suite
from .verify import (
    TheoryReport,
    check_basic_bounds,
    check_lipschitz,
    check_lower_bound_p,
    check_lower_bound_xbx,
    check_pl_inequality,
    merge_reports,
)

__version__ = "0.1.0"

__all__ = [
    "AttentionInstance",
    "CalibrationSet",
    "DegenerateRowError",
    "DivergenceError",
    "FactoredWeights",
    "GradientParts",
    "LossBreakdown",
    "MagnitudePruner",
    "MaskGDPruner",
    "MaskResult",
    "NumericError",
    "PruneConfig",
    "RandomPruner",
    "ShapeError",
    "SoftmaxMatrix",
    "SparseGPTPruner",
    "SplitMix64",
    "SweepRow",
    "SweepSpec",
    "SyntheticSpec",
    "TheoryReport",
    "WandaPruner",
    "attention_probs",
    "baseline_attention_error",
    "batch_gradient",
    "batch_loss",
    "binarize",
    "causal_mask",
    "check_basic_bounds",
    "check_lipschitz",
    "check_lower_bound_p",
    "check_lower_bound_xbx",
    "check_pl_inequality",
    "exp_scores",
    "fd_gradient",
    "generate",
    "gradient",
    "loss",
    "magnitude_mask",
    "masked_softmax",
    "merge_reports",
    "prune_mask_gd",
    "random_mask",
    "relative_error",
    "run_gradcheck",
    "run_sweep",
    "run_verify_suite",
    "sparsegpt_prune",
    "wanda_mask",
]
