"""Executable checks of the analytic guarantees behind the optimizer.

Each check evaluates both sides of one proved inequality on concrete inputs
and reports the margin (bound side minus bounded side). A margin below the
shared rounding slack counts as a violation. Families of random instances are
driven by the harness; a single call checks a single instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, check_same_shape
from .attention import AttentionInstance, attention_probs
from .loss import gradient

# absolute slack absorbing float64 rounding on near-equality cases
SLACK = 1e-9

_DETAIL_CAP = 10


@dataclass(frozen=True)
class TheoryReport:
    check_name: str
    instances_tested: int
    violations: int
    worst_margin: float
    details: tuple[str, ...] = ()
    notes: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _build_report(name: str, margins: list[tuple[float, str]], notes=None) -> TheoryReport:
    bad = [ctx for m, ctx in margins if m < -SLACK]
    return TheoryReport(
        check_name=name,
        instances_tested=1,
        violations=len(bad),
        worst_margin=min(m for m, _ in margins),
        details=tuple(bad[:_DETAIL_CAP]),
        notes=dict(notes or {}),
    )


def merge_reports(reports: list[TheoryReport]) -> TheoryReport:
    """Combine same-named single-instance reports; notes keep key-wise maxima."""
    if not reports:
        raise ValueError("nothing to merge")
    names = {r.check_name for r in reports}
    if len(names) > 1:
        raise ValueError(f"cannot merge distinct checks: {sorted(names)}")
    details: list[str] = []
    for r in reports:
        details.extend(r.details)
    notes: dict[str, float] = {}
    for r in reports:
        for key, val in r.notes.items():
            notes[key] = max(val, notes.get(key, -np.inf))
    return TheoryReport(
        check_name=names.pop(),
        instances_tested=sum(r.instances_tested for r in reports),
        violations=sum(r.violations for r in reports),
        worst_margin=min(r.worst_margin for r in reports),
        details=tuple(details[:_DETAIL_CAP]),
        notes=notes,
    )


def check_basic_bounds(inst: AttentionInstance, mask) -> TheoryReport:
    """Norm bounds on the probability objects:

    ||f_tilde||_F <= sqrt(n), ||c||_F <= 2 sqrt(n), ||c o f_tilde||_F <= 2 sqrt(n),
    and ||diag((c o f_tilde) @ 1)||_F <= 2n.
    """
    ft = attention_probs(inst, mask).probs
    f = attention_probs(inst).probs
    c = ft - f
    cf = c * ft
    n = inst.n
    root_n = float(np.sqrt(n))
    margins = [
        (root_n - float(np.linalg.norm(ft)), "||f_tilde||_F > sqrt(n)"),
        (2.0 * root_n - float(np.linalg.norm(c)), "||c||_F > 2 sqrt(n)"),
        (2.0 * root_n - float(np.linalg.norm(cf)), "||c o f_tilde||_F > 2 sqrt(n)"),
        (2.0 * n - float(np.linalg.norm(cf.sum(axis=1))), "||diag row sums||_F > 2n"),
    ]
    return _build_report("basic_bounds", margins)


def check_lipschitz(
    inst: AttentionInstance, m1, m2, lambda_tilde: float
) -> TheoryReport:
    """Gradient smoothness: ||g(m1) - g(m2)||_F is at most
    (lambda_tilde + 30 d n^3.5 R^6) ||m1 - m2||_F with
    R = max(1, ||X||_F, ||W||_F)."""
    m1 = as_matrix(m1, "m1")
    m2 = as_matrix(m2, "m2")
    check_same_shape(m1, m2, "check_lipschitz")
    g1 = gradient(inst, m1, lambda_tilde).grad
    g2 = gradient(inst, m2, lambda_tilde).grad
    lhs = float(np.linalg.norm(g1 - g2))
    r = max(1.0, float(np.linalg.norm(inst.x)), float(np.linalg.norm(inst.w)))
    coef = lambda_tilde + 30.0 * inst.d * inst.n**3.5 * r**6
    rhs = coef * float(np.linalg.norm(m1 - m2))
    ratio = lhs / rhs if rhs > 0.0 else 0.0
    return _build_report(
        "lipschitz",
        [(rhs - lhs, f"gradient jump {lhs!r} exceeds bound {rhs!r}")],
        notes={"empirical_to_bound_ratio": ratio},
    )


def _sigma_min(x: np.ndarray) -> float:
    return float(np.linalg.svd(x, compute_uv=False)[-1])


def check_lower_bound_xbx(x, b) -> TheoryReport:
    """Sandwich lower bound: ||X^T B X||_F >= beta ||B||_F with
    beta the smallest eigenvalue of X X^T (requires n <= d, full row rank)."""
    x = as_matrix(x, "x")
    b = as_matrix(b, "b")
    n, d = x.shape
    if n > d:
        raise ValueError(f"requires n <= d, got x of shape {x.shape}")
    if b.shape != (n, n):
        raise ValueError(f"b must be {n}x{n}, got {b.shape}")
    sigma = _sigma_min(x)
    if sigma <= 1e-12:
        raise ValueError(f"x is rank-deficient (sigma_min={sigma!r})")
    beta = sigma * sigma
    lhs = float(np.linalg.norm(x.T @ b @ x))
    rhs = beta * float(np.linalg.norm(b))
    return _build_report(
        "lower_bound_xbx",
        [(lhs - rhs, f"||X^T B X||_F {lhs!r} below beta*||B||_F {rhs!r}")],
        notes={"beta": beta},
    )


def check_lower_bound_p(b, f) -> TheoryReport:
    """Centered-product lower bound: for zero-row-sum B and row-stochastic F
    with smallest entry delta, ||B o F - diag((B o F) @ 1) F||_F >= delta ||B||_F."""
    b = as_matrix(b, "b")
    f = as_matrix(f, "f")
    check_same_shape(b, f, "check_lower_bound_p")
    if np.any(np.abs(b.sum(axis=1)) > 1e-12):
        raise ValueError("b must have zero row sums (within 1e-12)")
    if np.any(np.abs(f.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("f rows must sum to 1 (within 1e-9)")
    delta = float(f.min())
    if delta <= 0.0:
        raise ValueError(f"f must be strictly positive, min entry {delta!r}")
    bf = b * f
    lhs = float(np.linalg.norm(bf - bf.sum(axis=1, keepdims=True) * f))
    rhs = delta * float(np.linalg.norm(b))
    return _build_report(
        "lower_bound_p",
        [(lhs - rhs, f"centered product {lhs!r} below delta*||B||_F {rhs!r}")],
        notes={"delta": delta},
    )


def check_pl_inequality(
    inst: AttentionInstance, mask, lambda_tilde: float
) -> TheoryReport:
    """Gradient dominance with slack:

        ||grad||_F^2 >= 0.5 mu (2 L_attn + (2 lambda^2 / mu) ||M||_F^2 - xi)

    with mu = 2 min|W| beta delta and xi = 12 sqrt(n) max|W| ||X||_F^2
    lambda d / mu. Requires the all-ones attention mask (delta > 0 is
    impossible under causal masking), n <= d, and mask entries in [0, 1].
    The alternative printed constant 12 n^-1.5 equals the sqrt(n) form
    divided by n^2; both readings are recorded in the notes.
    """
    if inst.use_causal_mask:
        raise ValueError("requires the all-ones attention mask")
    if inst.n > inst.d:
        raise ValueError(f"requires n <= d, got n={inst.n}, d={inst.d}")
    mask = as_matrix(mask, "mask")
    if np.any(mask < 0.0) or np.any(mask > 1.0):
        raise ValueError("mask entries must lie in [0, 1]")
    lt = float(lambda_tilde)
    if lt < 0.0:
        raise ValueError(f"lambda_tilde must be >= 0, got {lambda_tilde!r}")

    abs_w = np.abs(inst.w)
    min_w = float(abs_w.min())
    if min_w <= 0.0:
        raise ValueError("requires min |W| > 0; redraw the weight")
    sigma = _sigma_min(inst.x)
    if sigma <= 1e-12:
        raise ValueError(f"x is rank-deficient (sigma_min={sigma!r})")
    beta = sigma * sigma

    parts = gradient(inst, mask, lt)
    ft = attention_probs(inst, mask).probs
    delta = float(ft.min())
    if delta <= 1e-300:
        raise ValueError(f"smallest probability {delta!r} too close to 0")
    mu = 2.0 * min_w * beta * delta

    x_norm_sq = float(np.sum(inst.x * inst.x))
    xi = 12.0 * np.sqrt(inst.n) * float(abs_w.max()) * x_norm_sq * lt * inst.d / mu

    lhs = float(np.sum(parts.grad * parts.grad))
    c_norm_sq = float(np.sum(parts.c * parts.c))
    mask_norm_sq = float(np.sum(mask * mask))
    rhs = 0.5 * mu * (c_norm_sq + (2.0 * lt * lt / mu) * mask_norm_sq - xi)
    return _build_report(
        "pl_inequality",
        [(lhs - rhs, f"||grad||^2 {lhs!r} below PL bound {rhs!r}")],
        notes={
            "mu": mu,
            "delta": delta,
            "beta": beta,
            "xi_sqrt_n": xi,
            "xi_inv_n15": xi / (inst.n * inst.n),
        },
    )
