"""Experiment harness: parameter sweeps, verification suites, gradient checks.

A sweep walks one axis (lambda, n, or rho), runs the selected methods on
seed-determined synthetic data, and reports per-cell mean/std relative error
as tidy CSV rows. Cells are independent; failures are recorded in the row's
error column and never abort the sweep. Output ordering and bytes are
deterministic for a fixed spec, so identical invocations produce identical
files. wall_ms is 0 unless timings are explicitly enabled, because real
timings would break byte-for-byte reproducibility.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .attention import AttentionInstance
from .baselines import (
    baseline_attention_error,
    magnitude_mask,
    random_mask,
    sparsegpt_prune,
    wanda_mask,
)
from .datagen import SyntheticSpec, generate
from .io import format_float
from .loss import fd_gradient, gradient
from .metrics import relative_error
from .optimizer import PruneConfig, binarize, prune_mask_gd
from .rng import SplitMix64
from .verify import (
    TheoryReport,
    check_basic_bounds,
    check_lipschitz,
    check_lower_bound_p,
    check_lower_bound_xbx,
    check_pl_inequality,
    merge_reports,
)

AXES = ("lambda", "n", "rho")
METHODS = ("ours", "wanda", "sparsegpt", "random", "magnitude")

CSV_HEADER = "method,axis,value,mean_rel_err,std_rel_err,wall_ms,seed,error"

THREADS_ENV = "ATTNPRUNE_THREADS"


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: axis plus the fixed parameters of every cell.

    The fixed field matching the swept axis is ignored (the axis values
    replace it cell by cell).
    """

    axis: str
    values: tuple[float, ...]
    d: int = 64
    n: int = 128
    k: int = 16
    rho: float = 0.5
    lambda_ctrl: float = 0.04
    epochs: int = 100
    momentum: float = 0.9
    step_value: float = 0.1
    methods: tuple[str, ...] = ("ours", "wanda", "sparsegpt")
    seed: int = 0
    weight_rank: int = 4
    use_causal_mask: bool = True
    damp: float = 0.01
    timings: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError(f"values must be strictly ascending, got {values}")
        if self.axis == "n" and any(v != int(v) or v < 1 for v in values):
            raise ValueError(f"n values must be positive integers, got {values}")
        methods = tuple(self.methods)
        unknown = [m for m in methods if m not in METHODS]
        if unknown or not methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "methods", methods)


@dataclass(frozen=True)
class SweepRow:
    method: str
    axis: str
    value: float
    mean_rel_err: float | None
    std_rel_err: float | None
    wall_ms: float
    seed: int
    error: str = ""


def pool_size() -> int:
    limit = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            limit = min(limit, max(1, int(env)))
        except ValueError:
            pass
    return limit


def _dataset(spec: SweepSpec, n: int):
    return generate(
        SyntheticSpec(
            n=n,
            d=spec.d,
            k=spec.k,
            weight_rank=spec.weight_rank,
            seed=spec.seed,
            use_causal_mask=spec.use_causal_mask,
        )
    )


def _cell_params(spec: SweepSpec, value: float) -> tuple[float, int, float]:
    lam = value if spec.axis == "lambda" else spec.lambda_ctrl
    n = int(value) if spec.axis == "n" else spec.n
    rho = value if spec.axis == "rho" else spec.rho
    return lam, n, rho


def _summary(errors) -> tuple[float, float]:
    arr = np.asarray(errors, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def _factor_errors(cal_set, fw, pruned_wq, pruned_wk):
    return [
        baseline_attention_error(inst, fw, pruned_wq, pruned_wk)
        for inst in cal_set.instances
    ]


def _run_ours_task(spec: SweepSpec, values: tuple[float, ...]) -> list[SweepRow]:
    """All "ours" cells that share one GD run.

    On the rho axis the GD iterate is rho-independent, so it runs once and
    only the binarization differs per value; elsewhere values has length 1.
    """
    started = time.perf_counter()
    lam, n, rho = _cell_params(spec, values[0])
    _, cal_set = _dataset(spec, n)
    config = PruneConfig(
        lambda_ctrl=lam,
        rho=rho,
        epochs=spec.epochs,
        momentum=spec.momentum,
        step_rule="inverse_lambda",
        step_value=spec.step_value,
        seed=spec.seed,
    )
    result = prune_mask_gd(cal_set, config)
    rows = []
    for value in values:
        rho_v = value if spec.axis == "rho" else rho
        binary = binarize(result.real_mask, rho_v)
        errors = [
            relative_error(inst, binary * inst.w) for inst in cal_set.instances
        ]
        mean, std = _summary(errors)
        rows.append(
            SweepRow("ours", spec.axis, value, mean, std, 0.0, spec.seed)
        )
    if spec.timings:
        per_row = 1000.0 * (time.perf_counter() - started) / len(rows)
        rows = [replace(r, wall_ms=per_row) for r in rows]
    return rows


def _run_baseline_cell(spec: SweepSpec, method: str, value: float) -> SweepRow:
    started = time.perf_counter()
    _, n, rho = _cell_params(spec, value)
    fw, cal_set = _dataset(spec, n)
    if method == "wanda":
        pruned_wq = wanda_mask(fw.wq, cal_set, rho) * fw.wq
        pruned_wk = wanda_mask(fw.wk, cal_set, rho) * fw.wk
    elif method == "sparsegpt":
        pruned_wq = sparsegpt_prune(fw.wq, cal_set, rho, spec.damp)
        pruned_wk = sparsegpt_prune(fw.wk, cal_set, rho, spec.damp)
    elif method == "magnitude":
        pruned_wq = magnitude_mask(fw.wq, rho) * fw.wq
        pruned_wk = magnitude_mask(fw.wk, rho) * fw.wk
    elif method == "random":
        seeds = SplitMix64(spec.seed)
        pruned_wq = random_mask(spec.d, rho, seeds.next_u64()) * fw.wq
        pruned_wk = random_mask(spec.d, rho, seeds.next_u64()) * fw.wk
    else:
        raise ValueError(f"unknown method {method!r}")
    mean, std = _summary(_factor_errors(cal_set, fw, pruned_wq, pruned_wk))
    wall = 1000.0 * (time.perf_counter() - started) if spec.timings else 0.0
    return SweepRow(method, spec.axis, value, mean, std, wall, spec.seed)


def _run_task(task) -> list[SweepRow]:
    spec, method, values = task
    try:
        if method == "ours":
            return _run_ours_task(spec, values)
        return [_run_baseline_cell(spec, method, values[0])]
    except Exception as exc:  # per-cell failures become rows, never aborts
        message = f"{type(exc).__name__}: {exc}"
        return [
            SweepRow(method, spec.axis, v, None, None, 0.0, spec.seed, message)
            for v in values
        ]


def _build_tasks(spec: SweepSpec):
    tasks = []
    for method in spec.methods:
        if method == "ours" and spec.axis == "rho":
            tasks.append((spec, method, spec.values))
        else:
            tasks.extend((spec, method, (v,)) for v in spec.values)
    return tasks


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    tasks = _build_tasks(spec)
    workers = min(pool_size(), len(tasks))
    if workers <= 1:
        results = [_run_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    rows = [row for chunk in results for row in chunk]
    value_pos = {v: i for i, v in enumerate(spec.values)}
    method_pos = {m: i for i, m in enumerate(spec.methods)}
    rows.sort(key=lambda r: (value_pos[r.value], method_pos[r.method]))
    return rows


def _sanitize(message: str) -> str:
    return message.replace(",", ";").replace("\n", "; ")


def rows_to_csv(rows: list[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        mean = "" if r.mean_rel_err is None else format_float(r.mean_rel_err)
        std = "" if r.std_rel_err is None else format_float(r.std_rel_err)
        lines.append(
            ",".join(
                [
                    r.method,
                    r.axis,
                    format_float(r.value),
                    mean,
                    std,
                    format_float(r.wall_ms),
                    str(r.seed),
                    _sanitize(r.error),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def write_csv(path, rows: list[SweepRow]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(rows_to_csv(rows))


def write_dat_files(prefix, rows: list[SweepRow]) -> list[str]:
    """One gnuplot-ready file per method: value, mean, std columns."""
    paths = []
    methods = []
    for r in rows:
        if r.method not in methods:
            methods.append(r.method)
    for method in methods:
        path = f"{prefix}.{method}.dat"
        with open(path, "w", newline="\n") as fh:
            fh.write("# value mean_rel_err std_rel_err\n")
            for r in rows:
                if r.method != method or r.mean_rel_err is None:
                    continue
                fh.write(
                    f"{format_float(r.value)} {format_float(r.mean_rel_err)} "
                    f"{format_float(r.std_rel_err)}\n"
                )
        paths.append(path)
    return paths


# ---------------------------------------------------------------------------
# verification suite


def _random_mask_matrix(rng: SplitMix64, d: int) -> np.ndarray:
    return rng.uniform(d * d).reshape(d, d)


def _random_instance(rng, n, d, causal) -> AttentionInstance:
    x = rng.gaussian(n * d).reshape(n, d)
    w = rng.gaussian(d * d).reshape(d, d)
    return AttentionInstance(x, w, causal)


def _suite_basic_bounds(rng: SplitMix64, trials: int) -> TheoryReport:
    reports = []
    for t in range(trials):
        n = 2 + rng.next_u64() % 9
        d = 1 + rng.next_u64() % 6
        causal = bool(rng.next_u64() & 1)
        inst = _random_instance(rng, n, d, causal)
        reports.append(check_basic_bounds(inst, _random_mask_matrix(rng, d)))
    return merge_reports(reports) if reports else _empty("basic_bounds")


def _suite_lipschitz(rng: SplitMix64, trials: int) -> TheoryReport:
    lambdas = (0.0, 0.1, 1.0)
    reports = []
    for t in range(trials):
        n = 2 + rng.next_u64() % 5
        d = 1 + rng.next_u64() % 4
        causal = bool(rng.next_u64() & 1)
        inst = _random_instance(rng, n, d, causal)
        m1 = _random_mask_matrix(rng, d)
        m2 = _random_mask_matrix(rng, d)
        reports.append(check_lipschitz(inst, m1, m2, lambdas[t % 3]))
    return merge_reports(reports) if reports else _empty("lipschitz")


def _suite_xbx(rng: SplitMix64, trials: int) -> TheoryReport:
    reports = []
    for _ in range(trials):
        n, d = 3, 5
        x = rng.gaussian(n * d).reshape(n, d)
        b = rng.gaussian(n * n).reshape(n, n)
        reports.append(check_lower_bound_xbx(x, b))
    return merge_reports(reports) if reports else _empty("lower_bound_xbx")


def _suite_lower_bound_p(rng: SplitMix64, trials: int) -> TheoryReport:
    reports = []
    for _ in range(trials):
        n = 2 + rng.next_u64() % 7
        # strictly positive rows normalized to 1 give delta > 0
        f = (0.1 + 0.9 * rng.uniform(n * n).reshape(n, n))
        f = f / f.sum(axis=1, keepdims=True)
        b = rng.gaussian(n * n).reshape(n, n)
        b = b - b.mean(axis=1, keepdims=True)
        reports.append(check_lower_bound_p(b, f))
    return merge_reports(reports) if reports else _empty("lower_bound_p")


def _suite_pl(rng: SplitMix64, trials: int) -> TheoryReport:
    lambdas = (0.0, 0.01, 0.1)
    reports = []
    for t in range(trials):
        n, d = 3, 4
        x = rng.gaussian(n * d).reshape(n, d)
        w = rng.gaussian(d * d).reshape(d, d)
        while np.abs(w).min() <= 1e-12:
            w = rng.gaussian(d * d).reshape(d, d)
        inst = AttentionInstance(x, w, use_causal_mask=False)
        mask = _random_mask_matrix(rng, d)
        reports.append(check_pl_inequality(inst, mask, lambdas[t % 3]))
    return merge_reports(reports) if reports else _empty("pl_inequality")


def _empty(name: str) -> TheoryReport:
    return TheoryReport(name, 0, 0, float("inf"))


_SUITES = (
    ("basic_bounds", _suite_basic_bounds),
    ("lipschitz", _suite_lipschitz),
    ("lower_bound_xbx", _suite_xbx),
    ("lower_bound_p", _suite_lower_bound_p),
    ("pl_inequality", _suite_pl),
)


def run_verify_suite(seed: int, trials: int) -> list[TheoryReport]:
    """Every check family on `trials` random conforming instances each.

    Families draw from independent sub-streams of the seed, so adding a
    family never changes the data of the others.
    """
    master = SplitMix64(seed)
    return [suite(master.child(), trials) for _, suite in _SUITES]


def verify_reports_to_csv(reports: list[TheoryReport], seed: int) -> str:
    lines = ["check,instances,violations,worst_margin,seed"]
    for r in reports:
        lines.append(
            f"{r.check_name},{r.instances_tested},{r.violations},"
            f"{format_float(r.worst_margin)},{seed}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# gradient check


@dataclass(frozen=True)
class GradCheckRow:
    trial: int
    n: int
    d: int
    causal: bool
    lambda_tilde: float
    max_rel_err: float


def run_gradcheck(trials: int, h: float = 1e-5, seed: int = 0) -> list[GradCheckRow]:
    """Closed-form gradient vs central differences on random instances.

    The per-trial statistic is max |g - fd| / (1 + max |g|), a relative entry
    error that stays meaningful when individual entries are near zero.
    """
    rng = SplitMix64(seed)
    lambdas = (0.0, 0.1, 1.0)
    rows = []
    for t in range(trials):
        n = 2 + rng.next_u64() % 7
        d = 1 + rng.next_u64() % 6
        causal = bool(rng.next_u64() & 1)
        lt = lambdas[t % 3]
        inst = _random_instance(rng, n, d, causal)
        mask = _random_mask_matrix(rng, d)
        g = gradient(inst, mask, lt).grad
        fd = fd_gradient(inst, mask, lt, h)
        err = float(np.abs(g - fd).max() / (1.0 + np.abs(g).max()))
        rows.append(GradCheckRow(t, n, d, causal, lt, err))
    return rows


def gradcheck_to_csv(rows: list[GradCheckRow]) -> str:
    lines = ["trial,n,d,causal,lambda_tilde,max_rel_err"]
    for r in rows:
        lines.append(
            f"{r.trial},{r.n},{r.d},{int(r.causal)},"
            f"{format_float(r.lambda_tilde)},{format_float(r.max_rel_err)}"
        )
    return "\n".join(lines) + "\n"
