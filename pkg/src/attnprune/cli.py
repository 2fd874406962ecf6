"""Command-line front end.

Subcommands: gen (dataset to disk), prune (single run), sweep (axis sweeps to
CSV), verify (analytic checks), gradcheck (closed form vs finite differences).

Every option can also come from a flat key=value config file (--config);
explicit flags win over file values. Keys are the long flag names without the
leading dashes.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .attention import AttentionInstance, CalibrationSet
from .datagen import SyntheticSpec, generate
from .io import format_float, read_matrix, write_matrix
from .optimizer import PruneConfig, prune_mask_gd
from .sweep import (
    AXES,
    METHODS,
    SweepSpec,
    gradcheck_to_csv,
    run_gradcheck,
    run_sweep,
    run_verify_suite,
    verify_reports_to_csv,
    write_csv,
    write_dat_files,
)


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _strs(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


# dest -> (flag, converter, default, help)
_COMMON_DATA = {
    "d": ("--d", int, 64, "weight width"),
    "n": ("--n", int, 128, "sequence length"),
    "k": ("--k", int, 16, "number of calibration inputs"),
    "weight_rank": ("--rank", int, 4, "retained singular values per factor"),
    "seed": ("--seed", int, 0, "master seed"),
    "causal": ("--causal", _bool, True, "use the causal attention mask"),
}

_GD_OPTS = {
    "lambda_ctrl": ("--lambda", float, 0.04, "regularization control value"),
    "rho": ("--rho", float, 0.5, "fraction of weight entries pruned"),
    "epochs": ("--epochs", int, 100, "gradient descent epochs"),
    "momentum": ("--momentum", float, 0.9, "heavy-ball momentum"),
    "step_rule": ("--step-rule", str, "inverse_lambda", "fixed | inverse_lambda"),
    "step_value": ("--step-value", float, 0.1, "eta, or eta*lambda for inverse rule"),
    "clamp": ("--clamp", _bool, False, "project mask to [0,1] each step"),
}

_TABLES = {
    "gen": {
        **_COMMON_DATA,
        "out": ("--out", str, "dataset", "output directory"),
    },
    "prune": {
        **_COMMON_DATA,
        **_GD_OPTS,
        "data": ("--data", str, None, "dataset directory from gen"),
        "out": ("--out", str, None, "loss-trace CSV path"),
        "mask_out": ("--mask-out", str, None, "binary mask output (.atpm)"),
    },
    "sweep": {
        **_COMMON_DATA,
        **{k: v for k, v in _GD_OPTS.items() if k not in ("step_rule", "clamp")},
        "axis": ("--axis", str, None, f"swept axis: {', '.join(AXES)}"),
        "values": ("--values", _floats, None, "comma-separated axis values"),
        "methods": ("--methods", _strs, ("ours", "wanda", "sparsegpt"),
                    f"subset of {', '.join(METHODS)}"),
        "damp": ("--damp", float, 0.01, "sparsegpt Hessian dampening"),
        "timings": ("--timings", _bool, False,
                    "record wall_ms (breaks byte reproducibility)"),
        "out": ("--out", str, "sweep.csv", "output CSV path"),
        "dat": ("--dat", str, None, "prefix for per-method gnuplot files"),
    },
    "verify": {
        "trials": ("--trials", int, 100, "instances per check family"),
        "seed": ("--seed", int, 0, "suite seed"),
        "out": ("--out", str, None, "report CSV path"),
    },
    "gradcheck": {
        "trials": ("--trials", int, 50, "random instances"),
        "h": ("--h", float, 1e-5, "finite-difference step"),
        "seed": ("--seed", int, 0, "instance seed"),
        "tol": ("--tol", float, 1e-5, "max allowed relative entry error"),
        "out": ("--out", str, None, "per-trial CSV path"),
    },
}


def _load_config(path: str) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        out[key.strip()] = value.strip()
    return out


def _resolve(args: argparse.Namespace, table: dict) -> dict:
    config = _load_config(args.config) if args.config else {}
    known = {flag.lstrip("-") for flag, *_ in table.values()} | set(table)
    for key in config:
        if key not in known:
            raise SystemExit(f"error: unknown config key {key!r}")
    opts = {}
    for dest, (flag, conv, default, _help) in table.items():
        raw = getattr(args, dest)
        if raw is None:
            raw = config.get(flag.lstrip("-"), config.get(dest))
        if raw is None:
            opts[dest] = default
        else:
            try:
                opts[dest] = conv(raw)
            except ValueError as exc:
                raise SystemExit(f"error: bad value for {flag}: {exc}")
    return opts


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attnprune",
        description="Pruning masks for fused attention weights, with baselines "
        "and analytic property checks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, table in _TABLES.items():
        p = sub.add_parser(command)
        p.add_argument("--config", default=None, help="key=value options file")
        for dest, (flag, _conv, default, help_text) in table.items():
            p.add_argument(
                flag, dest=dest, default=None, help=f"{help_text} (default {default})"
            )
    return parser


def _dataset_from_opts(opts: dict):
    spec = SyntheticSpec(
        n=opts["n"],
        d=opts["d"],
        k=opts["k"],
        weight_rank=opts["weight_rank"],
        seed=opts["seed"],
        use_causal_mask=opts["causal"],
    )
    return spec, generate(spec)


_META_KEYS = ("d", "k", "n", "seed", "use_causal_mask", "weight_rank")


def cmd_gen(opts: dict) -> int:
    spec, (fw, cal_set) = _dataset_from_opts(opts)
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "wq.atpm", fw.wq)
    write_matrix(out / "wk.atpm", fw.wk)
    write_matrix(out / "w.atpm", fw.fused())
    for j, inst in enumerate(cal_set.instances):
        write_matrix(out / f"x_{j:03d}.atpm", inst.x)
    meta = {
        "d": spec.d,
        "k": spec.k,
        "n": spec.n,
        "seed": spec.seed,
        "use_causal_mask": str(spec.use_causal_mask).lower(),
        "weight_rank": spec.weight_rank,
    }
    with open(out / "meta.txt", "w", newline="\n") as fh:
        for key in _META_KEYS:
            fh.write(f"{key}={meta[key]}\n")
    print(f"wrote dataset (d={spec.d}, n={spec.n}, k={spec.k}) to {out}")
    return 0


def load_dataset(path) -> tuple[dict, CalibrationSet]:
    """Read a directory written by gen back into a calibration set."""
    root = Path(path)
    meta_raw = _load_config(root / "meta.txt")
    meta = {
        "d": int(meta_raw["d"]),
        "k": int(meta_raw["k"]),
        "n": int(meta_raw["n"]),
        "seed": int(meta_raw["seed"]),
        "use_causal_mask": _bool(meta_raw["use_causal_mask"]),
        "weight_rank": int(meta_raw["weight_rank"]),
    }
    w = read_matrix(root / "w.atpm")
    instances = tuple(
        AttentionInstance(
            read_matrix(root / f"x_{j:03d}.atpm"), w, meta["use_causal_mask"]
        )
        for j in range(meta["k"])
    )
    return meta, CalibrationSet(instances)


def cmd_prune(opts: dict) -> int:
    if opts["data"]:
        _, cal_set = load_dataset(opts["data"])
    else:
        _, (_, cal_set) = _dataset_from_opts(opts)
    config = PruneConfig(
        lambda_ctrl=opts["lambda_ctrl"],
        rho=opts["rho"],
        epochs=opts["epochs"],
        momentum=opts["momentum"],
        step_rule=opts["step_rule"],
        step_value=opts["step_value"],
        clamp_mask=opts["clamp"],
        seed=opts["seed"],
    )
    result = prune_mask_gd(cal_set, config)
    for epoch, entry in enumerate(result.loss_trace):
        print(
            f"epoch {epoch:4d}  attn={format_float(entry.attn)}  "
            f"reg={format_float(entry.reg)}  total={format_float(entry.total)}"
        )
    for j, err in enumerate(result.relative_errors):
        print(f"sample {j:3d}  relative_error={format_float(err)}")
    mean = sum(result.relative_errors) / len(result.relative_errors)
    zeros = int((result.binary_mask == 0.0).sum())
    print(f"mean relative_error={format_float(mean)}  zeros={zeros}")
    if opts["out"]:
        with open(opts["out"], "w", newline="\n") as fh:
            fh.write("epoch,attn,reg,total\n")
            for epoch, entry in enumerate(result.loss_trace):
                fh.write(
                    f"{epoch},{format_float(entry.attn)},"
                    f"{format_float(entry.reg)},{format_float(entry.total)}\n"
                )
        print(f"wrote loss trace to {opts['out']}")
    if opts["mask_out"]:
        write_matrix(opts["mask_out"], result.binary_mask)
        print(f"wrote binary mask to {opts['mask_out']}")
    return 0


def cmd_sweep(opts: dict) -> int:
    if not opts["axis"]:
        raise SystemExit("error: --axis is required")
    if not opts["values"]:
        raise SystemExit("error: --values is required")
    spec = SweepSpec(
        axis=opts["axis"],
        values=opts["values"],
        d=opts["d"],
        n=opts["n"],
        k=opts["k"],
        rho=opts["rho"],
        lambda_ctrl=opts["lambda_ctrl"],
        epochs=opts["epochs"],
        momentum=opts["momentum"],
        step_value=opts["step_value"],
        methods=opts["methods"],
        seed=opts["seed"],
        weight_rank=opts["weight_rank"],
        use_causal_mask=opts["causal"],
        damp=opts["damp"],
        timings=opts["timings"],
    )
    rows = run_sweep(spec)
    write_csv(opts["out"], rows)
    print(f"wrote {len(rows)} rows to {opts['out']}")
    if opts["dat"]:
        for path in write_dat_files(opts["dat"], rows):
            print(f"wrote {path}")
    failures = [r for r in rows if r.error]
    for r in failures:
        print(f"cell failed: method={r.method} value={r.value}: {r.error}")
    return 0


def cmd_verify(opts: dict) -> int:
    reports = run_verify_suite(opts["seed"], opts["trials"])
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(
            f"{status}  {r.check_name}: instances={r.instances_tested} "
            f"violations={r.violations} worst_margin={format_float(r.worst_margin)}"
        )
        for detail in r.details:
            print(f"      {detail}")
    if opts["out"]:
        with open(opts["out"], "w", newline="\n") as fh:
            fh.write(verify_reports_to_csv(reports, opts["seed"]))
        print(f"wrote report to {opts['out']}")
    return 0 if all(r.passed for r in reports) else 1


def cmd_gradcheck(opts: dict) -> int:
    rows = run_gradcheck(opts["trials"], opts["h"], opts["seed"])
    worst = max((r.max_rel_err for r in rows), default=0.0)
    print(
        f"gradcheck: trials={len(rows)} h={format_float(opts['h'])} "
        f"max_rel_err={format_float(worst)} tol={format_float(opts['tol'])}"
    )
    if opts["out"]:
        with open(opts["out"], "w", newline="\n") as fh:
            fh.write(gradcheck_to_csv(rows))
        print(f"wrote per-trial results to {opts['out']}")
    return 0 if worst <= opts["tol"] else 1


_HANDLERS = {
    "gen": cmd_gen,
    "prune": cmd_prune,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    opts = _resolve(args, _TABLES[args.command])
    try:
        return _HANDLERS[args.command](opts)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
