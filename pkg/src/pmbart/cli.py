"""Command-line interface: ``pmbart {simulate,fit,curves,compare}``.

A fit writes a run directory holding ``draws/`` (one forest file per kept
draw plus ``meta.json``), ``traces.csv``, ``curves.csv`` and ``report.json``.
With ``--chains K`` each chain gets its own ``chain_<k>/`` directory.

Exit codes: 0 on success, 1 for invalid input or configuration, 2 for
failures while running.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .data import DataError, load_csv
from .model import ModelConfig, ModelVariant
from .posterior import CurveSummary, curve_summary, fit_report, load_draws, save_draws
from .sampler import run_mcmc
from .simulation import X_RANGE, linear_grid, simulate, true_latent, true_probability

log = logging.getLogger("pmbart")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# flag dest -> (ModelConfig field, converter)
_MODEL_FLAGS = {
    "trees": ("m", int),
    "k": ("k", float),
    "alpha": ("alpha", float),
    "beta": ("beta", float),
    "nu": ("nu", float),
    "q": ("q", float),
    "burnin": ("burn_in", int),
    "keep": ("keep", int),
    "thin": ("thin", int),
    "seed": ("seed", int),
    "numcut": ("num_cut", int),
}


def parse_grid(spec) -> np.ndarray:
    """``"min,max,count"`` (or a 3-element list) to an evenly spaced grid."""
    parts = spec.split(",") if isinstance(spec, str) else list(spec)
    if len(parts) != 3:
        raise UsageError(f"grid must be min,max,count, got {spec!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"grid must be min,max,count, got {spec!r}") from None
    if not lo < hi or count < 2:
        raise UsageError("grid needs min < max and count >= 2")
    return linear_grid(lo, hi, count)


def parse_monotone(spec, columns) -> dict[int, int]:
    """``"col[:dir],..."`` with ``dir`` one of up/+/+1/inc or down/-/-1/dec.

    Columns may be given by name or 0-based index.
    """
    if spec is None or spec == "":
        return {}
    if isinstance(spec, dict):
        items = [f"{k}:{v}" for k, v in spec.items()]
    elif isinstance(spec, (list, tuple)):
        items = [str(s) for s in spec]
    else:
        items = [s for s in str(spec).split(",") if s.strip()]
    out = {}
    for item in items:
        name, _, direction = item.strip().partition(":")
        direction = direction.strip().lower() or "up"
        if direction in ("up", "+", "+1", "1", "inc", "increasing"):
            sign = 1
        elif direction in ("down", "-", "-1", "dec", "decreasing"):
            sign = -1
        else:
            raise UsageError(f"unknown monotone direction {direction!r} for {name!r}")
        if name in columns:
            idx = columns.index(name)
        elif name.isdigit() and int(name) < len(columns):
            idx = int(name)
        else:
            raise UsageError(f"monotone column {name!r} is not a covariate (have: {', '.join(columns)})")
        out[idx] = sign
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="pmbart", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="draw the piecewise-linear probit benchmark")
    sim.add_argument("--n", type=int, default=500)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="CSV file for (x, y)")
    sim.add_argument("--truth", help="CSV file for (x, f, p) on the grid; default <out>_truth.csv")
    sim.add_argument("--grid", default=f"{X_RANGE[0]},{X_RANGE[1]},100")

    fit = sub.add_parser("fit", help="run the sampler on a CSV file")
    fit.add_argument("--config", help="JSON file with any of the flag names as keys; flags win")
    fit.add_argument("--data")
    fit.add_argument("--outcome")
    fit.add_argument("--variant", choices=[v.value for v in ModelVariant])
    fit.add_argument("--monotone", help="col[:dir],... with dir up or down")
    for flag, (_, conv) in _MODEL_FLAGS.items():
        fit.add_argument(f"--{flag}", type=conv)
    fit.add_argument("--grid", help="min,max,count for curves.csv; default spans the data")
    fit.add_argument("--column", help="covariate the curve moves along; default the first")
    fit.add_argument("--level", type=float)
    fit.add_argument("--out")
    fit.add_argument("--chains", type=int)

    cur = sub.add_parser("curves", help="posterior mean and band along a grid")
    cur.add_argument("--draws", required=True, help="run directory written by fit")
    cur.add_argument("--grid", required=True)
    cur.add_argument("--level", type=float, default=0.9)
    cur.add_argument("--column", default=None)
    cur.add_argument("--out", help="default <draws>/curves.csv")

    cmp_ = sub.add_parser("compare", help="compare two fits against a truth file")
    cmp_.add_argument("--draws", nargs=2, required=True, metavar=("A", "B"))
    cmp_.add_argument("--truth", required=True)
    cmp_.add_argument("--grid", help="must match the truth file's x column; default taken from it")
    cmp_.add_argument("--level", type=float, default=0.9)
    cmp_.add_argument("--out", help="JSON report path; printed to stdout as well")
    return ap


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    grid = parse_grid(args.grid)
    out = Path(args.out)
    truth = Path(args.truth) if args.truth else out.with_name(out.stem + "_truth.csv")
    d = simulate(args.n, args.seed)
    _write_rows(out, ["x", "y"], zip(d.X[:, 0], d.y))
    _write_rows(truth, ["x", "f", "p"], zip(grid, true_latent(grid), true_probability(grid)))
    print(f"wrote {d.n} rows to {out} and the truth curve to {truth}")
    return 0


def _write_rows(path: Path, header, rows):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([repr(float(v)) for v in row])
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None


# ---------------------------------------------------------------- fit


def resolve_fit_options(args) -> dict:
    """Merge the JSON config (if any) under the command-line flags."""
    opts = {}
    if args.config:
        try:
            opts = json.loads(Path(args.config).read_text())
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as e:
            raise UsageError(f"config file {args.config} is not valid JSON: {e}") from None
        if not isinstance(opts, dict):
            raise UsageError("config file must hold a JSON object")
        known = set(_MODEL_FLAGS) | {"data", "outcome", "variant", "monotone", "grid", "column", "level", "out", "chains"}
        unknown = set(opts) - known
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config", "verbose"):
            opts[key] = value
    for key in ("data", "outcome", "out"):
        if not opts.get(key):
            raise UsageError(f"--{key} is required")
    opts.setdefault("variant", "pmbart")
    opts.setdefault("level", 0.9)
    opts.setdefault("chains", 1)
    return opts


def build_config(opts: dict, columns) -> ModelConfig:
    variant = ModelVariant.parse(opts["variant"])
    kwargs = {"variant": variant, "monotone": parse_monotone(opts.get("monotone"), list(columns))}
    for flag, (name, conv) in _MODEL_FLAGS.items():
        if opts.get(flag) is not None:
            kwargs[name] = conv(opts[flag])
    if variant.monotone and not kwargs["monotone"]:
        if len(columns) != 1:
            raise UsageError(f"variant {variant.value} needs --monotone")
        kwargs["monotone"] = {0: 1}
    return ModelConfig(**kwargs)


def _fit_one(data_path, outcome, cfg: ModelConfig, out_dir, grid, column, level) -> dict:
    d = load_csv(data_path, outcome)
    draws = run_mcmc(d, cfg)
    out_dir = Path(out_dir)
    save_draws(draws, out_dir)
    if grid is None:
        grid = linear_grid(float(d.X[:, column].min()), float(d.X[:, column].max()), 100)
    curve_summary(draws, grid, level, column).to_csv(out_dir / "curves.csv")
    report = fit_report(draws, d)
    report["seed"] = cfg.seed
    (out_dir / "report.json").write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    return report


def _column_index(column, columns) -> int:
    if column is None:
        return 0
    if column in columns:
        return list(columns).index(column)
    if str(column).isdigit() and int(column) < len(columns):
        return int(column)
    raise UsageError(f"unknown column {column!r} (have: {', '.join(columns)})")


def cmd_fit(args) -> int:
    opts = resolve_fit_options(args)
    d = load_csv(opts["data"], opts["outcome"])
    cfg = build_config(opts, d.column_names)
    if cfg.variant.probit:
        d.check_binary()
    grid = parse_grid(opts["grid"]) if opts.get("grid") else None
    column = _column_index(opts.get("column"), d.column_names)
    level = float(opts["level"])
    if not 0 < level < 1:
        raise UsageError("--level must lie in (0, 1)")
    chains = int(opts["chains"])
    if chains < 1:
        raise UsageError("--chains must be >= 1")
    out = Path(opts["out"])
    if chains == 1:
        report = _fit_one(opts["data"], opts["outcome"], cfg, out, grid, column, level)
        print(json.dumps(report, indent=1, sort_keys=True))
        return 0
    seeds = [int(s.generate_state(1, np.uint64)[0]) for s in np.random.SeedSequence(cfg.seed).spawn(chains)]
    jobs = []
    with ProcessPoolExecutor(max_workers=chains) as pool:
        for k, seed in enumerate(seeds, start=1):
            chain_cfg = ModelConfig.from_dict({**cfg.to_dict(), "seed": seed})
            jobs.append(pool.submit(_fit_one, opts["data"], opts["outcome"], chain_cfg, out / f"chain_{k}", grid, column, level))
        reports = [j.result() for j in jobs]
    print(json.dumps({f"chain_{k}": r for k, r in enumerate(reports, start=1)}, indent=1, sort_keys=True))
    return 0


# ---------------------------------------------------------------- curves / compare


def cmd_curves(args) -> int:
    draws = load_draws(args.draws)
    grid = parse_grid(args.grid)
    column = _column_index(args.column, draws.column_names) if draws.column_names else 0
    summary = curve_summary(draws, grid, args.level, column)
    out = Path(args.out) if args.out else Path(args.draws) / "curves.csv"
    summary.to_csv(out)
    print(f"wrote {len(grid)} rows to {out}")
    return 0


def compare_metrics(summary: CurveSummary, truth: np.ndarray) -> dict:
    """RMSE of the mean curve against ``truth``, mean band width, and pointwise coverage."""
    return {
        "rmse": float(np.sqrt(np.mean((summary.mean - truth) ** 2))),
        "mean_band_width": float(np.mean(summary.width)),
        "coverage": float(np.mean((summary.lower <= truth) & (truth <= summary.upper))),
    }


def cmd_compare(args) -> int:
    try:
        table = np.loadtxt(args.truth, delimiter=",", skiprows=1, ndmin=2)
    except OSError:
        raise UsageError(f"truth file not found: {args.truth}") from None
    x_truth = table[:, 0]
    truth = table[:, 2] if table.shape[1] >= 3 else table[:, 1]
    grid = parse_grid(args.grid) if args.grid else x_truth
    if grid.shape != x_truth.shape or not np.allclose(grid, x_truth, rtol=0, atol=1e-9):
        raise UsageError("grid does not match the x column of the truth file")
    report = {"level": args.level, "grid_points": int(grid.size)}
    for label, path in zip(("A", "B"), args.draws):
        draws = load_draws(path)
        metrics = compare_metrics(curve_summary(draws, grid, args.level), truth)
        report[label] = {"path": str(path), "variant": draws.variant.value, **metrics}
    a, b = report["A"], report["B"]
    report["width_ratio_B_over_A"] = b["mean_band_width"] / a["mean_band_width"] if a["mean_band_width"] > 0 else None
    text = json.dumps(report, indent=1, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "curves": cmd_curves, "compare": cmd_compare}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"pmbart: error: {e}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DataError, FileNotFoundError) as e:
        print(f"pmbart: error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        # configuration checks in ModelConfig and friends
        print(f"pmbart: error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001
        print(f"pmbart: runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
