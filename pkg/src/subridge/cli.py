"""Command-line entry points.

Subcommands:
  theory-surface  risk landscape over a (penalty, subsample-aspect) grid
  sim             seeded Monte Carlo sweep from a key=value config file
  tune            GCV subsample tuning on a CSV dataset, with ridge baseline
  verify          run the built-in verification suite

Every command writes a JSON run manifest next to its outputs; files are
written atomically (temp + rename) and CSVs use period decimals and LF line
endings regardless of locale.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from . import ensemble as ens
from .montecarlo import SimConfig, run_experiment
from .risk import equivalence_path, optimal_lambda, optimal_subsample, risk_surface
from .spectra import ar1_model
from .tuning import subsample_grid, tune_k, tune_lambda

__all__ = ["main"]


def _atomic_write(path: Path, writer) -> None:
    """Write via a sibling temp file and rename into place."""
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def _write_text(path: Path, text: str) -> None:
    _atomic_write(path, lambda p: p.write_text(text, newline="\n"))


def _manifest(out_dir: Path, command: str, config: dict, seed, outputs, started):
    payload = {
        "command": command,
        "config": config,
        "master_seed": seed,
        "artifact_version": __version__,
        "outputs": [str(p) for p in outputs],
        "wall_clock_seconds": round(time.perf_counter() - started, 3),
    }
    path = out_dir / f"{command.replace('-', '_')}_manifest.json"
    _write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _parse_grid(text: str) -> np.ndarray:
    """Parse `lo:hi:count` (inclusive linear grid) or a single number."""
    parts = text.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) == 3:
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1 or hi < lo:
                raise ValueError
            return np.linspace(lo, hi, count)
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(
        f"expected `lo:hi:count` or a single number, got {text!r}"
    )


def _parse_config_file(path: str) -> dict[str, str]:
    items = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise SystemExit(f"cannot read config {path}: {exc}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in items:
            raise SystemExit(f"{path}:{lineno}: duplicate key {key!r}")
        items[key] = value
    return items


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_theory_surface(args) -> int:
    started = time.perf_counter()
    out = _out_dir(args)
    model, _, _ = ar1_model(args.rho_ar1, p_ref=args.p_ref, sigma2=args.sigma2)
    lam_grid, phis_grid = args.lam, args.phis
    surface = risk_surface(args.phi, lam_grid, phis_grid, model)

    nan_cells = int(np.isnan(surface).sum())
    if nan_cells:
        print(
            f"warning: {nan_cells} grid cell(s) outside the theory's domain "
            "written as nan", file=sys.stderr,
        )

    def write_surface(path):
        with open(path, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["lambda", "phis", "risk"])
            for i, lam in enumerate(lam_grid):
                for j, phis in enumerate(phis_grid):
                    writer.writerow([repr(float(lam)), repr(float(phis)),
                                     repr(float(surface[i, j]))])

    surface_path = out / "surface.csv"
    _atomic_write(surface_path, write_surface)

    phis_star, r_sub = optimal_subsample(0.0, args.phi, model)
    lam_star, r_lam = optimal_lambda(args.phi, args.phi, model)
    segment = []
    if math.isfinite(phis_star) and phis_star > args.phi:
        segment = [
            {"t": pt.t, "lambda": pt.lam, "phis": pt.phis, "risk": pt.risk}
            for pt in equivalence_path(args.phi, phis_star, model, 11)
        ]
    markers_path = out / "surface_markers.json"
    _write_text(markers_path, json.dumps({
        "phi": args.phi,
        "lambda_star": lam_star, "risk_at_lambda_star": r_lam,
        "phis_star": phis_star, "risk_at_phis_star": r_sub,
        "equivalence_segment": segment,
    }, indent=2, sort_keys=True) + "\n")

    config = {
        "phi": args.phi, "rho_ar1": args.rho_ar1, "sigma2": args.sigma2,
        "p_ref": args.p_ref, "lambda_grid": [float(v) for v in lam_grid],
        "phis_grid": [float(v) for v in phis_grid],
    }
    _manifest(out, "theory-surface", config, None,
              [surface_path, markers_path], started)
    return 0


def cmd_sim(args) -> int:
    started = time.perf_counter()
    out = _out_dir(args)
    items = _parse_config_file(args.config)
    try:
        config = SimConfig.from_mapping(items)
    except ValueError as exc:
        print(f"config error in {args.config}: {exc}", file=sys.stderr)
        return 2
    result = run_experiment(config)
    tidy_path = out / "sim_tidy.csv"
    agg_path = out / "sim_aggregate.csv"
    _atomic_write(tidy_path, result.to_tidy_csv)
    _atomic_write(agg_path, result.to_aggregate_csv)
    _manifest(out, "sim", items, config.master_seed, [tidy_path, agg_path], started)
    return 0


def _load_csv_dataset(path: str, target: str):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SystemExit(f"cannot read {path}: {exc}")
    if len(rows) < 2:
        raise SystemExit(f"{path}: need a header row and at least one data row")
    header = rows[0]
    if target not in header:
        raise SystemExit(f"{path}: target column {target!r} not in header {header}")
    t_idx = header.index(target)
    feature_names = [h for i, h in enumerate(header) if i != t_idx]
    X, y = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SystemExit(f"{path}:{lineno}: expected {len(header)} fields")
        try:
            values = [float(v) for v in row]
        except ValueError:
            raise SystemExit(f"{path}:{lineno}: non-numeric cell")
        y.append(values[t_idx])
        X.append([v for i, v in enumerate(values) if i != t_idx])
    if len(y) < 4:
        raise SystemExit(f"{path}: need at least 4 rows, found {len(y)}")
    return np.array(X), np.array(y), feature_names


def cmd_tune(args) -> int:
    started = time.perf_counter()
    out = _out_dir(args)
    X, y, _ = _load_csv_dataset(args.data, args.target)
    n = len(y)
    rng = np.random.default_rng(args.seed)
    perm = rng.permutation(n)
    n_hold = int(round(args.holdout * n))
    if not 0 < n_hold < n:
        raise SystemExit("holdout fraction leaves an empty split")
    hold_idx, train_idx = perm[:n_hold], perm[n_hold:]

    # Standardize with training-split statistics only.
    mu = X[train_idx].mean(axis=0)
    sd = X[train_idx].std(axis=0)
    sd[sd == 0] = 1.0
    Xs = (X - mu) / sd
    y_mu = y[train_idx].mean()
    yc = y - y_mu
    train = ens.Dataset(Xs[train_idx], yc[train_idx])
    hold_X, hold_y = Xs[hold_idx], y[hold_idx]

    grid = subsample_grid(train.n, args.nu)
    result = tune_k(train, args.lam, grid, args.M, args.seed)
    fit = ens.ensemble_fit(train, result.k_hat, args.M, args.lam, args.seed)
    pred = ens.predict(fit, hold_X) + y_mu
    holdout_mse = float(np.mean((hold_y - pred) ** 2))

    baseline = None
    baseline_mse = None
    if not args.no_baseline:
        lam_grid = np.concatenate(([0.0], np.logspace(-4, 2, 25)))
        baseline = tune_lambda(train, lam_grid, seed=args.seed)
        base_fit = ens.ensemble_fit(train, train.n, 1, baseline[0], args.seed)
        base_pred = ens.predict(base_fit, hold_X) + y_mu
        baseline_mse = float(np.mean((hold_y - base_pred) ** 2))

    result_path = out / "tune_result.json"
    payload = json.loads(result.to_json())
    payload.update({
        "holdout_mse": holdout_mse,
        "baseline_lambda": baseline[0] if baseline else None,
        "baseline_gcv": baseline[1] if baseline else None,
        "baseline_holdout_mse": baseline_mse,
        "train_rows": int(train.n),
        "holdout_rows": int(n_hold),
    })
    _write_text(result_path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    path_path = out / "tune_path.csv"
    _atomic_write(path_path, result.path_to_csv)
    config = {
        "data": args.data, "target": args.target, "lambda": args.lam,
        "M": args.M, "nu": args.nu, "holdout": args.holdout,
    }
    _manifest(out, "tune", config, args.seed, [result_path, path_path], started)
    print(f"k_hat = {result.k_hat}, holdout MSE = {holdout_mse:.6g}"
          + (f", baseline MSE = {baseline_mse:.6g}" if baseline_mse is not None
             else ""))
    return 0


def cmd_verify(args) -> int:
    from .verify import format_table, run_criteria

    only = None
    if args.only:
        only = [name for chunk in args.only for name in chunk.split(",")]
    try:
        results = run_criteria(only)
    except KeyError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print(format_table(results))
    return 0 if all(r.passed for r in results) else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subridge",
        description="Subsample ridge ensembles: asymptotic theory, "
                    "simulation, and GCV tuning.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_surface = sub.add_parser(
        "theory-surface", help="risk landscape over a (lambda, phis) grid"
    )
    p_surface.add_argument("--phi", type=float, required=True)
    p_surface.add_argument("--rho-ar1", type=float, default=0.5)
    p_surface.add_argument("--sigma2", type=float, default=1.0)
    p_surface.add_argument("--p-ref", type=int, default=500,
                           help="dimension of the reference spectrum")
    p_surface.add_argument("--lambda", dest="lam", type=_parse_grid, required=True,
                           metavar="LO:HI:COUNT")
    p_surface.add_argument("--phis", type=_parse_grid, required=True,
                           metavar="LO:HI:COUNT")
    p_surface.add_argument("--out-dir", default=".")
    p_surface.set_defaults(func=cmd_theory_surface)

    p_sim = sub.add_parser("sim", help="seeded Monte Carlo sweep")
    p_sim.add_argument("--config", required=True,
                       help="flat key = value config file")
    p_sim.add_argument("--out-dir", default=".")
    p_sim.set_defaults(func=cmd_sim)

    p_tune = sub.add_parser("tune", help="GCV subsample tuning on CSV data")
    p_tune.add_argument("--data", required=True, help="CSV with header row")
    p_tune.add_argument("--target", required=True, help="target column name")
    p_tune.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p_tune.add_argument("--M", type=int, default=50)
    p_tune.add_argument("--nu", type=float, default=0.5)
    p_tune.add_argument("--seed", type=int, default=0)
    p_tune.add_argument("--holdout", type=float, default=0.5)
    p_tune.add_argument("--no-baseline", action="store_true",
                        help="skip the tuned-ridge baseline")
    p_tune.add_argument("--out-dir", default=".")
    p_tune.set_defaults(func=cmd_tune)

    p_verify = sub.add_parser("verify", help="run the verification suite")
    p_verify.add_argument("--only", action="append", metavar="NAME[,NAME...]",
                          help="restrict to the named criteria")
    p_verify.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        if isinstance(exc.code, str):
            print(exc.code, file=sys.stderr)
            return 2
        raise


if __name__ == "__main__":
    sys.exit(main())
