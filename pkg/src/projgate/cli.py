"""Command-line front end.

Subcommands: ``trim``, ``estimate``, ``simulate``, ``detect`` and ``replay``.
Every run writes ``manifest.json`` next to its outputs; ``projgate replay
manifest.json`` repeats the run and reproduces the outputs byte for byte.

Exit status: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .core import DIRECTION_LAWS, RngStream
from .estimators import estimate
from .io import DataError, fmt, read_observations, read_weights, write_observations, write_weights
from .rt import COUNTER_MODES, THRESHOLD_MODES, RTConfig, select_subsample
from .simgen import ESTIMATORS, ScenarioSpec, generate, replicate_seeds, run_monte_carlo

EXIT_USAGE = 1
EXIT_DATA = 2
SEED_ENV = "PROJGATE_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump_json(path, payload):
    text = json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_rt_flags(p):
    g = p.add_argument_group("trimming")
    g.add_argument("--alpha", type=float, default=0.3, help="maximal trimming fraction (default 0.3)")
    g.add_argument("--maxiter", type=int, default=100, help="unproductive directions before stopping")
    g.add_argument("--k", type=float, default=3.0, help="threshold multiplier (paper_fixed/scale_adaptive)")
    g.add_argument("--f0", type=float, default=0.0044, help="density floor (paper_fixed)")
    g.add_argument("--threshold-mode", choices=THRESHOLD_MODES, default="null_quantile")
    g.add_argument("--quantile", type=float, default=0.999)
    g.add_argument("--null-reps", type=int, default=10_000)
    g.add_argument("--counter-mode", choices=COUNTER_MODES, default="cumulative")
    g.add_argument("--direction-law", choices=DIRECTION_LAWS, default="white")
    g.add_argument("--calibration-seed", type=int, default=None)


def _add_common(p, seed=True):
    if seed:
        p.add_argument("--seed", type=int, default=0, help=f"random seed (env {SEED_ENV} overrides)")
    p.add_argument("--out-dir", default=".", help="directory for outputs and manifest.json")


def _seed(args):
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return args.seed


def _rt_config(args, alpha=None):
    try:
        return RTConfig(
            alpha=args.alpha if alpha is None else alpha,
            maxiter=args.maxiter,
            k=args.k,
            f0=args.f0,
            threshold_mode=args.threshold_mode,
            quantile=args.quantile,
            null_reps=args.null_reps,
            counter_mode=args.counter_mode,
            direction_law=args.direction_law,
            seed=_seed(args),
            calibration_seed=args.calibration_seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _out_dir(args):
    d = Path(args.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _manifest(args, command, argv, config, inputs=(), outputs=()):
    return {
        "schema_version": 1,
        "tool": "projgate",
        "version": __version__,
        "command": command,
        "argv": argv,
        "config": config,
        "input_digests": {str(Path(p).resolve()): _digest(p) for p in inputs if p != "-"},
        "outputs": sorted(outputs),
    }


def _replay_argv(args, skip=("out_dir", "func", "command")):
    """Resolved argv for the manifest: every option spelled out, paths absolute."""
    out = [args.command]
    for key, val in sorted(vars(args).items()):
        if key in skip or val is None:
            continue
        if key in ("input", "weights", "emit_data") and val != "-":
            val = str(Path(val).resolve())
        flag = "--" + key.replace("_", "-")
        if key == "input":
            out.append(val)
            continue
        if isinstance(val, bool):
            if val:
                out.append(flag)
            continue
        if isinstance(val, list):
            val = ",".join(fmt(v) if isinstance(v, float) else str(v) for v in val)
        elif isinstance(val, float):
            val = fmt(val)
        out += [flag, str(val)]
    if "seed" in vars(args):
        i = out.index("--seed")
        out[i + 1] = str(_seed(args))
    return out


# --- trim -----------------------------------------------------------------


def _audit(result, data, cfg):
    names = data.row_names
    return {
        "schema_version": 1,
        "n": result.n,
        "gamma": result.gamma,
        "directions_consumed": result.directions_consumed,
        "kept": list(result.kept),
        "trimmed": [
            {**asdict(r), "row": r.trimmed_index + 1, "name": names[r.trimmed_index] if names else None}
            for r in result.trimmed
        ],
        "config": cfg.to_dict(),
        "functional": data.functional,
    }


def cmd_trim(args):
    data = read_observations(args.input, args.header)
    if data.n < 3:
        raise DataError("need at least 3 rows to trim")
    cfg = _rt_config(args)
    result = select_subsample(data, cfg)
    out = _out_dir(args)
    write_weights(out / "weights.csv", result.weights, data.row_names)
    _dump_json(out / "audit.json", _audit(result, data, cfg))
    _dump_json(
        out / "manifest.json",
        _manifest(args, "trim", _replay_argv(args), {"rt": cfg.to_dict()}, [args.input],
                  ["weights.csv", "audit.json"]),
    )
    print(f"trimmed {len(result.trimmed)} of {data.n} rows (gamma={result.gamma:.4f}, "
          f"directions={result.directions_consumed})")
    return 0


# --- estimate -------------------------------------------------------------


def cmd_estimate(args):
    data = read_observations(args.input, args.header)
    out = _out_dir(args)
    outputs = ["estimates.json", "mean.csv"]
    inputs = [args.input]
    config = {}
    if args.weights:
        weights = read_weights(args.weights)
        inputs.append(args.weights)
        if weights.size != data.n:
            raise DataError(f"weights file has {weights.size} rows but data has {data.n}")
    else:
        if data.n < 3:
            raise DataError("need at least 3 rows to trim")
        cfg = _rt_config(args)
        config["rt"] = cfg.to_dict()
        result = select_subsample(data, cfg)
        weights = result.weights
        write_weights(out / "weights.csv", weights, data.row_names)
        _dump_json(out / "audit.json", _audit(result, data, cfg))
        outputs += ["weights.csv", "audit.json"]
    kept = int(np.sum(weights))
    if kept == 0:
        raise DataError("empty subsample: every row has weight 0")
    if kept < 2:
        raise DataError("need at least 2 kept rows for covariance")
    if args.pca is not None and not 1 <= args.pca <= data.d:
        raise UsageError(f"--pca must lie in [1, {data.d}]")
    try:
        bundle = estimate(data, weights, args.pca)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    payload = {"schema_version": 1, "n": data.n, "kept": kept, "weights": [int(w) for w in weights]}
    payload.update(bundle.to_dict())
    if data.grid is not None:
        payload["grid"] = data.grid.points.tolist()
    _dump_json(out / "estimates.json", payload)
    with open(out / "mean.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t" if data.grid is not None else "coordinate", "mean"])
        xs = data.grid.points if data.grid is not None else range(1, data.d + 1)
        for x, m in zip(xs, bundle.mean):
            w.writerow([fmt(x) if data.grid is not None else x, fmt(m)])
    _dump_json(out / "manifest.json",
               _manifest(args, "estimate", _replay_argv(args), config, inputs, outputs))
    print(f"estimated from {kept} of {data.n} rows")
    return 0


# --- simulate -------------------------------------------------------------

REPORT_COLUMNS = (
    "scenario", "estimator", "bound", "replicates", "failures", "location_error",
    "correlation_error", "location_error_per_coord", "outliers_pruned", "core_pruned", "gamma",
)


def _scenarios(args):
    try:
        if args.family == "functional":
            if args.p is not None or args.x0 is not None:
                raise UsageError("--p and --x0 apply to the multivariate family only")
            return [ScenarioSpec("functional", args.n, eps=e, case=c)
                    for c, e in itertools.product(args.case or ["B"], args.eps)]
        if args.case is not None:
            raise UsageError("--case applies to the functional family only")
        return [ScenarioSpec("multivariate", args.n, p=p, eps=e, x0=x)
                for p, x, e in itertools.product(args.p or [10], args.x0 or [7.0], args.eps)]
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _cell(v):
    if v is None:
        return ""
    return fmt(v) if isinstance(v, float) else str(v)


def cmd_simulate(args):
    specs = _scenarios(args)
    bounds = args.bounds
    if not bounds:
        raise UsageError("--bounds needs at least one value")
    for b in bounds:
        if not 0 <= b <= 0.5:
            raise UsageError(f"bound {b} outside [0, 0.5]")
    if args.reps < 1:
        raise UsageError("--reps must be positive")
    if args.threads < 1:
        raise UsageError("--threads must be positive")
    bad = set(args.estimators) - set(ESTIMATORS)
    if bad:
        raise UsageError(f"unknown estimators: {sorted(bad)}")
    if not 0 < args.it_alpha < 1:
        raise UsageError("--it-alpha must lie in (0, 1)")
    cfg = _rt_config(args, alpha=max(bounds))
    seed = _seed(args)
    out = _out_dir(args)

    reports = [
        run_monte_carlo(s, args.estimators, args.reps, seed, bounds, cfg, args.it_alpha, args.threads)
        for s in specs
    ]
    with open(out / "report.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for rep in reports:
            for row in rep.rows:
                w.writerow([_cell(v) for v in asdict(row).values()])
    _dump_json(out / "report.json", {"schema_version": 1, "reports": [r.to_dict() for r in reports]})
    outputs = ["report.csv", "report.json"]

    if args.emit_data:
        ed = Path(args.emit_data)
        ed.mkdir(parents=True, exist_ok=True)
        for spec, rep in zip(specs, reports):
            for r in range(args.reps):
                seeds = replicate_seeds(seed, r)
                data = generate(spec, RngStream(seeds["data"], "data"))
                stem = f"{spec.label}_rep{r:04d}"
                write_observations(ed / f"{stem}.csv", data)
                write_weights(ed / f"{stem}_labels.csv", data.labels.astype(int))
                _dump_json(ed / f"{stem}.json", {
                    "schema_version": 1,
                    "scenario": spec.to_dict(),
                    "replicate": r,
                    "directions_seed": seeds["directions"],
                    "calibration_seed": rep.rt_config.calibration_key,
                    "bounds": list(rep.bounds),
                })

    for rep in reports:
        print(f"{rep.spec.label}: {rep.replicates} replicates in {rep.wall_time:.1f}s", file=sys.stderr)
    _dump_json(out / "manifest.json", _manifest(
        args, "simulate", _replay_argv(args),
        {"scenarios": [s.to_dict() for s in specs], "rt": cfg.to_dict(), "bounds": bounds,
         "it_alpha": args.it_alpha, "reps": args.reps, "estimators": args.estimators},
        outputs=outputs))
    return 0


# --- detect ---------------------------------------------------------------


def cmd_detect(args):
    data = read_observations(args.input, args.header)
    if data.n < 3:
        raise DataError("need at least 3 rows")
    cfg = _rt_config(args)
    result = select_subsample(data, cfg)
    out = _out_dir(args)
    detections = []
    for r in result.trimmed:
        name = data.row_names[r.trimmed_index] if data.row_names else None
        detections.append({"row": r.trimmed_index + 1, "name": name, "gap": r.gap,
                           "threshold": r.threshold, "direction": r.direction_ordinal})
        label = f"\t{name}" if name is not None else ""
        print(f"{r.trimmed_index + 1}{label}\tgap={r.gap:.6g}\tthreshold={r.threshold:.6g}"
              f"\tdirection={r.direction_ordinal}")
    _dump_json(out / "detections.json", {
        "schema_version": 1, "n": data.n, "detections": detections,
        "gamma": result.gamma, "directions_consumed": result.directions_consumed,
    })
    _dump_json(out / "manifest.json", _manifest(
        args, "detect", _replay_argv(args), {"rt": cfg.to_dict()}, [args.input], ["detections.json"]))
    if not detections:
        print("no outliers detected", file=sys.stderr)
    return 0


# --- replay ---------------------------------------------------------------


def cmd_replay(args):
    try:
        manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read manifest {args.manifest}: {exc}") from None
    if manifest.get("schema_version") != 1 or manifest.get("tool") != "projgate":
        raise DataError("not a projgate manifest")
    for path, digest in manifest.get("input_digests", {}).items():
        if not Path(path).exists() or _digest(path) != digest:
            raise DataError(f"input {path} is missing or changed since the manifest was written")
    out_dir = args.out_dir or str(Path(args.manifest).resolve().parent)
    argv = list(manifest["argv"]) + ["--out-dir", out_dir]
    # the manifest already carries the resolved seed
    saved = os.environ.pop(SEED_ENV, None)
    try:
        return main(argv)
    finally:
        if saved is not None:
            os.environ[SEED_ENV] = saved


def build_parser():
    p = _Parser(prog="projgate", description="Random-projection trimming for robust estimates.")
    p.add_argument("--version", action="version", version=f"projgate {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("trim", help="trim outlying rows of a CSV matrix")
    t.add_argument("input", help="CSV file ('-' for stdin)")
    t.add_argument("--header", choices=("auto", "grid", "none"), default="auto")
    _add_rt_flags(t)
    _add_common(t)
    t.set_defaults(func=cmd_trim)

    e = sub.add_parser("estimate", help="mean, covariance, correlation and PCA of the kept rows")
    e.add_argument("input")
    e.add_argument("--weights", help="weights CSV; when absent the rows are trimmed first")
    e.add_argument("--pca", type=int, default=None, help="number of principal components")
    e.add_argument("--header", choices=("auto", "grid", "none"), default="auto")
    _add_rt_flags(e)
    _add_common(e)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="Monte Carlo study of trick, RT and IT estimates")
    s.add_argument("--family", choices=("functional", "multivariate"), default="functional")
    s.add_argument("--case", type=_str_list, default=None, help="functional cases, e.g. A,B,C")
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--p", type=_int_list, default=None, help="dimensions (multivariate)")
    s.add_argument("--eps", type=_float_list, default=[0.1])
    s.add_argument("--x0", type=_float_list, default=None, help="outlier magnitudes (multivariate)")
    s.add_argument("--bounds", type=_float_list, default=[0.2, 0.3, 0.4])
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--estimators", type=_str_list, default=list(ESTIMATORS))
    s.add_argument("--it-alpha", type=float, default=0.5)
    s.add_argument("--emit-data", default=None, help="also write each replicate's data here")
    _add_rt_flags(s)
    _add_common(s)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("detect", help="list outlying curves (rows) of a CSV file")
    d.add_argument("input")
    d.add_argument("--header", choices=("auto", "grid", "none"), default="auto")
    _add_rt_flags(d)
    _add_common(d)
    d.set_defaults(func=cmd_detect)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("--out-dir", default=None)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"projgate: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"projgate: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
