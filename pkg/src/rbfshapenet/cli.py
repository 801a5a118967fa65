"""rbfshapenet command-line interface."""

from __future__ import annotations

import os

if os.environ.get("RBFSN_DETERMINISTIC") == "1":
    # must happen before numpy loads its BLAS
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, "1")

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
MODEL_DIR = Path(__file__).resolve().parent / "models"

log = logging.getLogger("rbfshapenet")


def default_model_path(dim: int, family: str) -> Path:
    return MODEL_DIR / f"nn_{dim}d_{family}.json"


def _strategy(text: str, dim: int, family: str):
    from .shape_param import ShapeStrategy, parse_strategy
    from .neural.io import load_model

    if text.strip().lower() == "nn":
        path = default_model_path(dim, family)
        return ShapeStrategy.neural(load_model(path), source=str(path))
    return parse_strategy(text)


def _out(args, default):
    return Path(args.out) if args.out else Path(default)


def cmd_gen_data(args):
    from .neural.io import save_dataset
    from .neural.train import TrainConfig, default_feature_spec, generate_dataset

    cfg = TrainConfig(rng_seed=args.seed, feature_norm=args.norm)
    spec = default_feature_spec(args.dim, args.mode, args.n)
    train, valid, spec = generate_dataset(cfg, spec)
    out = _out(args, f"data_{args.dim}d")
    out.mkdir(parents=True, exist_ok=True)
    save_dataset(out / "train.txt", train.stencils)
    save_dataset(out / "valid.txt", valid.stencils)
    (out / "stats.json").write_text(json.dumps({
        "dim": spec.dim, "feature_mode": spec.mode.value, "stencil_size": spec.stencil_size,
        "feature_norm": args.norm, "norm_mean": spec.mean.tolist(),
        "norm_var": spec.var.tolist(), "seed": args.seed}, indent=1) + "\n")
    print(f"wrote {len(train)} training and {len(valid)} validation samples "
          f"(feature dim {spec.input_dim}) to {out}")
    return EXIT_OK


def cmd_train(args):
    from .neural.io import load_dataset, save_model
    from .neural.train import (TrainConfig, datasets_from_stencils, default_feature_spec,
                               generate_dataset, new_model, train)
    from .neural.features import raw_features

    overrides = {"rng_seed": args.seed}
    for name in ("learning_rate", "final_learning_rate", "reg_beta", "batch_size", "patience",
                 "max_epochs", "sensitivity_clip", "output_bias", "feature_norm"):
        if getattr(args, name) is not None:
            overrides[name] = getattr(args, name)
    if args.dim == 2:
        overrides.setdefault("median_cond_stop", (10**11.5, 10**12.5))
    cfg = TrainConfig(**overrides)
    spec = default_feature_spec(args.dim, args.mode, args.n)
    if args.data:
        data = Path(args.data)
        tr_st, va_st = load_dataset(data / "train.txt"), load_dataset(data / "valid.txt")
        spec = spec.fit(raw_features(tr_st, spec), cfg.feature_norm)
        train_set, valid_set = datasets_from_stencils(tr_st, va_st, spec)
    else:
        train_set, valid_set, spec = generate_dataset(cfg, spec)
    model = new_model(spec, args.kernel, cfg, train_set=train_set)
    best, trace = train(model, train_set, valid_set, cfg, log_every=args.log_every)
    out = _out(args, f"nn_{args.dim}d_{args.kernel}.json")
    save_model(best, out)
    trace_path = out.with_suffix(".trace.csv")
    with trace_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "valid_loss", "valid_median_cond"])
        for k, row in enumerate(zip(trace.train_loss, trace.valid_loss, trace.valid_median_cond)):
            w.writerow([k + 1, *(repr(float(v)) for v in row)])
    print(f"best epoch {trace.best_epoch} of {trace.epochs} ({trace.stop_reason}); "
          f"model -> {out}, trace -> {trace_path}")
    return EXIT_OK


def cmd_predict(args):
    from .neural.io import load_model
    from .neural.predict import predict_epsilon
    from .rbf_core import KernelSpec, build_augmented_system

    model = load_model(args.model or default_model_path(args.dim, args.kernel))
    if args.file:
        pts = np.loadtxt(args.file, ndmin=1)
    elif args.points:
        pts = np.array([float(v) for v in args.points])
    else:
        raise ValueError("give stencil points inline or with --file")
    if model.dim == 2:
        pts = pts.reshape(-1, 2)
    eps = predict_epsilon(model, pts)
    cond = build_augmented_system(pts, KernelSpec(model.kernel_family, eps)).cond_frobenius
    print(f"epsilon {eps!r}\ncond {cond:.6e}")
    return EXIT_OK


def _emit(rows, args, default_name):
    from .bench import write_csv

    out = _out(args, default_name)
    write_csv(rows, out)
    for r in rows:
        print(f"{r.case} {r.strategy} N={r.N} l1={r.l1_error:.4e} {r.status}")
    print(f"-> {out}")
    return EXIT_OK


def cmd_interp_bench(args):
    from .bench import interp_ladder_1d, resolve_interp_case, run_interp_1d, run_interp_2d

    dim, fn, equi = resolve_interp_case(args.case)
    strategy = _strategy(args.strategy, 1 if dim == "1d" else 2, args.kernel)
    if dim == "1d":
        ladder = args.ladder or interp_ladder_1d(args.kmax)
        rows = run_interp_1d(args.case, fn, strategy, args.kernel, equi, ladder, args.seed)
    else:
        kw = {"ladder": args.ladder} if args.ladder else {}
        rows = run_interp_2d(args.case, fn, strategy, args.kernel, **kw)
    return _emit(rows, args, f"{args.case}_{args.kernel}.csv")


def cmd_heat_bench(args):
    from .bench import HEAT_LADDER, run_heat

    strategy = _strategy(args.strategy, 1, args.kernel)
    rows = run_heat(args.ic, strategy, args.kernel, args.points == "equi",
                    args.ladder or HEAT_LADDER, args.dt, seed=args.seed)
    return _emit(rows, args, f"heat_{args.ic}_{args.points}_{args.kernel}.csv")


def cmd_poisson_bench(args):
    from .bench import POISSON_LADDER, run_poisson

    strategy = _strategy(args.strategy, 2, args.kernel)
    ladder = args.ladder or POISSON_LADDER
    rows = run_poisson(strategy, args.kernel, ladder)
    return _emit(rows, args, f"poisson2d_{args.kernel}.csv")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--kernel", choices=["imq", "gaussian"], default="imq")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--threads", type=int, default=1,
                        help="accepted for compatibility; runs are single-threaded")
    common.add_argument("--out", help="output path")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rbfshapenet",
                                description="Neural shape parameters for RBF interpolation and RBF-FD.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", parents=[common], help="write training/validation stencils")
    g.add_argument("--dim", type=int, choices=[1, 2], default=1)
    g.add_argument("--mode", choices=["distance", "coordinate"], default="distance")
    g.add_argument("--n", type=int, default=None, help="stencil size (10 in 1D, 9 in 2D)")
    g.add_argument("--norm", choices=["variance", "std", "robust"], default="robust")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", parents=[common], help="train a shape-parameter network")
    t.add_argument("--data", help="directory written by gen-data (default: generate)")
    t.add_argument("--dim", type=int, choices=[1, 2], default=1)
    t.add_argument("--mode", choices=["distance", "coordinate"], default="distance")
    t.add_argument("--n", type=int, default=None)
    t.add_argument("--learning-rate", dest="learning_rate", type=float)
    t.add_argument("--reg-beta", dest="reg_beta", type=float)
    t.add_argument("--batch-size", dest="batch_size", type=int)
    t.add_argument("--patience", type=int)
    t.add_argument("--final-learning-rate", dest="final_learning_rate", type=float)
    t.add_argument("--sensitivity-clip", dest="sensitivity_clip", type=float)
    t.add_argument("--output-bias", dest="output_bias", type=float,
                   help="initial output bias (default: centre the median cond in the band)")
    t.add_argument("--norm", dest="feature_norm", choices=["variance", "std", "robust"])
    t.add_argument("--max-epochs", dest="max_epochs", type=int)
    t.add_argument("--log-every", dest="log_every", type=int, default=0)
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", parents=[common], help="predict epsilon for one stencil")
    pr.add_argument("--model", help="model file (default: shipped model)")
    pr.add_argument("--dim", type=int, choices=[1, 2], default=1)
    pr.add_argument("--file", help="text file with the stencil coordinates")
    pr.add_argument("points", nargs="*", help="coordinates (x1 y1 x2 y2 ... in 2D)")
    pr.set_defaults(func=cmd_predict)

    ladder_help = "explicit ladder of N (1D) or grid sizes n (2D)"
    ib = sub.add_parser("interp-bench", parents=[common], help="interpolation benchmarks")
    ib.add_argument("--case", required=True,
                    help="f1-equi, f1-nonequi, f2-equi, f2-nonequi, interp2d-f3, interp2d-f4-alpha<a>")
    ib.add_argument("--strategy", default="nn")
    ib.add_argument("--ladder", type=int, nargs="+", help=ladder_help)
    ib.add_argument("--kmax", type=int, default=10, help="1D ladder N = 9*2^k+1, k <= kmax")
    ib.set_defaults(func=cmd_interp_bench)

    hb = sub.add_parser("heat-bench", parents=[common], help="1D heat equation suite")
    hb.add_argument("--ic", choices=["quadratic", "sine"], default="quadratic")
    hb.add_argument("--points", choices=["equi", "nonequi"], default="equi")
    hb.add_argument("--strategy", default="nn")
    hb.add_argument("--dt", type=float, default=1e-3)
    hb.add_argument("--ladder", type=int, nargs="+", help=ladder_help)
    hb.set_defaults(func=cmd_heat_bench)

    pb = sub.add_parser("poisson-bench", parents=[common], help="2D Poisson suite")
    pb.add_argument("--strategy", default="nn")
    pb.add_argument("--ladder", type=int, nargs="+", help=ladder_help)
    pb.set_defaults(func=cmd_poisson_bench)
    return p


def main(argv=None):
    from .errors import ModelFormatError, NumericalError

    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ModelFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
