"""Command-line surface: train, predict, eval, bounds, grid.

All tabular output is CSV on standard output.  Exit codes: 0 success,
1 usage error, 2 data error, 3 numerical failure.
"""

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import data as dataio
from . import scale, svm, svr
from .errors import DataError, NumericalError, ParameterError
from .persist import load_model, save_model
from .solver import SolverConfig
from .svm import SvmModel
from .svr import SvrModel

CV_GRID = [2.0 ** p for p in range(-5, 6)]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ParameterError(message)


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)


def _add_train_flags(p):
    p.add_argument("--task", choices=("svm", "svr"), default="svm")
    p.add_argument("--data", required=True, help="input path, or - for stdin")
    p.add_argument("--format", choices=("libsvm", "csv"), default="libsvm")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--eta", default="auto", help="auto or a positive number")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--variant", choices=("nesterov", "pgd", "monotone"),
                   default="nesterov")
    p.add_argument("--mode", choices=("exact", "scalable"), default="exact")
    p.add_argument("--clusters", default="1",
                   help="cluster count (scalable mode); comma list for bounds")
    p.add_argument("--cv", action="store_true")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--t-max", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-4)


def build_parser() -> _Parser:
    parser = _Parser(prog="adakern", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model and write it to disk")
    _add_train_flags(p)
    p.add_argument("--model", required=True, help="output model path")
    _add_common(p)

    p = sub.add_parser("predict", help="predict labels/values for a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("libsvm", "csv"), default="libsvm")
    _add_common(p)

    p = sub.add_parser("eval", help="accuracy (svm) or relative error (svr)")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--format", choices=("libsvm", "csv"), default="libsvm")
    p.add_argument("--repeats", type=int, default=1,
                   help="report mean/std over this many seeded splits")
    _add_common(p)

    p = sub.add_parser("bounds", help="decomposition error bounds and screening")
    _add_train_flags(p)
    p.add_argument("--kappa", type=float, default=1.0)
    _add_common(p)

    p = sub.add_parser("grid", help="decision values on a 2-D grid for plotting")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", required=True, help="x0,x1,y0,y1,res")
    _add_common(p)
    return parser


def _read_dataset(path: str, fmt: str, mode: str) -> dataio.Dataset:
    parser = dataio.parse_libsvm if fmt == "libsvm" else dataio.parse_csv
    if path == "-":
        return parser(sys.stdin.read(), mode)
    try:
        with open(path) as stream:
            return parser(stream, mode)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _resolve_eta_flag(value):
    if value == "auto":
        return None
    try:
        eta = float(value)
    except ValueError as exc:
        raise ParameterError(f"--eta must be 'auto' or a number, got {value!r}") from exc
    return eta


def _config_from_args(args) -> SolverConfig:
    variant = "monotone-nesterov" if args.variant == "monotone" else args.variant
    return SolverConfig(
        C=args.C, tau=args.tau, eta=_resolve_eta_flag(args.eta),
        t_max=args.t_max, tol=args.tol, variant=variant,
    )


def _emit(rows) -> None:
    for row in rows:
        print(",".join(str(item) for item in row))


def cmd_train(args) -> int:
    mode = dataio.CLASSIFICATION if args.task == "svm" else dataio.REGRESSION
    ds = _read_dataset(args.data, args.format, mode)
    config = _config_from_args(args)
    sigma = args.sigma

    if args.cv:
        if args.task == "svm":
            sigma, C, _ = svm.cross_validate(
                ds.X, ds.y, CV_GRID, CV_GRID, args.folds, args.seed, config)
        else:
            sigma, C, _ = _cross_validate_svr(
                ds.X, ds.y, CV_GRID, CV_GRID, args.folds, args.seed,
                config, args.epsilon)
        config = replace(config, C=C)

    if args.task == "svm":
        if args.mode == "scalable":
            v = int(args.clusters.split(",")[0])
            model = scale.train_scalable(ds.X, ds.y, sigma, config, v, args.seed)
            model.meta["clusters"] = v
        else:
            model = svm.train(ds.X, ds.y, sigma, config)
    else:
        if args.mode == "scalable":
            raise ParameterError("scalable mode applies to the svm task only")
        model = svr.train_svr(ds.X, ds.y, sigma, config, epsilon=args.epsilon)
    model.meta["seed"] = args.seed
    save_model(model, args.model)

    rows = [("key", "value"),
            ("task", args.task),
            ("sigma", sigma),
            ("C", model.config.C),
            ("eta", model.config.eta),
            ("iterations", model.meta.get("iterations", 0)),
            ("objective", model.meta.get("objective", float("nan")))]
    if isinstance(model, SvmModel):
        rows += [("f_min", model.meta.get("f_min")),
                 ("f_max", model.meta.get("f_max")),
                 ("f_rank", model.meta.get("f_rank"))]
    _emit(rows)
    return 0


def _cross_validate_svr(X, y, sigma_grid, C_grid, folds, seed, template, epsilon):
    best = None
    table = []
    fold_indices = dataio.kfold(len(y), folds, seed)
    for sig in sigma_grid:
        for C in C_grid:
            errors = []
            for held in fold_indices:
                mask = np.ones(len(y), dtype=bool)
                mask[held] = False
                cfg = replace(template, C=float(C), eta=None)
                try:
                    model = svr.train_svr(X[mask], y[mask], float(sig), cfg,
                                          epsilon=epsilon)
                    errors.append(svr.rmse(model.predict(X[held]), y[held]))
                except DataError:
                    continue
            score = float(np.mean(errors)) if errors else float("inf")
            table.append((float(sig), float(C), score))
            key = (-score, -float(C), float(sig))
            if best is None or key > best[0]:
                best = (key, float(sig), float(C))
    return best[1], best[2], table


def cmd_predict(args) -> int:
    model = load_model(args.model)
    if isinstance(model, SvrModel):
        ds = _read_dataset(args.data, args.format, dataio.REGRESSION)
        values = model.predict(ds.X)
        _emit([("index", "prediction")])
        _emit(enumerate(values))
    else:
        ds = _read_dataset(args.data, args.format, dataio.CLASSIFICATION)
        decisions = model.decision_function(ds.X)
        labels = np.where(decisions >= 0.0, 1, -1)
        _emit([("index", "label", "decision")])
        _emit((i, labels[i], decisions[i]) for i in range(len(labels)))
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    is_svr = isinstance(model, SvrModel)
    mode = dataio.REGRESSION if is_svr else dataio.CLASSIFICATION
    ds = _read_dataset(args.data, args.format, mode)

    def metric(idx):
        if is_svr:
            return svr.rmse(model.predict(ds.X[idx]), ds.y[idx])
        return float(np.mean(model.predict(ds.X[idx]) == ds.y[idx]))

    name = "rmse" if is_svr else "accuracy"
    if args.repeats <= 1:
        _emit([("metric", "value"), (name, metric(np.arange(len(ds.y))))])
    else:
        folds = dataio.kfold(len(ds.y), args.repeats, args.seed)
        scores = [metric(f) for f in folds]
        _emit([("metric", "mean", "std"),
               (name, float(np.mean(scores)), float(np.std(scores)))])
    return 0


def cmd_bounds(args) -> int:
    ds = _read_dataset(args.data, args.format, dataio.CLASSIFICATION)
    config = _config_from_args(args)
    scaler = dataio.fit_minmax(ds.X)
    Xs = dataio.apply_minmax(scaler, ds.X)
    from .kernel import gaussian_gram
    from .solver import resolve_eta

    K = gaussian_gram(Xs, args.sigma)
    config = resolve_eta(K, ds.y, config)
    exact = scale.exact_reference(K, ds.y, config)
    header = ("v", "Q_pi", "B1", "B2", "B",
              "measured_obj_gap", "obj_gap_bound",
              "measured_alpha_gap_sq", "alpha_gap_bound",
              "measured_F_gap", "F_gap_bound", "exact_F_bound",
              "screened_strict", "screened_positive", "single_class_blocks")
    rows = [header]
    for v_str in args.clusters.split(","):
        v = int(v_str)
        partition = scale.kmeans_partition(Xs, v, args.seed)
        blocks = scale.solve_blocks(Xs, ds.y, partition, args.sigma, config)
        report = scale.bound_report(blocks, K, partition, config, ds.y,
                                    exact=exact, kappa=args.kappa)
        rows.append((v, report.Q_pi, report.B1, report.B2, report.B,
                     report.measured_objective_gap, report.objective_gap_bound,
                     report.measured_alpha_gap_sq, report.alpha_gap_bound,
                     report.measured_F_gap, report.F_gap_bound,
                     report.exact_F_bound,
                     len(report.screened_indices),
                     len(report.screened_positive_indices),
                     blocks.single_class_blocks))
    _emit(rows)
    return 0


def cmd_grid(args) -> int:
    model = load_model(args.model)
    try:
        x0, x1, y0, y1, res = (float(t) for t in args.grid.split(","))
        res = int(res)
    except ValueError as exc:
        raise ParameterError(f"--grid expects x0,x1,y0,y1,res, got {args.grid!r}") from exc
    if model.X.shape[1] != 2:
        raise DataError("grid emission requires a 2-feature model")
    xs = np.linspace(x0, x1, res)
    ys = np.linspace(y0, y1, res)
    uu, vv = np.meshgrid(xs, ys, indexing="ij")
    points = np.column_stack([uu.ravel(), vv.ravel()])
    if isinstance(model, SvrModel):
        values = model.predict(points)
    else:
        values = model.decision_function(points)
    _emit([("x", "y", "value")])
    _emit((p[0], p[1], v) for p, v in zip(points, values))
    return 0


COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "bounds": cmd_bounds,
    "grid": cmd_grid,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except ParameterError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
