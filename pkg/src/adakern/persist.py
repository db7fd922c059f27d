"""Versioned plain-text model persistence.

Key-value lines with dense arrays in 17-significant-digit scientific
notation, which round-trips float64 exactly, so save -> load -> predict is
bit-identical to the in-memory model on the same platform.
"""

import numpy as np

from .data import Scaler
from .errors import DataError
from .solver import SolverConfig
from .svm import SvmModel
from .svr import SvrModel

FORMAT_NAME = "adakern-model"
FORMAT_VERSION = 1


def _fmt(x: float) -> str:
    return f"{float(x):.17e}"


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in np.asarray(v, dtype=float).ravel())


def save_model(model, path: str) -> None:
    task = "svr" if isinstance(model, SvrModel) else "svm"
    cfg = model.config
    lines = [
        f"{FORMAT_NAME} {FORMAT_VERSION}",
        f"task {task}",
        f"mode {getattr(model, 'mode', 'exact')}",
        f"variant {cfg.variant}",
        f"sigma {_fmt(model.sigma)}",
        f"bias {_fmt(model.bias)}",
        f"C {_fmt(cfg.C)}",
        f"tau {_fmt(cfg.tau)}",
        f"eta {_fmt(cfg.eta)}",
        f"t_max {cfg.t_max}",
        f"tol {_fmt(cfg.tol)}",
        f"projection_rounds {cfg.projection_rounds}",
        f"clusters {int(model.meta.get('clusters', 1))}",
        f"seed {int(model.meta.get('seed', 0))}",
        f"n {model.X.shape[0]}",
        f"d {model.X.shape[1]}",
        f"scaler_min {_fmt_vec(model.scaler.mins)}",
        f"scaler_max {_fmt_vec(model.scaler.maxs)}",
    ]
    if task == "svr":
        lines.append(f"epsilon {_fmt(model.epsilon)}")
        lines.append(f"y_scaler_min {_fmt_vec(model.y_scaler.mins)}")
        lines.append(f"y_scaler_max {_fmt_vec(model.y_scaler.maxs)}")
    lines.append(f"y {_fmt_vec(model.y)}")
    if task == "svm":
        lines.append(f"alpha {_fmt_vec(model.alpha)}")
    else:
        lines.append(f"alpha_hat {_fmt_vec(model.alpha_hat)}")
        lines.append(f"alpha_check {_fmt_vec(model.alpha_check)}")
    for row in model.X:
        lines.append(f"X {_fmt_vec(row)}")

    assignment = getattr(model, "assignment", None)
    if assignment is not None:
        lines.append("assignment " + " ".join(str(int(c)) for c in assignment))
        n_clusters = int(assignment.max()) + 1
        for c in range(n_clusters):
            idx = np.flatnonzero(assignment == c)
            block = model.F[np.ix_(idx, idx)]
            lines.append(f"block {c} {idx.size}")
            for row in block:
                lines.append(f"B {_fmt_vec(row)}")
    else:
        for row in model.F:
            lines.append(f"F {_fmt_vec(row)}")

    lines.append(f"meta_iterations {int(model.meta.get('iterations', 0))}")
    lines.append(f"meta_objective {_fmt(model.meta.get('objective', float('nan')))}")
    lines.append("end")
    with open(path, "w") as stream:
        stream.write("\n".join(lines) + "\n")


def load_model(path: str):
    with open(path) as stream:
        lines = stream.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty model file")
    header = lines[0].split()
    if len(header) != 2 or header[0] != FORMAT_NAME:
        raise DataError(f"{path}: not a model file")
    if int(header[1]) != FORMAT_VERSION:
        raise DataError(
            f"{path}: unsupported model format version {header[1]} "
            f"(expected {FORMAT_VERSION})"
        )

    scalars: dict[str, str] = {}
    vectors: dict[str, np.ndarray] = {}
    x_rows: list[np.ndarray] = []
    f_rows: list[np.ndarray] = []
    blocks: dict[int, list[np.ndarray]] = {}
    current_block = None
    for line in lines[1:]:
        if not line or line == "end":
            continue
        key, _, rest = line.partition(" ")
        try:
            if key == "X":
                x_rows.append(np.fromstring(rest, sep=" "))
            elif key == "F":
                f_rows.append(np.fromstring(rest, sep=" "))
            elif key == "block":
                current_block = int(rest.split()[0])
                blocks[current_block] = []
            elif key == "B":
                blocks[current_block].append(np.fromstring(rest, sep=" "))
            elif key in ("y", "alpha", "alpha_hat", "alpha_check", "scaler_min",
                         "scaler_max", "y_scaler_min", "y_scaler_max"):
                vectors[key] = np.fromstring(rest, sep=" ")
            elif key == "assignment":
                vectors[key] = np.array([int(t) for t in rest.split()])
            else:
                scalars[key] = rest
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"{path}: malformed line {line[:60]!r}") from exc

    try:
        task = scalars["task"]
        n = int(scalars["n"])
        d = int(scalars["d"])
        config = SolverConfig(
            C=float(scalars["C"]),
            tau=float(scalars["tau"]),
            eta=float(scalars["eta"]),
            t_max=int(scalars["t_max"]),
            tol=float(scalars["tol"]),
            projection_rounds=int(scalars["projection_rounds"]),
            variant=scalars["variant"],
        )
        X = np.vstack(x_rows)
        scaler = Scaler(mins=vectors["scaler_min"], maxs=vectors["scaler_max"])
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: incomplete model file") from exc
    if X.shape != (n, d):
        raise DataError(f"{path}: stored X has shape {X.shape}, expected ({n}, {d})")

    assignment = vectors.get("assignment")
    if assignment is not None:
        F = np.ones((n, n))
        for c, rows in blocks.items():
            idx = np.flatnonzero(assignment == c)
            block = np.vstack(rows)
            if block.shape != (idx.size, idx.size):
                raise DataError(f"{path}: block {c} has inconsistent shape")
            F[np.ix_(idx, idx)] = block
    else:
        F = np.vstack(f_rows)
        if F.shape != (n, n):
            raise DataError(f"{path}: stored F has shape {F.shape}, expected ({n}, {n})")

    meta = {
        "iterations": int(scalars.get("meta_iterations", 0)),
        "objective": float(scalars.get("meta_objective", "nan")),
        "clusters": int(scalars.get("clusters", 1)),
        "seed": int(scalars.get("seed", 0)),
    }
    common = dict(X=X, y=vectors["y"], F=F, bias=float(scalars["bias"]),
                  sigma=float(scalars["sigma"]), config=config, scaler=scaler)
    if task == "svm":
        return SvmModel(alpha=vectors["alpha"], mode=scalars.get("mode", "exact"),
                        assignment=assignment, meta=meta, **common)
    if task == "svr":
        y_scaler = Scaler(mins=vectors["y_scaler_min"], maxs=vectors["y_scaler_max"])
        return SvrModel(alpha_hat=vectors["alpha_hat"],
                        alpha_check=vectors["alpha_check"],
                        epsilon=float(scalars["epsilon"]),
                        y_scaler=y_scaler, meta=meta, **common)
    raise DataError(f"{path}: unknown task {task!r}")
