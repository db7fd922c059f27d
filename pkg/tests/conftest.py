import numpy as np
import pytest

from adakern.solver import project_exact


def two_blobs(n, separation=3.0, seed=0, spread=0.6):
    """Two Gaussian blobs with +-1 labels; returns (X, y)."""
    rng = np.random.default_rng(seed)
    n_pos = n // 2
    n_neg = n - n_pos
    pos = rng.normal(0.0, spread, (n_pos, 2)) + np.array([separation / 2, 0.0])
    neg = rng.normal(0.0, spread, (n_neg, 2)) + np.array([-separation / 2, 0.0])
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    order = rng.permutation(n)
    return X[order], y[order]


def paired_blobs(n, modes=10, spread=0.05, pair_offset=0.01, seed=0):
    """1-D chain of compact blobs; every site hosts a +1/-1 pair of points.

    The per-site label pairing makes the dual mass cancel almost exactly
    across clusters, which keeps the decomposition-approximation gaps far
    inside their theoretical bounds.  Returns (X, y) with X of shape (n, 1).
    """
    rng = np.random.default_rng(seed)
    sites_per_mode = n // (2 * modes)
    X, y = [], []
    for c in range(modes):
        sites = rng.normal(0.0, spread, sites_per_mode) + float(c)
        shift = rng.normal(0.0, pair_offset, sites_per_mode)
        X.append(sites)
        y.append(np.ones(sites_per_mode))
        X.append(sites + shift)
        y.append(-np.ones(sites_per_mode))
    X = np.concatenate(X)[:, None]
    y = np.concatenate(y)
    order = rng.permutation(len(y))
    return X[order], y[order]


def random_feasible(rng, y, C):
    """Random point of {0 <= a <= C, a.y = 0} via the exact projection."""
    return project_exact(rng.uniform(0.0, C, y.size), y, C)


def oracle_project(z, y, C):
    """Independent exact projection onto {0 <= a <= C, a.y = 0}.

    Sweep-line root finding on the nondecreasing piecewise-linear map
    lam -> y . clip(z + lam y, 0, C); distinct implementation from the
    production breakpoint search, used by the reference QP solvers.
    """
    starts = np.where(y > 0, -z, z - C)
    events = np.concatenate([starts, starts + C])
    order = np.argsort(events, kind="stable")
    bps = events[order]
    deltas = np.concatenate([np.ones(len(z)), -np.ones(len(z))])[order]
    slopes = np.cumsum(deltas)
    f0 = -C * float((y < 0).sum())
    fvals = f0 + np.concatenate([[0.0], np.cumsum(slopes[:-1] * np.diff(bps))])
    k = int(np.searchsorted(fvals, 0.0))
    if k == 0:
        lam = bps[0]
    elif k == len(bps):
        lam = bps[-1]
    else:
        slope = slopes[k - 1]
        lam = bps[k - 1] + (-fvals[k - 1] / slope if slope > 0 else 0.0)
    return np.clip(z + lam * y, 0.0, C)


def reference_pgd_qp(K, y, C, iterations):
    """Long-run projected-gradient solve of the frozen-F SVM dual."""
    M = K * np.outer(y, y)
    L = float(np.linalg.eigvalsh(K)[-1])
    n = len(y)
    pos = y > 0
    f0 = -C * float((~pos).sum())
    deltas_base = np.concatenate([np.ones(n), -np.ones(n)])
    a = np.zeros(n)
    for _ in range(iterations):
        z = a + (1.0 - M @ a) / L
        starts = np.where(pos, -z, z - C)
        events = np.concatenate([starts, starts + C])
        order = np.argsort(events)
        bps = events[order]
        slopes = np.cumsum(deltas_base[order])
        fvals = f0 + np.concatenate([[0.0], np.cumsum(slopes[:-1] * np.diff(bps))])
        k = int(np.searchsorted(fvals, 0.0))
        if k == 0:
            lam = bps[0]
        elif k == 2 * n:
            lam = bps[-1]
        else:
            slope = slopes[k - 1]
            lam = bps[k - 1] + (-fvals[k - 1] / slope if slope > 0 else 0.0)
        a = np.clip(z + lam * y, 0.0, C)
    return a


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
