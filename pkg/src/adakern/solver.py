"""Saddle-point solver for the adaptive-kernel SVM dual.

The model learns an entry-wise multiplier F on a fixed Gram matrix K by
solving

    max_{alpha in A} min_{F PSD}  1'a - 1/2 a'Y(F o K)Ya
                                  + eta ||F - 11'||_F^2 + tau*eta ||F||_*

where A is the usual SVM box-plus-hyperplane feasible set.  The inner
minimization has a closed form: F(a) is the eigenvalue soft-threshold of
11' + G(a), where G(a) is the dual-weighted Gram matrix.  The outer
problem maximizes the resulting concave value function h(a), whose
(envelope) gradient is 1 - Y(F(a) o K)Ya, by projected gradient ascent
with optional Nesterov acceleration.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, ParameterError
from .linalg import soft_threshold_spectrum

VARIANTS = ("nesterov", "pgd", "monotone-nesterov")


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of one solve.

    ``eta=None`` means "resolve automatically"; the training wrappers
    replace it with ||alpha||^2 from a preliminary standard-SVM solve
    before the solver itself runs.
    """

    C: float
    tau: float = 0.01
    eta: float | None = None
    t_max: int = 2000
    tol: float = 1e-4
    projection_rounds: int = 10
    variant: str = "nesterov"

    def __post_init__(self):
        if not self.C > 0:
            raise ParameterError(f"C must be positive, got {self.C}")
        if self.tau < 0:
            raise ParameterError(f"tau must be nonnegative, got {self.tau}")
        if self.eta is not None and not self.eta > 0:
            raise ParameterError(f"eta must be positive, got {self.eta}")
        if self.t_max < 1:
            raise ParameterError(f"t_max must be at least 1, got {self.t_max}")
        if not self.tol > 0:
            raise ParameterError(f"tol must be positive, got {self.tol}")
        if self.projection_rounds < 1:
            raise ParameterError(
                f"projection_rounds must be at least 1, got {self.projection_rounds}"
            )
        if self.variant not in VARIANTS:
            raise ParameterError(
                f"variant must be one of {VARIANTS}, got {self.variant!r}"
            )


@dataclass
class DualState:
    """Dual vector with its labels and feasibility checks."""

    alpha: np.ndarray
    y: np.ndarray

    def validate(self, C: float) -> None:
        a = self.alpha
        if np.any(a < 0) or np.any(a > C):
            raise DataError("dual vector violates the box [0, C]")
        residual = abs(float(a @ self.y))
        if residual > 1e-6 * max(1.0, float(np.linalg.norm(a))):
            raise DataError(
                f"dual vector violates the hyperplane constraint: |a.y| = {residual:.3e}"
            )


@dataclass
class SolveTrace:
    """Per-solve diagnostics.

    ``objective_history`` holds h(alpha^(t)) for t = 0..iterations for the
    nesterov and pgd variants (one extra entry for the final iterate), and
    the carried h(theta^(t)) sequence (length ``iterations``) for the
    monotone variant.  ``alpha_step_history[t]`` is ||a^(t+1) - a^(t)||_2.
    """

    iterations: int = 0
    objective_history: list = field(default_factory=list)
    alpha_step_history: list = field(default_factory=list)
    terminated_by: str = "max_iter"
    warnings: list = field(default_factory=list)
    final_beta: np.ndarray | None = None
    iterates: dict | None = None


def weighted_gram(alpha, y, K, eta: float) -> np.ndarray:
    """Dual-weighted Gram matrix G = diag(a o y) K diag(a o y) / (4 eta)."""
    alpha = np.asarray(alpha, dtype=float)
    y = np.asarray(y, dtype=float)
    if alpha.shape != y.shape or alpha.shape[0] != np.asarray(K).shape[0]:
        raise DataError("alpha, y and K have inconsistent shapes")
    w = alpha * y
    return (np.asarray(K, dtype=float) * np.outer(w, w)) / (4.0 * eta)


def adaptive_matrix(alpha, y, K, tau: float, eta: float) -> np.ndarray:
    """Optimal adaptive matrix for fixed duals: threshold(11' + G(a), tau/2)."""
    F, _ = adaptive_matrix_spectrum(alpha, y, K, tau, eta)
    return F


def adaptive_matrix_spectrum(alpha, y, K, tau, eta):
    """As :func:`adaptive_matrix`, also returning the shrunk spectrum."""
    G = weighted_gram(alpha, y, K, eta)
    G += 1.0
    return soft_threshold_spectrum(G, 0.5 * tau)


def adaptive_spectral_bound(n: int, C: float, tau: float, eta: float,
                            lam_max_K: float) -> float:
    """Upper bound on lambda_max of any adaptive matrix produced for feasible duals."""
    return n - 0.5 * tau + n * C * C * lam_max_K / (4.0 * eta)


def _objective_terms(alpha, y, K, F, spectrum, tau, eta):
    w = np.asarray(y, dtype=float) * np.asarray(alpha, dtype=float)
    quad = float(w @ ((F * K) @ w))
    value = float(np.sum(alpha)) - 0.5 * quad
    dev = F - 1.0
    value += eta * float((dev * dev).sum())
    if tau > 0:
        # PSD argument: the shrunk spectrum is nonnegative, so its sum is ||F||_*.
        value += tau * eta * float(np.sum(np.abs(spectrum)))
    return value


def dual_objective(alpha, y, K, config: SolverConfig, freeze_f: bool = False) -> float:
    """Value function h(a) = H(a, F(a)) of the outer maximization."""
    if freeze_f:
        n = len(np.asarray(alpha))
        F = np.ones((n, n))
        spectrum = np.array([float(n)])
        eta = _eta_for_frozen(config)
        return _objective_terms(alpha, y, K, F, spectrum, config.tau, eta)
    eta = _require_eta(config)
    F, spectrum = adaptive_matrix_spectrum(alpha, y, K, config.tau, eta)
    return _objective_terms(alpha, y, K, F, spectrum, config.tau, eta)


def saddle_value(alpha, y, K, F, eta: float, tau: float = 0.0) -> float:
    """H(a, F) for an arbitrary (not necessarily optimal) adaptive matrix."""
    F = np.asarray(F, dtype=float)
    if tau > 0:
        spectrum = np.linalg.eigvalsh(0.5 * (F + F.T))
    else:
        spectrum = np.zeros(1)
    return _objective_terms(alpha, y, K, F, spectrum, tau, eta)


def dual_gradient(alpha, y, K, config: SolverConfig, freeze_f: bool = False) -> np.ndarray:
    """Envelope gradient of h: 1 - Y(F(a) o K)Ya with F(a) held at its optimum."""
    alpha = np.asarray(alpha, dtype=float)
    y = np.asarray(y, dtype=float)
    if freeze_f:
        FK = np.asarray(K, dtype=float)
    else:
        eta = _require_eta(config)
        F, _ = adaptive_matrix_spectrum(alpha, y, K, config.tau, eta)
        FK = F * K
    return 1.0 - y * (FK @ (y * alpha))


def lipschitz_svm(n: int, C: float, K, eta: float) -> float:
    """Gradient-Lipschitz constant of h: n + 3 n C^2 ||K||_F^2 / (4 eta)."""
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    K = np.asarray(K, dtype=float)
    fro_sq = float((K * K).sum())
    return n + 3.0 * n * C * C * fro_sq / (4.0 * eta)


def lipschitz_pgd(n: int, C: float, K, eta: float, tau: float) -> float:
    """Step constant for plain projected gradient: n - tau/2 + n C^2 lam_max(K) / (4 eta)."""
    if not eta > 0:
        raise ParameterError(f"eta must be positive, got {eta}")
    lam_max = float(np.linalg.eigvalsh(np.asarray(K, dtype=float))[-1])
    return n - 0.5 * tau + n * C * C * lam_max / (4.0 * eta)


def project_feasible(alpha, y, C: float, rounds: int = 10) -> np.ndarray:
    """Alternating projection onto {0 <= a <= C, a.y = 0}.

    Runs ``rounds`` passes of (clip to the box, then shift onto the
    hyperplane) and finishes with one extra clip, so the box holds exactly
    while the hyperplane holds up to the alternating-projection residual.
    ``y`` may be any +-1 vector; its squared norm is its length.
    """
    if rounds < 1:
        raise ParameterError(f"rounds must be at least 1, got {rounds}")
    a = np.array(alpha, dtype=float, copy=True)
    y = np.asarray(y, dtype=float)
    n = y.size
    for _ in range(rounds):
        np.clip(a, 0.0, C, out=a)
        a -= (float(a @ y) / n) * y
    np.clip(a, 0.0, C, out=a)
    return a


def project_exact(z, y, C: float) -> np.ndarray:
    """Exact Euclidean projection onto {0 <= a <= C, a.y = 0} for +-1 labels.

    The projection is clip(z + lam * y, 0, C) where lam is the root of the
    nondecreasing piecewise-linear map lam -> y . clip(z + lam * y, 0, C);
    the root is located by breakpoint search and linear interpolation.
    Both classes must be present for a root to exist.
    """
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    lower_bp = np.where(y > 0, -z, z - C)
    bps = np.unique(np.concatenate([lower_bp, lower_bp + C]))
    vals = np.clip(z[None, :] + bps[:, None] * y[None, :], 0.0, C) @ y
    k = int(np.searchsorted(vals, 0.0))
    if k == 0:
        lam = bps[0]
    elif k == len(bps):
        lam = bps[-1]
    else:
        v0, v1 = vals[k - 1], vals[k]
        if v1 == v0:
            lam = bps[k - 1]
        else:
            lam = bps[k - 1] - v0 * (bps[k] - bps[k - 1]) / (v1 - v0)
    return np.clip(z + lam * y, 0.0, C)


def convergence_bound(L: float, alpha0, alpha_star, t: int) -> float:
    """Accelerated-method gap bound 8 L ||a0 - a*||^2 / ((t+1)(t+2))."""
    if t < 0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    diff = np.asarray(alpha0, dtype=float) - np.asarray(alpha_star, dtype=float)
    return 8.0 * L * float(diff @ diff) / ((t + 1.0) * (t + 2.0))


def _require_eta(config: SolverConfig) -> float:
    if config.eta is None:
        raise ParameterError(
            "eta is unresolved; run through a training wrapper or set it explicitly"
        )
    return config.eta


def _eta_for_frozen(config: SolverConfig) -> float:
    # The frozen objective uses eta only in the constant tau*eta*n term;
    # with eta unresolved the constant is dropped (plain SVM dual value).
    return config.eta if config.eta is not None else 0.0


def _check_labels(y, require_both_classes: bool) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels must be in {-1, +1}")
    if require_both_classes and (np.all(y == 1.0) or np.all(y == -1.0)):
        raise ParameterError("training labels contain a single class")
    return y


def _check_psd_gram(K) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise DataError(f"kernel matrix must be square, got shape {K.shape}")
    evals = np.linalg.eigvalsh(0.5 * (K + K.T))
    lam_min, lam_max = float(evals[0]), float(evals[-1])
    if lam_min < -1e-8 * max(1.0, lam_max):
        raise DataError(f"kernel matrix is not PSD: lambda_min = {lam_min:.3e}")
    return K


def solve(K, y, config: SolverConfig, freeze_f: bool = False,
          with_equality: bool = True, record_iterates: bool = False):
    """Run the accelerated projected-gradient saddle solver.

    Iterates from a^(0) = 0.  Per iteration computes F(a^(t)) and the
    envelope gradient, takes the projected ascent step theta^(t), the
    weighted dual-averaging step beta^(t), and combines them as
    a^(t+1) = ((t+1) theta + 2 beta) / (t+3).  Stops at t_max or when the
    iterate step drops to ``tol``.

    ``freeze_f`` pins F to the all-one matrix (standard SVM dual; step
    constant ||K||_F).  ``with_equality=False`` drops the hyperplane
    constraint so the projection is a plain box clip (used by the
    block-decomposition mode).  Returns (DualState, F, SolveTrace).

    The feasible-set projection inside the loop is computed exactly
    (:func:`project_exact`): the dual-averaging step projects points far
    outside the feasible set, where the fixed-round alternating scheme of
    :func:`project_feasible` lands measurably away from the true
    projection and stalls convergence.
    """
    K = _check_psd_gram(K)
    y = _check_labels(y, require_both_classes=with_equality)
    n = y.size
    if K.shape[0] != n:
        raise DataError("kernel matrix and labels have inconsistent sizes")
    C, tau = config.C, config.tau

    trace = SolveTrace()
    if tau >= 2 * n:
        trace.warnings.append(
            f"tau = {tau} >= 2n = {2 * n}: the adaptive matrix may collapse to zero"
        )

    if freeze_f:
        L = float(np.linalg.norm(K))
        eta = _eta_for_frozen(config)
    elif config.variant == "pgd":
        L = lipschitz_pgd(n, C, K, _require_eta(config), tau)
        eta = config.eta
    else:
        L = lipschitz_svm(n, C, K, _require_eta(config))
        eta = config.eta

    if with_equality:
        def proj(v):
            return project_exact(v, y, C)
    else:
        def proj(v):
            return np.clip(v, 0.0, C)

    ones_F = np.ones((n, n))
    frozen_spec = np.array([float(n)])

    def evaluate(a):
        """Gradient and objective at a, sharing one factorization."""
        if freeze_f:
            g = 1.0 - y * (K @ (y * a))
            h = _objective_terms(a, y, K, ones_F, frozen_spec, tau, eta)
        else:
            F, spectrum = adaptive_matrix_spectrum(a, y, K, tau, eta)
            g = 1.0 - y * ((F * K) @ (y * a))
            h = _objective_terms(a, y, K, F, spectrum, tau, eta)
        return g, h

    def objective(a):
        return evaluate(a)[1]

    if record_iterates:
        trace.iterates = {"alpha": [], "theta": [], "beta": []}

    a = np.zeros(n)
    a0 = a.copy()
    grad_sum = np.zeros(n)
    beta = None
    theta = None
    h_theta = -np.inf
    moved = False

    for t in range(config.t_max):
        g, h_here = evaluate(a)

        if config.variant == "pgd":
            trace.objective_history.append(h_here)
            a_next = proj(a + g / L)
        else:
            theta_tilde = proj(a + g / L)
            if config.variant == "monotone-nesterov":
                h_tilde = objective(theta_tilde)
                # Carry the stored h(theta) so the sequence is exactly monotone.
                candidates = [(h_tilde, theta_tilde), (h_here, a)]
                if theta is not None:
                    candidates.append((h_theta, theta))
                h_theta, theta = max(candidates, key=lambda c: c[0])
                trace.objective_history.append(h_theta)
            else:
                theta = theta_tilde
                trace.objective_history.append(h_here)
            grad_sum += (t + 1) * g
            # Ascent form of the dual-averaging step; see the solver notes.
            beta = proj(a0 + grad_sum / (2.0 * L))
            a_next = ((t + 1) * theta + 2.0 * beta) / (t + 3.0)

        step = float(np.linalg.norm(a_next - a))
        trace.alpha_step_history.append(step)
        if record_iterates:
            trace.iterates["alpha"].append(a_next.copy())
            if config.variant != "pgd":
                trace.iterates["theta"].append(np.asarray(theta).copy())
                trace.iterates["beta"].append(beta.copy())
        a = a_next
        trace.iterations = t + 1
        # The accelerated warmup can take steps far below tol before the
        # weighted gradient average builds up; only a drop back below tol
        # after real movement counts as convergence.
        moved = moved or step > config.tol
        if moved and step <= config.tol:
            trace.terminated_by = "tolerance"
            break
    else:
        trace.terminated_by = "max_iter"

    if config.variant != "monotone-nesterov":
        trace.objective_history.append(objective(a))
    trace.final_beta = None if beta is None else beta.copy()

    if freeze_f:
        F_final = ones_F
    else:
        F_final, _ = adaptive_matrix_spectrum(a, y, K, tau, eta)
    return DualState(alpha=a, y=y), F_final, trace


def resolve_eta(K, y, config: SolverConfig, with_equality: bool = True) -> SolverConfig:
    """Fill in ``eta`` from a preliminary standard-SVM solve when unset.

    eta defaults to ||alpha||_2^2 of the frozen-F (all-one) solve; when
    that solve returns a zero vector, falls back to 0.1 C^2.
    """
    if config.eta is not None:
        return config
    prelim = replace(config, tau=0.0, eta=None, variant="nesterov")
    state, _, _ = solve(K, y, prelim, freeze_f=True, with_equality=with_equality)
    eta = float(state.alpha @ state.alpha)
    if eta <= 1e-12:
        eta = 0.1 * config.C * config.C
    return replace(config, eta=eta)
