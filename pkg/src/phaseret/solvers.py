"""Classical phase retrieval solvers.

All solvers minimize the intensity loss sum_i (|<a_i, x>|^2 - y_i)^2 for real
signals x, up to the inherent global sign ambiguity. Wirtinger Flow and its
truncated variant share one descent engine; plain WF is the truncated engine
with a window that passes everything, so the two produce bitwise identical
trajectories when the truncated window is inactive.
"""

from __future__ import annotations

import dataclasses
import time

import numpy as np

from .numerics import Array, SeededRng, as_vector, phase_align_to_real, power_iteration
from .sensing import SensingOperator

WF_DEFAULT_ITERS = 50
TWF_DEFAULT_ITERS = 200
RK_DEFAULT_ITERS = 100_000
TWF_DEFAULT_LB = 1e-3
TWF_DEFAULT_UB = 500.0
DEFAULT_MAX_STEP = 0.2
STEP_RAMP_ITERS = 330.0
LOG_POINTS = 500


@dataclasses.dataclass(frozen=True)
class ClassicalConfig:
    """Knobs shared by the gradient-descent solvers.

    ``init`` is "spectral", "random_unit", or an explicit length-n array.
    ``step_size`` is the ramp ceiling mu_max in
    mu_k = min(1 - exp(-k / 330), mu_max).
    """

    k_max: int
    step_size: float = DEFAULT_MAX_STEP
    twf_lb: float = TWF_DEFAULT_LB
    twf_ub: float = TWF_DEFAULT_UB
    rng: SeededRng = SeededRng(0)
    init: str | Array = "spectral"

    def __post_init__(self) -> None:
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        if not (self.step_size > 0.0):
            raise ValueError(f"step_size must be positive, got {self.step_size}")
        if not (self.twf_lb < self.twf_ub):
            raise ValueError(
                f"truncation bounds need twf_lb < twf_ub, got ({self.twf_lb}, {self.twf_ub})"
            )
        if isinstance(self.init, str):
            if self.init not in ("spectral", "random_unit"):
                raise ValueError(f"unknown init {self.init!r}")


@dataclasses.dataclass
class SolverReport:
    """What a solver run produced, plus enough trace to plot convergence."""

    reconstruction: Array
    loss_trace: Array
    logged_iterations: Array
    iterations_run: int
    wall_time_s: float
    extras: dict = dataclasses.field(default_factory=dict)
    phases: dict = dataclasses.field(default_factory=dict)


def _check_measurements(operator: SensingOperator, y: Array) -> Array:
    yv = as_vector(y, "measurements", dtype=np.float64)
    if yv.shape[0] != operator.m:
        raise ValueError(f"got {yv.shape[0]} measurements for an operator with m = {operator.m}")
    if np.any(yv < 0.0):
        raise ValueError("measurements must be non-negative intensities")
    return yv


def intensity_loss(operator: SensingOperator, y: Array, x: Array) -> float:
    """sum_i (|<a_i, x>|^2 - y_i)^2."""
    u = operator.matrix @ as_vector(x)
    return float(np.sum((np.abs(u) ** 2 - np.asarray(y)) ** 2))


def intensity_gradient(operator: SensingOperator, y: Array, x: Array) -> Array:
    """Gradient of the intensity loss restricted to real x.

    g = 4 Re( A^T ((|u|^2 - y) * conj(u)) ) with u = A x. Matches central
    finite differences of :func:`intensity_loss` to first order.
    """
    xv = as_vector(x, dtype=np.float64)
    u = operator.matrix @ xv
    c = np.abs(u) ** 2 - np.asarray(y)
    return 4.0 * np.real(operator.matrix.T @ (c * np.conj(u)))


def spectral_init(
    operator: SensingOperator, y: Array, iters: int = 200, tol: float = 1e-8
) -> Array:
    """Leading-eigenvector initializer.

    Power iteration on M = (1/m) A^H diag(y) A, phase-aligned to the real
    axis and scaled to sqrt(mean y). Deterministic given (A, y) and the
    iteration budget.
    """
    yv = _check_measurements(operator, y)
    if np.all(yv == 0.0):
        raise ValueError("spectral_init needs at least one nonzero measurement")
    a = operator.matrix
    m_mat = (a.conj().T * yv) @ a / operator.m
    _, v = power_iteration(m_mat, iters=iters, tol=tol)
    aligned = phase_align_to_real(v)
    norm = np.linalg.norm(aligned)
    if norm == 0.0:
        raise ValueError("spectral eigenvector collapsed to zero after real projection")
    return float(np.sqrt(yv.mean())) * aligned / norm


def truncation_mask(u: Array, x: Array, lb: float, ub: float) -> Array:
    """Indicator (as float64) of summands inside the truncation window.

    A summand passes when lb <= |u_i| sqrt(n) / ||x|| <= ub. At ||x|| = 0 the
    normalized value is taken as 0, so any lb > 0 excludes everything there.
    """
    n = x.shape[0]
    nx = np.linalg.norm(x)
    if nx == 0.0:
        t = np.zeros(u.shape[0])
    else:
        t = np.abs(u) * np.sqrt(n) / nx
    return ((t >= lb) & (t <= ub)).astype(np.float64)


def _initial_point(operator: SensingOperator, y: Array, cfg: ClassicalConfig) -> Array:
    if isinstance(cfg.init, str):
        if cfg.init == "spectral":
            return spectral_init(operator, y)
        g = cfg.rng.generator()
        v = g.standard_normal(operator.n)
        return v / np.linalg.norm(v)
    x0 = as_vector(cfg.init, "init", dtype=np.float64)
    if x0.shape[0] != operator.n:
        raise ValueError(f"init has length {x0.shape[0]}, operator n = {operator.n}")
    return x0.copy()


def _descend(
    operator: SensingOperator, y: Array, cfg: ClassicalConfig, lb: float, ub: float
) -> SolverReport:
    t0 = time.perf_counter()
    yv = _check_measurements(operator, y)
    x = _initial_point(operator, yv, cfg)
    norm0_sq = float(np.sum(x * x))
    if norm0_sq == 0.0:
        raise ValueError("initialization is the zero vector; the step size is undefined")
    a = operator.matrix
    m = operator.m
    stride = max(1, cfg.k_max // LOG_POINTS)
    losses = [intensity_loss(operator, yv, x)]
    logged = [0]
    for k in range(1, cfg.k_max + 1):
        u = a @ x
        c = np.abs(u) ** 2 - yv
        mask = truncation_mask(u, x, lb, ub)
        grad = 4.0 * np.real(a.T @ ((mask * c) * np.conj(u)))
        mu = min(1.0 - np.exp(-k / STEP_RAMP_ITERS), cfg.step_size)
        x = x - (mu / (4.0 * m * norm0_sq)) * grad
        if k % stride == 0 or k == cfg.k_max:
            losses.append(intensity_loss(operator, yv, x))
            logged.append(k)
    return SolverReport(
        reconstruction=x,
        loss_trace=np.array(losses),
        logged_iterations=np.array(logged),
        iterations_run=cfg.k_max,
        wall_time_s=time.perf_counter() - t0,
    )


def wirtinger_flow(
    operator: SensingOperator, y: Array, cfg: ClassicalConfig | None = None
) -> SolverReport:
    """Gradient descent on the intensity loss with the ramped step schedule.

    x_{k+1} = x_k - (mu_k / (4 m ||x_0||^2)) g(x_k), mu_k ramping from 0 to
    ``step_size`` with time constant 330 iterations.
    """
    if cfg is None:
        cfg = ClassicalConfig(k_max=WF_DEFAULT_ITERS)
    return _descend(operator, y, cfg, lb=0.0, ub=np.inf)


def truncated_wirtinger_flow(
    operator: SensingOperator, y: Array, cfg: ClassicalConfig | None = None
) -> SolverReport:
    """Wirtinger Flow with per-summand truncation.

    Gradient summands whose normalized magnitude |u_i| sqrt(n) / ||x_k||
    falls outside [twf_lb, twf_ub] are dropped for that iteration. With a
    window that passes everything this is bitwise identical to
    :func:`wirtinger_flow`.
    """
    if cfg is None:
        cfg = ClassicalConfig(k_max=TWF_DEFAULT_ITERS)
    return _descend(operator, y, cfg, lb=cfg.twf_lb, ub=cfg.twf_ub)


def randomized_kaczmarz(
    operator: SensingOperator,
    y: Array,
    x0: Array,
    k_max: int = RK_DEFAULT_ITERS,
    rng: SeededRng = SeededRng(0),
    row_weighting: str = "uniform",
) -> SolverReport:
    """Phase retrieval by randomized row projections.

    Each step picks a row r and projects onto the solution set of the single
    equation |<a_r, x>| = sqrt(y_r), resolving the phase with the current
    iterate: x <- x + ((sign(<a_r, x>) sqrt(y_r) - <a_r, x>) / ||a_r||^2) a_r
    with the Hermitian pairing <a, x> = conj(a)^T x and sign(0) := 1. The
    iterate stays complex; the final iterate is phase-aligned and its real
    part returned.

    Row indices are pre-drawn in a single generator call, uniformly by
    default or proportionally to ||a_r||^2 with row_weighting="norm".
    Logged steps record the relative residual of the just-projected equation
    in extras["projection_residuals"].
    """
    t0 = time.perf_counter()
    yv = _check_measurements(operator, y)
    xv = as_vector(x0, "x0")
    if xv.shape[0] != operator.n:
        raise ValueError(f"x0 has length {xv.shape[0]}, operator n = {operator.n}")
    if k_max < 0:
        raise ValueError(f"k_max must be >= 0, got {k_max}")
    if row_weighting not in ("uniform", "norm"):
        raise ValueError(f"unknown row_weighting {row_weighting!r}")

    a = operator.matrix
    norms_sq = operator.row_norms_sq
    sqrt_y = np.sqrt(yv)
    g = rng.generator()
    if k_max > 0:
        if row_weighting == "uniform":
            rows = g.integers(0, operator.m, size=k_max)
        else:
            rows = g.choice(operator.m, size=k_max, p=norms_sq / norms_sq.sum())
    else:
        rows = np.empty(0, dtype=np.int64)

    x = xv.astype(np.complex128)
    stride = max(1, k_max // LOG_POINTS)
    losses = [intensity_loss(operator, yv, x)]
    logged = [0]
    residuals = []
    for k in range(1, k_max + 1):
        r = rows[k - 1]
        row = a[r]
        u = np.vdot(row, x)
        sgn = u / np.abs(u) if u != 0.0 else 1.0
        x = x + ((sgn * sqrt_y[r] - u) / norms_sq[r]) * row
        if k % stride == 0 or k == k_max:
            losses.append(intensity_loss(operator, yv, x))
            logged.append(k)
            u_new = np.vdot(row, x)
            residuals.append(abs(np.abs(u_new) - sqrt_y[r]) / max(sqrt_y[r], 1e-30))
    recon = phase_align_to_real(x)
    return SolverReport(
        reconstruction=recon,
        loss_trace=np.array(losses),
        logged_iterations=np.array(logged),
        iterations_run=k_max,
        wall_time_s=time.perf_counter() - t0,
        extras={"projection_residuals": np.array(residuals)},
    )
