"""
HoloML solvers: nonlinear conjugate gradient and ADMM.

Both minimise the Poisson objective of :mod:`src.objective` over the real
n×n specimen and return a :class:`ReconResult` carrying the estimate and a
per-iteration trace. Neither projects X onto nonnegative values; clamping
happens at image export only.
"""

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from src.baselines import wiener_filter
from src.errors import ConfigError, GeometryUnsupportedError, ParameterError
from src.layout import ImageGrid
from src.objective import Problem, nll_and_grad

TRACE_HEADER = "# holoml-trace v1"
TRACE_COLUMNS = ["iter", "objective", "residual", "elapsed_seconds"]
INIT_MODES = ("zeros", "wiener", "given")


@dataclass(frozen=True)
class SolverConfig:
    """
    Solver tuning constants.

    :param max_iters: Iteration cap (both solvers)
    :param grad_tol: CG stops once ‖∇l‖_F falls below this fraction of the
        largest gradient norm seen at a start or restart point
    :param stall_tol: Relative objective decrease below which a CG step counts as stalled
    :param stall_window: Consecutive stalled CG steps that end a CG run
    :param restart_iters: Splitting iterations per CG restart attempt
    :param max_restarts: Accepted CG restarts per run
    :param restart_gain: Relative objective decrease a restart must achieve to be accepted
    :param admm_rho: ADMM penalty ρ (starting value when adaptive)
    :param admm_primal_tol: ADMM stops once ‖U − F(X) − B‖_F / max(1, ‖B‖_F) falls below this
    :param admm_adaptive: Double ρ whenever the primal residual stops shrinking
    :param armijo_c1: Sufficient-decrease constant
    :param backtrack: Step shrink factor per failed trial
    :param initial_step: First trial step of the first line search
    :param max_backtracks: Trials before a line search is declared failed
    :param init_mode: ``zeros``, ``wiener`` (warm start) or ``given``
    :param verbose: Print progress every ``report_every`` iterations
    :param report_every: Progress interval
    """
    max_iters: int = 2000
    grad_tol: float = 1e-7
    stall_tol: float = 1e-13
    stall_window: int = 10
    restart_iters: int = 100
    max_restarts: int = 20
    restart_gain: float = 1e-6
    admm_rho: float = 2.0
    admm_primal_tol: float = 1e-6
    admm_adaptive: bool = True
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 40
    init_mode: str = "zeros"
    verbose: bool = False
    report_every: int = 50

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be at least 1, got {self.max_iters}")
        for name in ("grad_tol", "stall_tol", "restart_gain", "admm_rho", "admm_primal_tol",
                     "armijo_c1", "initial_step"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not self.armijo_c1 < 1:
            raise ConfigError(f"armijo_c1 must be below 1, got {self.armijo_c1}")
        if not 0 < self.backtrack < 1:
            raise ConfigError(f"backtrack must lie in (0, 1), got {self.backtrack}")
        if self.max_backtracks < 1 or self.report_every < 1:
            raise ConfigError("max_backtracks and report_every must be at least 1")
        if self.stall_window < 1 or self.restart_iters < 1:
            raise ConfigError("stall_window and restart_iters must be at least 1")
        if self.max_restarts < 0:
            raise ConfigError(f"max_restarts must be nonnegative, got {self.max_restarts}")
        if self.init_mode not in INIT_MODES:
            raise ConfigError(
                f"init_mode must be one of {', '.join(INIT_MODES)}, got '{self.init_mode}'"
            )


@dataclass(frozen=True)
class TraceRow:
    """One iteration: objective, residual (CG gradient norm or ADMM primal residual), wall time."""
    iter: int
    objective: float
    residual: float
    elapsed: float


@dataclass(frozen=True, eq=False)
class ReconResult:
    """
    Output of one solver run.

    :param x_hat: Reconstruction (unclamped)
    :param trace: Per-iteration rows, iteration 0 is the start point
    :param converged: Whether a tolerance was met
    :param reason: Why the run stopped
    :param method: Solver name
    """
    x_hat: ImageGrid
    trace: List[TraceRow] = field(default_factory=list)
    converged: bool = False
    reason: str = ""
    method: str = ""

    @property
    def iterations(self) -> int:
        return self.trace[-1].iter if self.trace else 0

    @property
    def elapsed(self) -> float:
        return self.trace[-1].elapsed if self.trace else 0.0

    @property
    def objective(self) -> float:
        return self.trace[-1].objective


def initial_estimate(problem: Problem, config: SolverConfig, x0=None) -> np.ndarray:
    """
    Starting point X₀ for either solver.

    :raises ConfigError: For ``given`` without ``x0``
    :raises ParameterError: If ``x0`` is not n×n
    """
    n = problem.n
    if config.init_mode == "given":
        if x0 is None:
            raise ConfigError("init_mode 'given' needs a starting image")
        x0 = np.array(x0, dtype=np.float64)
        if x0.shape != (n, n):
            raise ParameterError(f"Starting image must be {n}×{n}, got {x0.shape}")
        return x0

    if config.init_mode == "wiener":
        try:
            return wiener_filter(problem.measurement, problem.operator.layout).values.copy()
        except GeometryUnsupportedError as e:
            print(f"⚠️  Warning: Wiener warm start unavailable ({e}); starting from zeros")

    return np.zeros((n, n))


def _progress(config: SolverConfig, method: str, row: TraceRow) -> None:
    if config.verbose and row.iter % config.report_every == 0:
        print(f"   🔄 {method} iter {row.iter:5d}  objective={row.objective:.6e}  "
              f"residual={row.residual:.3e}")


def _armijo(
    problem: Problem,
    x: np.ndarray,
    f: float,
    direction: np.ndarray,
    slope: float,
    step: float,
    config: SolverConfig,
) -> Optional[Tuple[float, np.ndarray, float, np.ndarray]]:
    """
    Backtrack from ``step`` until ``l(x + αp) <= l(x) + c1·α·slope``.

    :return: (α, x_new, f_new, field at x_new), or None after max_backtracks
    """
    for _ in range(config.max_backtracks):
        x_try = x + step * direction
        u = problem.field(x_try)
        f_try = problem.nll_from_field(u)
        #: NaN fails the comparison and keeps shrinking
        if f_try <= f + config.armijo_c1 * step * slope:
            return step, x_try, f_try, u
        step *= config.backtrack
    return None


def _stationary(gg: float, g_ref: float, config: SolverConfig) -> bool:
    return bool(np.sqrt(gg) <= config.grad_tol * g_ref)


def _splitting_restart(
    problem: Problem,
    x: np.ndarray,
    f: float,
    budget: int,
    config: SolverConfig,
) -> Optional[Tuple[np.ndarray, float, np.ndarray]]:
    """
    Run up to ``budget`` ADMM iterations from X (V = 0, fixed ρ).

    The U-update sets field magnitudes directly, so field zeros are not
    held in place by the log barrier at |u| = 0. A candidate must lower
    ``f`` by the relative margin ``restart_gain``.

    :return: (x, f, field) of the lowest objective visited, or None if none beat ``f``
    """
    threshold = f - config.restart_gain * max(1.0, abs(f))
    b = problem.reference_field
    fx = problem.operator.forward(x)
    v = np.zeros_like(b)
    best = None
    for _ in range(budget):
        x_try, fx, _, v = admm_step(problem, fx, v, config.admm_rho)
        u = fx + b
        f_try = problem.nll_from_field(u)
        if f_try < threshold and (best is None or f_try < best[1]):
            best = (x_try, f_try, u)
    return best


def solve_cg(problem: Problem, config: SolverConfig = SolverConfig(), x0=None) -> ReconResult:
    """
    HoloML-CG: Polak–Ribière+ nonlinear conjugate gradient with restarts.

    β = max(0, ⟨g', g' − g⟩ / ⟨g, g⟩); the direction restarts at −g whenever
    it is not a descent direction. Each line search starts from the step
    that matched the previous decrease rate and backtracks (Armijo). A
    failed line search retries along −g.

    A CG run ends when the gradient norm drops below ``grad_tol`` times the
    largest norm seen at a start point, when ``stall_window`` accepted steps
    in a row lower the objective by less than ``stall_tol`` (relative), or
    when the line search fails. Each of these triggers a restart attempt:
    ``restart_iters`` splitting iterations from the current point. A point
    lowering the objective by ``restart_gain`` (relative) becomes a new
    start and CG resumes from steepest descent; otherwise the run stops.
    This covers the zero-gradient start of a reference-free layout (u = 0),
    where plain CG would stop at iteration 0. Restart iterations count against ``max_iters``.

    Only the gradient test reports ``converged``.

    :param problem: Data, mask and forward operator
    :type problem: Problem
    :param config: Solver constants
    :type config: SolverConfig
    :param x0: Start for ``init_mode='given'``
    :return: Reconstruction and trace (residual column is ‖∇l‖_F / n)
    :rtype: ReconResult

    :Example:

    >>> result = solve_cg(problem, SolverConfig(max_iters=500))
    >>> result.converged, result.reason
    (True, 'gradient tolerance reached')
    """
    start = time.perf_counter()
    n = problem.n

    x = initial_estimate(problem, config, x0)
    f, g = nll_and_grad(problem, x)
    gg = float(np.sum(g * g))
    g_ref = np.sqrt(gg)
    trace = [TraceRow(0, f, np.sqrt(gg) / n, time.perf_counter() - start)]
    _progress(config, "cg", trace[-1])

    direction = -g
    prev_step: Optional[float] = None
    prev_slope: Optional[float] = None
    stalled = 0
    restarts = 0
    k = 0

    while k < config.max_iters:
        stop = None
        if _stationary(gg, g_ref, config):
            stop = "gradient tolerance reached"
        elif stalled >= config.stall_window:
            stop = "objective stalled"
        else:
            slope = float(np.sum(g * direction))
            steepest = slope >= 0 or prev_step is None
            if slope >= 0:
                direction, slope = -g, -gg
            step0 = config.initial_step if prev_step is None else prev_step * prev_slope / slope

            accepted = _armijo(problem, x, f, direction, slope, step0, config)
            if accepted is None and not steepest:
                print(f"⚠️  Warning: CG line search failed at iteration {k + 1}; "
                      "retrying along steepest descent")
                direction, slope = -g, -gg
                accepted = _armijo(problem, x, f, direction, slope, config.initial_step, config)

            if accepted is None:
                stop = "line search failed"
            else:
                k += 1
                step, x, f_new, u = accepted
                stalled = stalled + 1 if f - f_new <= config.stall_tol * max(1.0, abs(f)) else 0
                f = f_new
                g_new = problem.grad_from_field(u)
                beta = max(0.0, float(np.sum(g_new * (g_new - g))) / gg)

                g = g_new
                gg = float(np.sum(g * g))
                direction = -g + beta * direction
                prev_step, prev_slope = step, slope

                trace.append(TraceRow(k, f, np.sqrt(gg) / n, time.perf_counter() - start))
                _progress(config, "cg", trace[-1])
                continue

        budget = min(config.restart_iters, config.max_iters - k)
        restart = None
        if restarts < config.max_restarts and budget > 0:
            restart = _splitting_restart(problem, x, f, budget, config)
        if restart is None:
            converged, reason = stop == "gradient tolerance reached", stop
            break

        restarts += 1
        k += budget
        x, f, u = restart
        g = problem.grad_from_field(u)
        gg = float(np.sum(g * g))
        g_ref = max(g_ref, np.sqrt(gg))
        direction = -g
        prev_step = prev_slope = None
        stalled = 0
        trace.append(TraceRow(k, f, np.sqrt(gg) / n, time.perf_counter() - start))
        if config.verbose:
            print(f"   🔄 cg restart {restarts} at iter {k}  objective={f:.6e}")
    else:
        converged = _stationary(gg, g_ref, config)
        reason = "gradient tolerance reached" if converged else "max_iters reached"

    #: Armijo steps and accepted restarts never increase l, so the last iterate is the best
    return ReconResult(ImageGrid(x), trace, converged, reason, "cg")


def u_update(c: np.ndarray, data: np.ndarray, measured: np.ndarray, rho: float) -> np.ndarray:
    """
    Closed-form ADMM U-update, pixel by pixel.

    On measured pixels U keeps the phase of C and takes the magnitude γ
    minimising ``γ² − Ỹ log γ² + ρ(γ − |C|)²``::

        γ = [ρ|C| + √(ρ²|C|² + 4(1+ρ)Ỹ)] / (2(1+ρ))

    which reduces to ``√(Ỹ/(1+ρ))`` at C = 0 (phase taken as 1). Blocked
    pixels carry no data term, so U = C there.

    :param c: Complex m1×m2 array ``F(X) + B − V/ρ``
    :param data: Ỹ (m1×m2, nonnegative)
    :param measured: Boolean mask of measured pixels
    :param rho: Penalty ρ > 0
    :return: Complex m1×m2 array U
    :raises ParameterError: If ρ <= 0

    :Example:

    >>> abs(u_update(np.zeros((1, 1)), np.full((1, 1), 4.0), np.ones((1, 1), bool), 1.0))
    array([[1.41421356]])
    """
    if not rho > 0:
        raise ParameterError(f"ADMM penalty must be positive, got {rho}")
    c = np.asarray(c, dtype=np.complex128)
    mag = np.abs(c)
    gamma = (rho * mag + np.sqrt((rho * mag) ** 2 + 4 * (1 + rho) * data)) / (2 * (1 + rho))
    phase = np.divide(c, mag, out=np.ones_like(c), where=mag > 0)
    return np.where(measured, gamma * phase, c)


def x_update(problem: Problem, u: np.ndarray, v: np.ndarray, rho: float) -> np.ndarray:
    """
    ADMM X-update: ``Re F†(U + V/ρ − B)``.

    :Example:

    >>> x = x_update(problem, problem.operator.forward(x0), np.zeros(problem.operator.shape), 2.0)
    >>> np.allclose(x, x0)  # reference-free layout, B = 0
    True
    """
    return problem.operator.adjoint(u + v / rho - problem.reference_field)


def admm_step(
    problem: Problem, fx: np.ndarray, v: np.ndarray, rho: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    One ADMM iteration from F(X) and the (unscaled) dual V.

    :return: (X, F(X), primal residual U − F(X) − B, V) after the update
    """
    b = problem.reference_field
    u = u_update(fx + b - v / rho, problem.data, problem.measured, rho)
    x = x_update(problem, u, v, rho)
    fx = problem.operator.forward(x)
    primal = u - fx - b
    return x, fx, primal, v + rho * primal


#: Adaptive ρ: residual checks are this many iterations apart
RHO_CHECK_EVERY = 50
#: ρ doubles when the residual has not at least halved since the last check
RHO_SHRINK_TARGET = 0.5
#: ρ never exceeds this multiple of its starting value
RHO_MAX_FACTOR = 1e3


def solve_admm(problem: Problem, config: SolverConfig = SolverConfig(), x0=None) -> ReconResult:
    """
    HoloML-ADMM: split U = F(X) + B and alternate closed-form updates.

    Per iteration, with ``C = F(X) + B − V/ρ``:

    1. U ← :func:`u_update` (C, Ỹ, M, ρ)
    2. X ← Re F†(U + V/ρ − B)
    3. V ← V + ρ (U − F(X) − B)

    With ``admm_adaptive`` on, ρ doubles whenever the primal residual fails
    to halve over ``RHO_CHECK_EVERY`` iterations. V is kept unscaled, so it
    stays valid across a change of ρ.

    :param problem: Data, mask and forward operator
    :type problem: Problem
    :param config: Solver constants (ρ, primal tolerance, iteration cap)
    :type config: SolverConfig
    :param x0: Start for ``init_mode='given'``
    :return: Reconstruction and trace (residual column is the relative primal residual)
    :rtype: ReconResult
    """
    start = time.perf_counter()
    rho = config.admm_rho
    b = problem.reference_field
    scale = max(1.0, float(np.linalg.norm(b)))

    x = initial_estimate(problem, config, x0)
    fx = problem.operator.forward(x)
    v = np.zeros_like(b)
    #: No primal residual before the first update
    trace = [TraceRow(0, problem.nll_from_field(fx + b), np.nan, time.perf_counter() - start)]
    _progress(config, "admm", trace[-1])
    converged, reason = False, "max_iters reached"
    checkpoint = np.inf

    for k in range(1, config.max_iters + 1):
        x, fx, primal, v = admm_step(problem, fx, v, rho)

        residual = float(np.linalg.norm(primal)) / scale
        trace.append(TraceRow(k, problem.nll_from_field(fx + b), residual, time.perf_counter() - start))
        _progress(config, "admm", trace[-1])

        if residual <= config.admm_primal_tol:
            converged, reason = True, "primal tolerance reached"
            break
        if config.admm_adaptive and k % RHO_CHECK_EVERY == 0:
            if residual > RHO_SHRINK_TARGET * checkpoint:
                rho = min(2 * rho, RHO_MAX_FACTOR * config.admm_rho)
            checkpoint = residual

    return ReconResult(ImageGrid(x), trace, converged, reason, "admm")


SOLVERS = {"cg": solve_cg, "admm": solve_admm}


def solve(problem: Problem, method: str, config: SolverConfig = SolverConfig(), x0=None) -> ReconResult:
    """
    Run a HoloML solver by name.

    :raises ParameterError: For an unknown method
    """
    try:
        runner = SOLVERS[method]
    except KeyError:
        raise ParameterError(f"Unknown solver '{method}' (expected one of: {', '.join(SOLVERS)})")
    return runner(problem, config, x0)


def write_trace_csv(path: Union[str, Path], result: ReconResult) -> Path:
    """Write the iteration trace under a versioned header comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(f"{TRACE_HEADER}\n")
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for row in result.trace:
            writer.writerow([row.iter, repr(row.objective), repr(row.residual), f"{row.elapsed:.6f}"])
    return path
