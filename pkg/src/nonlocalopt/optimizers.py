"""Descent methods driven by kernel-based operators, plus classical twins.

Four algorithms: fixed-schedule descent on the kernel-smoothed gradient,
the same with exact line search, a stochastic scheme whose sampled directions
are relaxed subgradients in expectation, and a Newton iteration built on the
second-difference kernel Hessian.  ``local_counterpart`` runs the classical
analog with the same trace format for side-by-side comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import RejectionOverflowError, SingularHessianError
from .fields import ScalarField, as_point
from .kernels import RadialKernel
from .operators import (
    CENTRAL,
    HessianVariant,
    OperatorConfig,
    difference_quotient,
    nonlocal_gradient,
    nonlocal_hessian,
)

MAX_ITERS = "max-iters"
GRAD_TOL = "grad-tol"
DIVERGED = "diverged"
LEFT_DOMAIN = "left-domain"

_RESAMPLE_CAP = 1_000_000


@dataclass(frozen=True)
class StepSchedule:
    """Positive step sizes: fixed, an explicit sequence, or a geometric decay.

    ``cap`` bounds the line-search interval ``[0, cap]`` where relevant.
    A geometric schedule with total mass below 1 carries the boundedness
    guarantee for Lipschitz objectives.
    """

    kind: str
    alpha: float = 0.1
    q: float = 0.5
    values: tuple[float, ...] = ()
    cap: float = 1.0

    def __post_init__(self):
        if self.kind not in ("fixed", "sequence", "geometric"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "sequence":
            if not self.values or any(v <= 0 for v in self.values):
                raise ValueError("sequence schedules need positive entries")
        elif self.alpha <= 0:
            raise ValueError("step sizes must be positive")
        if self.kind == "geometric" and not 0 < self.q < 1:
            raise ValueError("geometric decay needs 0 < q < 1")
        if self.cap <= 0:
            raise ValueError("line-search cap must be positive")

    @classmethod
    def fixed(cls, alpha: float) -> "StepSchedule":
        return cls("fixed", alpha=alpha)

    @classmethod
    def sequence(cls, values) -> "StepSchedule":
        return cls("sequence", values=tuple(float(v) for v in values))

    @classmethod
    def geometric(cls, alpha0: float, q: float) -> "StepSchedule":
        return cls("geometric", alpha=alpha0, q=q)

    def step(self, k: int) -> float:
        """Step size for iteration ``k`` (0-based)."""
        if self.kind == "fixed":
            return self.alpha
        if self.kind == "sequence":
            return self.values[min(k, len(self.values) - 1)]
        return self.alpha * self.q**k

    def total(self) -> float:
        """Sum of all steps (infinite-horizon for geometric decay)."""
        if self.kind == "fixed":
            return math.inf
        if self.kind == "sequence":
            return float(sum(self.values))
        return self.alpha / (1.0 - self.q)


@dataclass
class OptimizerTrace:
    """Full iterate history of a run, one row per visited point."""

    iterates: np.ndarray
    objective_values: np.ndarray
    gradient_norms: np.ndarray
    steps_taken: np.ndarray
    termination: str
    offending_point: Optional[np.ndarray] = None

    def __post_init__(self):
        n = self.iterates.shape[0]
        if not (self.objective_values.shape[0] == n == self.gradient_norms.shape[0]):
            raise ValueError("trace arrays must have one entry per iterate")
        if self.steps_taken.shape[0] != max(n - 1, 0):
            raise ValueError("steps must be one shorter than the iterate list")

    @property
    def final_point(self) -> np.ndarray:
        return self.iterates[-1]

    def __len__(self) -> int:
        return self.iterates.shape[0]


class _TraceBuilder:
    def __init__(self, dim: int):
        self.points: list[np.ndarray] = []
        self.values: list[float] = []
        self.norms: list[float] = []
        self.steps: list[float] = []
        self.dim = dim

    def record(self, x, value, gnorm):
        self.points.append(np.array(x, dtype=float))
        self.values.append(float(value))
        self.norms.append(float(gnorm))

    def done(self, termination: str, offending=None) -> OptimizerTrace:
        return OptimizerTrace(
            iterates=np.array(self.points).reshape(len(self.points), self.dim),
            objective_values=np.array(self.values),
            gradient_norms=np.array(self.norms),
            steps_taken=np.array(self.steps),
            termination=termination,
            offending_point=None if offending is None else np.array(offending, dtype=float),
        )


def nlgd_fixed(
    field: ScalarField,
    x0,
    config: OperatorConfig,
    schedule: StepSchedule,
    max_iters: int = 100,
    grad_tol: float = 1e-8,
) -> OptimizerTrace:
    """Descent on the kernel-smoothed gradient with a fixed step schedule.

    The kernel scale stays fixed for the whole run.
    """
    x = as_point(x0, field.dim)
    tb = _TraceBuilder(field.dim)
    for k in range(max_iters + 1):
        g = nonlocal_gradient(field, x, config)
        gnorm = float(np.linalg.norm(g))
        tb.record(x, field.value(x), gnorm)
        if gnorm < grad_tol:
            return tb.done(GRAD_TOL)
        if k == max_iters:
            return tb.done(MAX_ITERS)
        x_next = x - schedule.step(k) * g
        if not field.domain.contains(x_next):
            return tb.done(LEFT_DOMAIN, offending=x_next)
        tb.steps.append(schedule.step(k))
        x = x_next
    return tb.done(MAX_ITERS)


def _golden_section(phi, a: float, b: float, tol: float = 1e-8) -> tuple[float, float]:
    """Golden-section minimum of ``phi`` on ``[a, b]``; returns (alpha, value)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = phi(c), phi(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = phi(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = phi(d)
    alpha = c if fc <= fd else d
    return alpha, min(fc, fd)


def _line_search(field: ScalarField, x: np.ndarray, g: np.ndarray, cap: float) -> float:
    """Grid-seeded golden-section argmin of ``u(x - alpha g)`` over ``[0, cap]``.

    The interval is clipped so candidates stay inside the domain; ties break
    toward the smaller step.
    """
    lo = field.domain.lower_array
    hi = field.domain.upper_array
    alpha_max = cap
    for i in range(field.dim):
        if g[i] > 0:
            alpha_max = min(alpha_max, (x[i] - lo[i]) / g[i])
        elif g[i] < 0:
            alpha_max = min(alpha_max, (x[i] - hi[i]) / g[i])
    alpha_max *= 1.0 - 1e-12
    if alpha_max <= 0:
        return 0.0

    grid = np.linspace(0.0, alpha_max, 64)
    candidates = x[None, :] - grid[:, None] * g[None, :]
    values = np.asarray(field(candidates), dtype=float)
    best = int(np.argmin(values))  # first minimum = smallest alpha on ties

    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, len(grid) - 1)]
    phi = lambda t: field.value(x - t * g)
    refined, refined_val = _golden_section(phi, a, b)
    if refined_val < values[best] or (
        refined_val == values[best] and refined < grid[best]
    ):
        return float(refined)
    return float(grid[best])


def nlgd_linesearch(
    field: ScalarField,
    x0,
    config: OperatorConfig,
    cap: float,
    max_iters: int = 100,
    grad_tol: float = 1e-8,
) -> OptimizerTrace:
    """Kernel-gradient descent with per-step exact line search on ``[0, cap]``."""
    x = as_point(x0, field.dim)
    tb = _TraceBuilder(field.dim)
    for k in range(max_iters + 1):
        g = nonlocal_gradient(field, x, config)
        gnorm = float(np.linalg.norm(g))
        tb.record(x, field.value(x), gnorm)
        if gnorm < grad_tol:
            return tb.done(GRAD_TOL)
        if k == max_iters:
            return tb.done(MAX_ITERS)
        alpha = _line_search(field, x, g, cap)
        x_next = x - alpha * g
        if not field.domain.contains(x_next):
            return tb.done(LEFT_DOMAIN, offending=x_next)
        tb.steps.append(alpha)
        x = x_next
    return tb.done(MAX_ITERS)


@dataclass(frozen=True)
class SgdConfig:
    """Settings for the stochastic relaxed-subgradient scheme.

    The step size is pinned to ``sqrt(B^2 / (M^2 K))``; the expected
    suboptimality after ``K`` averaged iterations is ``B M / sqrt(K)`` plus
    the subgradient relaxation ``epsilon``.
    """

    B: float
    M: float
    K: int
    epsilon: float
    seed: int = 0

    def __post_init__(self):
        if min(self.B, self.M, self.epsilon) <= 0 or self.K <= 0:
            raise ValueError("B, M, K, epsilon must all be positive")

    @property
    def alpha(self) -> float:
        return math.sqrt(self.B**2 / (self.M**2 * self.K))

    @property
    def gap_bound(self) -> float:
        return self.B * self.M / math.sqrt(self.K) + self.epsilon

    @staticmethod
    def required_iterations(B: float, M: float, target_gap: float, epsilon: float) -> int:
        """Iterations sufficient for an expected gap of ``target_gap``."""
        if target_gap <= epsilon:
            raise ValueError("target gap must exceed the relaxation epsilon")
        return math.ceil(B**2 * M**2 / (target_gap - epsilon) ** 2)


def epsilon_sgd(
    field: ScalarField, config: SgdConfig, kernel: RadialKernel
) -> tuple[np.ndarray, OptimizerTrace]:
    """Stochastic descent along sampled difference quotients.

    Starts at the domain center (the scheme's nominal origin mapped into the
    domain).  Each step draws an offset from the kernel, resamples until the
    partner point lands inside the domain, and moves along ``D`` times the
    difference quotient.  Returns the average of the first ``K`` iterates and
    the full trace.
    """
    rng = np.random.default_rng(config.seed)
    center = field.domain.center
    x = center.copy()
    tb = _TraceBuilder(field.dim)
    alpha = config.alpha
    averaged: list[np.ndarray] = []
    termination = MAX_ITERS
    offending = None
    for _ in range(config.K):
        averaged.append(x.copy())
        y = None
        for _ in range(_RESAMPLE_CAP):
            h = kernel.sample(rng)
            cand = x - h
            if field.domain.contains(cand) and float(np.dot(h, h)) > 0.0:
                y = cand
                break
        if y is None:
            raise RejectionOverflowError(
                "could not draw a partner point inside the domain; kernel too wide"
            )
        g = field.dim * difference_quotient(field, x, y)
        gnorm = float(np.linalg.norm(g))
        tb.record(x, field.value(x), gnorm)
        x_next = x - alpha * g
        if float(np.linalg.norm(x_next - center)) > 10.0 * config.B:
            termination = DIVERGED
            offending = x_next
            break
        if not field.domain.contains(x_next):
            termination = LEFT_DOMAIN
            offending = x_next
            break
        tb.steps.append(alpha)
        x = x_next
    else:
        tb.record(x, field.value(x), np.nan)  # final iterate: no direction drawn
    x_bar = np.mean(np.stack(averaged), axis=0)
    return x_bar, tb.done(termination, offending=offending)


@dataclass(frozen=True)
class SubgradientReport:
    """Outcome of probing the relaxed-subgradient inequality."""

    passed: bool
    worst_margin: float
    worst_point: np.ndarray
    epsilon: float
    probes: int


def epsilon_subgradient_check(
    field: ScalarField,
    x,
    config: OperatorConfig,
    probe_points: np.ndarray,
    epsilon: float,
) -> SubgradientReport:
    """Check ``u(y) - u(x) >= (y - x)^T g - epsilon`` at every probe point.

    ``g`` is the kernel-smoothed gradient at ``x``; the report carries the
    worst margin (nonnegative margins mean the inequality held everywhere).
    """
    x = as_point(x, field.dim)
    probes = np.atleast_2d(np.asarray(probe_points, dtype=float))
    g = nonlocal_gradient(field, x, config)
    margins = (
        np.asarray(field(probes), dtype=float)
        - field.value(x)
        - (probes - x) @ g
        + epsilon
    )
    worst = int(np.argmin(margins))
    return SubgradientReport(
        passed=bool(np.all(margins >= 0.0)),
        worst_margin=float(margins[worst]),
        worst_point=probes[worst],
        epsilon=epsilon,
        probes=probes.shape[0],
    )


def nonlocal_newton(
    field: ScalarField,
    x0,
    config: OperatorConfig,
    max_iters: int = 25,
    grad_tol: float = 1e-10,
    beta: float = 1.0,
    constant_mode: str = "moment",
    condition_limit: float = 1e12,
    backtrack: bool = False,
) -> OptimizerTrace:
    """Newton iteration on the kernel gradient and second-difference Hessian.

    The linear solve uses LAPACK partial pivoting and refuses matrices whose
    condition estimate exceeds ``condition_limit``.  By default the step size
    ``beta`` is applied as given, which lets the iterates settle onto the
    smoothed stationary point (the terminal plateau shrinks with the kernel
    scale); ``backtrack=True`` halves the step while the objective would
    increase, which guards descent but stalls short of that point.  Steps
    that would exit the domain are halved in either mode.
    """
    x = as_point(x0, field.dim)
    variant = HessianVariant(CENTRAL, n=config.kernel.scale_index, constant_mode=constant_mode)
    tb = _TraceBuilder(field.dim)
    for k in range(max_iters + 1):
        g = nonlocal_gradient(field, x, config)
        gnorm = float(np.linalg.norm(g))
        tb.record(x, field.value(x), gnorm)
        if gnorm < grad_tol:
            return tb.done(GRAD_TOL)
        if k == max_iters:
            return tb.done(MAX_ITERS)
        H = nonlocal_hessian(field, x, variant, config)
        if not np.all(np.isfinite(H)) or np.linalg.cond(H) > condition_limit:
            raise SingularHessianError(
                f"curvature matrix is singular at iteration {k}", iteration=k
            )
        p = np.linalg.solve(H, g)
        b = beta
        value = field.value(x)
        x_next = x - b * p
        while b > 1e-8 and (
            not field.domain.contains(x_next)
            or (backtrack and field.value(x_next) > value)
        ):
            b *= 0.5
            x_next = x - b * p
        if not field.domain.contains(x_next):
            return tb.done(LEFT_DOMAIN, offending=x_next)
        tb.steps.append(b)
        x = x_next
    return tb.done(MAX_ITERS)


def _fd_gradient_local(field: ScalarField, x: np.ndarray) -> np.ndarray:
    step = 1e-5 * (1.0 + float(np.linalg.norm(x)))
    g = np.empty(field.dim)
    for j in range(field.dim):
        e = np.zeros(field.dim)
        e[j] = step
        g[j] = (field.value(x + e) - field.value(x - e)) / (2.0 * step)
    return g


def _fd_hessian_local(field: ScalarField, x: np.ndarray) -> np.ndarray:
    step = 1e-4 * (1.0 + float(np.linalg.norm(x)))
    D = field.dim
    H = np.empty((D, D))
    for i in range(D):
        for j in range(D):
            ei = np.zeros(D)
            ej = np.zeros(D)
            ei[i] = step
            ej[j] = step
            H[i, j] = (
                field.value(x + ei + ej)
                - field.value(x + ei - ej)
                - field.value(x - ei + ej)
                + field.value(x - ei - ej)
            ) / (4.0 * step * step)
    return 0.5 * (H + H.T)


def local_counterpart(
    field: ScalarField,
    x0,
    method: str,
    schedule: Optional[StepSchedule] = None,
    max_iters: int = 100,
    grad_tol: float = 1e-10,
) -> OptimizerTrace:
    """Classical gradient-descent / line-search / Newton twin of the runs above.

    Uses analytic derivatives when the field declares them and central
    differences otherwise.  Classical methods are not confined to the box
    domain; runs terminate as diverged once the iterate strays ten domain
    diameters from the start.
    """
    if method not in ("gd", "gd-ls", "newton"):
        raise ValueError(f"unknown local method {method!r}")
    x = as_point(x0, field.dim)
    x_start = x.copy()
    grad = field.gradient_at if field.gradient is not None else lambda p: _fd_gradient_local(field, p)
    if method == "newton":
        hess = field.hessian_at if field.hessian is not None else lambda p: _fd_hessian_local(field, p)
    if method == "gd" and schedule is None:
        raise ValueError("gd needs a step schedule")
    cap = schedule.cap if schedule is not None else 1.0
    limit = 10.0 * field.domain.diameter
    tb = _TraceBuilder(field.dim)
    for k in range(max_iters + 1):
        g = np.asarray(grad(x), dtype=float)
        gnorm = float(np.linalg.norm(g))
        tb.record(x, field.value(x), gnorm)
        if gnorm < grad_tol:
            return tb.done(GRAD_TOL)
        if k == max_iters:
            return tb.done(MAX_ITERS)
        if method == "gd":
            alpha = schedule.step(k)
            x_next = x - alpha * g
        elif method == "gd-ls":
            alpha = _line_search(field, x, g, cap)
            x_next = x - alpha * g
        else:
            H = np.asarray(hess(x), dtype=float)
            if np.linalg.cond(H) > 1e12:
                raise SingularHessianError(
                    f"classical curvature matrix is singular at iteration {k}", iteration=k
                )
            alpha = 1.0
            x_next = x - np.linalg.solve(H, g)
        if float(np.linalg.norm(x_next - x_start)) > limit:
            return tb.done(DIVERGED, offending=x_next)
        tb.steps.append(alpha)
        x = x_next
    return tb.done(MAX_ITERS)
