"""Convergence sweeps: run a named check across kernel scale indices.

Each check measures an error that a localization statement predicts should
shrink (or stay within a bound) as the kernel concentrates.  Sweeps record
the error per scale index plus a monotonicity verdict; one inversion below
the quadrature noise floor (1e-9) is tolerated.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .catalog import quadratic_field, sin_field
from .errors import UnknownCheckError
from .fields import BoxDomain, ScalarField
from .kernels import RadialKernel, directional_second_moment, gaussian_kernel
from .operators import (
    CENTRAL,
    HessianVariant,
    OperatorConfig,
    nonlocal_gradient,
    nonlocal_hessian,
)
from .optimizers import (
    SgdConfig,
    StepSchedule,
    epsilon_sgd,
    local_counterpart,
    nlgd_fixed,
    nonlocal_newton,
)

NOISE_FLOOR = 1e-9


def monotone_decreasing(errors: Sequence[float], floor: float = NOISE_FLOOR) -> bool:
    """Strict decrease, tolerating a single inversion below the noise floor."""
    inversions = 0
    for prev, cur in zip(errors, errors[1:]):
        if cur >= prev:
            if cur - prev > floor:
                return False
            inversions += 1
    return inversions <= 1


@dataclass(frozen=True)
class SweepReport:
    """Errors of one named check across the swept parameter values."""

    check: str
    param_values: tuple[int, ...]
    errors: tuple[float, ...]
    locations: tuple[Optional[tuple[float, ...]], ...]
    monotone: bool
    bound: Optional[float] = None
    within_bound: Optional[bool] = None

    def rows(self):
        for p, e, loc in zip(self.param_values, self.errors, self.locations):
            yield p, e, loc


def _probes(settings: dict, default_lo=0.2, default_hi=0.8) -> np.ndarray:
    field: ScalarField = settings["field"]
    count = int(settings.get("probes", 50))
    lo = field.domain.lower_array
    hi = field.domain.upper_array
    span = hi - lo
    t = np.linspace(default_lo, default_hi, count)
    return lo + span * t[:, None]


def _config_for(settings: dict, n: int) -> OperatorConfig:
    kernel: RadialKernel = settings["kernel"].with_scale_index(n)
    return OperatorConfig(
        kernel,
        resolution=int(settings.get("resolution", 512)),
    )


def _check_gradient_localization(n: int, settings: dict):
    field: ScalarField = settings["field"]
    config = _config_for(settings, n)
    probes = _probes(settings)
    worst, where = -1.0, None
    for p in probes:
        err = float(
            np.linalg.norm(nonlocal_gradient(field, p, config) - field.gradient_at(p))
        )
        if err > worst:
            worst, where = err, tuple(p)
    return worst, where


def _check_hessian_localization(n: int, settings: dict):
    field: ScalarField = settings["field"]
    config = _config_for(settings, n)
    probes = _probes(settings, 0.4, 0.6)
    variant = HessianVariant(CENTRAL, n=n)
    worst, where = -1.0, None
    for p in probes:
        H = nonlocal_hessian(field, p, variant, config)
        err = float(np.max(np.abs(H - field.hessian_at(p))))
        if err > worst:
            worst, where = err, tuple(p)
    return worst, where


def _check_taylor_remainder(n: int, settings: dict):
    field: ScalarField = settings["field"]
    config = _config_for(settings, n)
    rng = np.random.default_rng(int(settings.get("seed", 0)))
    pairs = int(settings.get("pairs", 200))
    lo = field.domain.lower_array
    hi = field.domain.upper_array
    span = hi - lo
    base = lo + span * rng.uniform(0.25, 0.75, size=(pairs, field.dim))
    target = lo + span * rng.uniform(0.1, 0.9, size=(pairs, field.dim))
    worst, where = -1.0, None
    for x0, x in zip(base, target):
        g_err = field.gradient_at(x0) - nonlocal_gradient(field, x0, config)
        # r_n - r collapses to the gradient defect paired with the offset.
        val = abs(float(np.dot(x - x0, g_err)))
        if val > worst:
            worst, where = val, tuple(x0)
    return worst, where


def _check_iterate_tracking(n: int, settings: dict):
    field: ScalarField = settings["field"]
    config = _config_for(settings, n)
    schedule: StepSchedule = settings.get("schedule", StepSchedule.geometric(0.3, 0.5))
    x0 = np.asarray(settings.get("x0", field.domain.center), dtype=float)
    steps = int(settings.get("steps", 20))
    classical = local_counterpart(
        field, x0, "gd", schedule, max_iters=steps, grad_tol=0.0
    )
    smoothed = nlgd_fixed(field, x0, config, schedule, max_iters=steps, grad_tol=0.0)
    k = min(len(classical), len(smoothed))
    gaps = np.linalg.norm(classical.iterates[:k] - smoothed.iterates[:k], axis=1)
    worst = int(np.argmax(gaps))
    return float(gaps[worst]), tuple(classical.iterates[worst])


def _check_sgd_bound(n: int, settings: dict):
    field: ScalarField = settings["field"]
    kernel: RadialKernel = settings["kernel"].with_scale_index(n)
    cfg: SgdConfig = settings["sgd"]
    seeds = int(settings.get("seeds", 50))
    minimum = float(settings.get("minimum_value", 0.0))
    gaps = []
    for s in range(seeds):
        x_bar, _ = epsilon_sgd(field, SgdConfig(cfg.B, cfg.M, cfg.K, cfg.epsilon, seed=s), kernel)
        gaps.append(field.value(x_bar) - minimum)
    return float(np.mean(gaps)), None


def _check_newton_floor(n: int, settings: dict):
    field: ScalarField = settings["field"]
    config = _config_for(settings, n)
    x0 = np.asarray(settings.get("x0", field.domain.center), dtype=float)
    x_star = np.asarray(settings["x_star"], dtype=float)
    iters = int(settings.get("steps", 10))
    trace = nonlocal_newton(field, x0, config, max_iters=iters, grad_tol=0.0)
    return float(np.linalg.norm(trace.final_point - x_star)), tuple(trace.final_point)


def _check_moment(n: int, settings: dict):
    kernel: RadialKernel = settings["kernel"].with_scale_index(n)
    domain: BoxDomain = settings["domain"]
    x = np.asarray(settings.get("x", domain.center), dtype=float)
    worst = -1.0
    for axis in range(kernel.dim):
        c = directional_second_moment(kernel, domain, x, axis)
        worst = max(worst, abs(kernel.dim * c - 1.0))
    return worst, tuple(x)


REGISTRY: dict[str, Callable] = {
    "gradient-localization": _check_gradient_localization,
    "hessian-localization": _check_hessian_localization,
    "taylor-remainder": _check_taylor_remainder,
    "iterate-tracking": _check_iterate_tracking,
    "sgd-bound": _check_sgd_bound,
    "newton-floor": _check_newton_floor,
    "moment-c": _check_moment,
}


def default_settings(check: str, domain: Optional[BoxDomain] = None) -> dict:
    """Reasonable settings so every check can run out of the box."""
    domain = domain or BoxDomain.unit(1)
    kernel = gaussian_kernel(domain.dim, 1, 0.1)
    settings: dict = {"domain": domain, "kernel": kernel}
    if check in ("gradient-localization", "taylor-remainder"):
        settings["field"] = sin_field(domain)
    elif check == "hessian-localization":
        from .catalog import bump_field

        settings["field"] = bump_field(domain)
    elif check == "iterate-tracking":
        settings["field"] = quadratic_field(domain)
        settings["x0"] = domain.lower_array + 0.05 * (
            domain.upper_array - domain.lower_array
        )
    elif check == "sgd-bound":
        center = domain.center
        settings["field"] = quadratic_field(domain, center=center)
        settings["sgd"] = SgdConfig(B=1.0, M=2.0, K=100, epsilon=0.02)
        settings["seeds"] = 50
    elif check == "newton-floor":
        from .catalog import quartic_field

        center = domain.center + 0.05 * (domain.upper_array - domain.lower_array)
        settings["field"] = quartic_field(domain, center=center)
        settings["x0"] = domain.center - 0.15 * (domain.upper_array - domain.lower_array)
        settings["x_star"] = center
    return settings


def convergence_sweep(
    check: str,
    n_values: Sequence[int],
    settings: Optional[dict] = None,
    workers: int = 1,
) -> SweepReport:
    """Run a registered check across scale indices and report the errors."""
    if check not in REGISTRY:
        raise UnknownCheckError(
            f"unknown check {check!r}; registered: {sorted(REGISTRY)}"
        )
    settings = settings or {}
    settings = {**default_settings(check, settings.get("domain")), **settings}
    fn = REGISTRY[check]
    n_values = [int(n) for n in n_values]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda n: fn(n, settings), n_values))
    else:
        results = [fn(n, settings) for n in n_values]
    errors = tuple(float(r[0]) for r in results)
    locations = tuple(r[1] for r in results)
    bound = None
    within = None
    if check == "sgd-bound":
        cfg: SgdConfig = settings["sgd"]
        bound = cfg.gap_bound
        within = all(e <= bound for e in errors)
    if check == "moment-c":
        bound = float(settings.get("tolerance", 1e-6))
        within = all(e <= bound for e in errors)
    return SweepReport(
        check=check,
        param_values=tuple(n_values),
        errors=errors,
        locations=locations,
        monotone=monotone_decreasing(errors),
        bound=bound,
        within_bound=within,
    )
