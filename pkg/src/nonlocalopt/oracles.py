"""Independent oracles: finite differences, Monte-Carlo integrals, grid argmin.

These deliberately share no code with the operators they validate; every
dual-route check in the test suite keeps one side here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NodeBudgetError
from .fields import BoxDomain, ScalarField, as_point
from .kernels import RadialKernel
from .quadrature import NODE_BUDGET


def fd_gradient(field: ScalarField, x, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient; needs an interior margin of ``step``."""
    x = as_point(x, field.dim)
    if field.domain.boundary_distance(x) < step:
        raise ValueError(f"point {x} is within {step} of the boundary")
    g = np.empty(field.dim)
    for j in range(field.dim):
        e = np.zeros(field.dim)
        e[j] = step
        g[j] = (field.value(x + e) - field.value(x - e)) / (2.0 * step)
    return g


def fd_hessian(field: ScalarField, x, step: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian (symmetrized four-point stencil)."""
    x = as_point(x, field.dim)
    if field.domain.boundary_distance(x) < 2 * step:
        raise ValueError(f"point {x} is within {2 * step} of the boundary")
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


@dataclass(frozen=True)
class McGradient:
    """Monte-Carlo estimate of the kernel-smoothed gradient with its stderr."""

    value: np.ndarray
    stderr: np.ndarray
    samples: int


def mc_nonlocal_gradient(
    field: ScalarField, x, kernel: RadialKernel, samples: int = 100_000, seed: int = 0
) -> McGradient:
    """Sample-average estimate of the kernel-smoothed gradient.

    Draws offsets from the kernel and averages ``D`` times the difference
    quotient; partner points falling outside the domain contribute zero,
    which matches the domain-restricted integral the quadrature path computes.
    """
    x = as_point(x, field.dim)
    rng = np.random.default_rng(seed)
    h = kernel.sample_batch(rng, samples)
    y = x - h
    inside = field.domain.contains(y)
    r2 = np.sum(h * h, axis=1)
    ok = inside & (r2 > 0)
    contrib = np.zeros((samples, field.dim))
    if np.any(ok):
        diff = field.value(x) - np.asarray(field(y[ok]), dtype=float)
        contrib[ok] = (diff / r2[ok])[:, None] * h[ok]
    contrib *= field.dim
    mean = contrib.mean(axis=0)
    stderr = contrib.std(axis=0, ddof=1) / np.sqrt(samples)
    return McGradient(value=mean, stderr=stderr, samples=samples)


def brute_force_min(
    field: ScalarField, domain: BoxDomain, resolution: int = 1024
) -> tuple[np.ndarray, float]:
    """Grid argmin refined by per-axis golden-section polish within one cell.

    Ties break to the first grid index.
    """
    if resolution**domain.dim > NODE_BUDGET:
        raise NodeBudgetError(
            f"brute-force grid would need {resolution**domain.dim} nodes"
        )
    axes = [
        np.linspace(lo, hi, resolution + 2)[1:-1]
        for lo, hi in zip(domain.lower, domain.upper)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.reshape(-1) for m in mesh], axis=-1)
    vals = np.asarray(field(pts), dtype=float)
    best = int(np.argmin(vals))
    x = pts[best].copy()
    spacing = np.array([ax[1] - ax[0] if ax.size > 1 else 0.0 for ax in axes])

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    for _ in range(3):  # coordinate-descent sweeps within the winning cell
        for j in range(domain.dim):
            if spacing[j] == 0.0:
                continue
            a = max(domain.lower[j] + 1e-12, x[j] - spacing[j])
            b = min(domain.upper[j] - 1e-12, x[j] + spacing[j])

            def phi(t):
                p = x.copy()
                p[j] = t
                return field.value(p)

            c = b - invphi * (b - a)
            d = a + invphi * (b - a)
            fc, fd = phi(c), phi(d)
            while b - a > 1e-10:
                if fc <= fd:
                    b, d, fd = d, c, fc
                    c = b - invphi * (b - a)
                    fc = phi(c)
                else:
                    a, c, fc = c, d, fd
                    d = a + invphi * (b - a)
                    fd = phi(d)
            cand = c if fc <= fd else d
            if phi(cand) <= field.value(x):
                x[j] = cand
    return x, field.value(x)
