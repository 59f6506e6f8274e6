"""Named test fields with known regularity and exact derivatives.

These are the workhorses of the validation suite: every convergence check and
acceptance criterion runs against fields from this catalog so that errors can
be measured against closed-form references.
"""

from __future__ import annotations

import numpy as np

from .fields import BoxDomain, ScalarField


def constant_field(domain: BoxDomain, value: float = 1.0) -> ScalarField:
    def fn(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], value)

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x)

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (domain.dim, domain.dim))

    return ScalarField(fn, domain, grad, hess, lipschitz=0.0, regularity="Cinf", name="constant")


def linear_field(domain: BoxDomain, coeffs, offset: float = 0.0) -> ScalarField:
    a = np.atleast_1d(np.asarray(coeffs, dtype=float))

    def fn(x):
        return np.asarray(x, dtype=float) @ a + offset

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(a, x.shape).copy()

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (a.size, a.size))

    return ScalarField(
        fn, domain, grad, hess, lipschitz=float(np.linalg.norm(a)), regularity="Cinf", name="linear"
    )


def quadratic_field(
    domain: BoxDomain, matrix=None, center=None, linear=None, name: str = "quadratic"
) -> ScalarField:
    """``u(x) = (x-c)^T A (x-c) + b^T (x-c)`` with analytic derivatives."""
    D = domain.dim
    A = np.eye(D) if matrix is None else np.atleast_2d(np.asarray(matrix, dtype=float))
    c = domain.center if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    b = np.zeros(D) if linear is None else np.atleast_1d(np.asarray(linear, dtype=float))
    S = A + A.T

    def fn(x):
        d = np.asarray(x, dtype=float) - c
        return np.einsum("...i,ij,...j->...", d, A, d) + d @ b

    def grad(x):
        d = np.asarray(x, dtype=float) - c
        return d @ S.T + b

    def hess(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(S, x.shape[:-1] + (D, D)).copy()

    # Lipschitz constant over the box: max |grad| at a corner.
    corners = np.stack(
        np.meshgrid(*zip(domain.lower, domain.upper), indexing="ij"), axis=-1
    ).reshape(-1, D)
    M = float(np.max(np.linalg.norm(grad(corners), axis=1)))
    return ScalarField(fn, domain, grad, hess, lipschitz=M, regularity="Cinf", name=name)


def sin_field(domain: BoxDomain, freq: float = 1.0) -> ScalarField:
    """Product of ``sin(2 pi f x_i)`` across axes."""
    w = 2.0 * np.pi * freq
    D = domain.dim

    def fn(x):
        x = np.asarray(x, dtype=float)
        return np.prod(np.sin(w * x), axis=-1)

    def grad(x):
        x = np.asarray(x, dtype=float)
        s = np.sin(w * x)
        out = np.empty_like(x)
        for j in range(D):
            others = np.prod(np.delete(s, j, axis=-1), axis=-1) if D > 1 else 1.0
            out[..., j] = w * np.cos(w * x[..., j]) * others
        return out

    def hess(x):
        x = np.asarray(x, dtype=float)
        s = np.sin(w * x)
        cs = np.cos(w * x)
        H = np.empty(x.shape[:-1] + (D, D))
        for i in range(D):
            for j in range(D):
                rest_axes = [k for k in range(D) if k not in (i, j)]
                rest = np.prod(s[..., rest_axes], axis=-1) if rest_axes else 1.0
                if i == j:
                    H[..., i, j] = -(w**2) * s[..., i] * rest
                else:
                    H[..., i, j] = w**2 * cs[..., i] * cs[..., j] * rest
        return H

    M = float(w * np.sqrt(D))
    return ScalarField(fn, domain, grad, hess, lipschitz=M, regularity="Cinf", name="sin")


def quartic_field(
    domain: BoxDomain,
    center=None,
    a: float = 1.0,
    b3: float = 0.5,
    b4: float = 1.0,
    name: str = "quartic",
) -> ScalarField:
    """Separable quadratic with cubic/quartic perturbations, minimized at ``center``.

    The cubic term makes the minimizer asymmetric, which keeps kernel-smoothed
    gradients honestly nonzero at the true minimizer.
    """
    c = domain.center if center is None else np.atleast_1d(np.asarray(center, dtype=float))

    def fn(x):
        d = np.asarray(x, dtype=float) - c
        return np.sum(0.5 * a * d**2 + b3 * d**3 + b4 * d**4, axis=-1)

    def grad(x):
        d = np.asarray(x, dtype=float) - c
        return a * d + 3.0 * b3 * d**2 + 4.0 * b4 * d**3

    def hess(x):
        d = np.asarray(x, dtype=float) - c
        diag = a + 6.0 * b3 * d + 12.0 * b4 * d**2
        H = np.zeros(d.shape[:-1] + (d.shape[-1], d.shape[-1]))
        idx = np.arange(d.shape[-1])
        H[..., idx, idx] = diag
        return H

    corners = np.stack(
        np.meshgrid(*zip(domain.lower, domain.upper), indexing="ij"), axis=-1
    ).reshape(-1, domain.dim)
    M = float(np.max(np.linalg.norm(grad(corners), axis=1)))
    return ScalarField(fn, domain, grad, hess, lipschitz=M, regularity="Cinf", name=name)


def asymmetric_min_field(domain: BoxDomain, center=None, skew: float = 0.3) -> ScalarField:
    """1-D ``(x-c)^2 + skew (x-c)^3``: a strict local minimum with uneven sides."""
    if domain.dim != 1:
        raise ValueError("asymmetric-min field is 1-D")
    c = float(domain.center[0]) if center is None else float(center)

    def fn(x):
        d = np.asarray(x, dtype=float)[..., 0] - c
        return d**2 + skew * d**3

    def grad(x):
        d = np.asarray(x, dtype=float)[..., 0] - c
        return (2.0 * d + 3.0 * skew * d**2)[..., None]

    def hess(x):
        d = np.asarray(x, dtype=float)[..., 0] - c
        return (2.0 + 6.0 * skew * d)[..., None, None]

    lo, hi = domain.lower[0], domain.upper[0]
    M = max(abs(2 * (v - c) + 3 * skew * (v - c) ** 2) for v in (lo, hi))
    return ScalarField(fn, domain, grad, hess, lipschitz=M, regularity="Cinf", name="asymmetric-min")


def ridge_field(domain: BoxDomain, center=None, slope: float = 1.0) -> ScalarField:
    """Nonsmooth cone ``M |x - c|``: Lipschitz with constant ``slope``."""
    c = domain.center if center is None else np.atleast_1d(np.asarray(center, dtype=float))

    def fn(x):
        d = np.asarray(x, dtype=float) - c
        return slope * np.linalg.norm(d, axis=-1)

    return ScalarField(
        fn, domain, lipschitz=float(slope), regularity="C0-lipschitz", name="ridge"
    )


def bump_field(
    domain: BoxDomain, center=None, radius: float = 0.25, amplitude: float = 1.0
) -> ScalarField:
    """Smooth compactly supported hill: ``A exp(1 - 1/(1 - |x-c|^2/r^2))``.

    Infinitely differentiable with support box strictly inside the domain.
    """
    c = domain.center if center is None else np.atleast_1d(np.asarray(center, dtype=float))
    r = float(radius)
    support = BoxDomain(tuple(c - r), tuple(c + r))
    if not (
        np.all(support.lower_array > domain.lower_array)
        and np.all(support.upper_array < domain.upper_array)
    ):
        raise ValueError("bump support must sit strictly inside the domain")

    def fn(x):
        d = (np.asarray(x, dtype=float) - c) / r
        v2 = np.sum(d * d, axis=-1)
        out = np.zeros_like(v2)
        inside = v2 < 1.0
        out[inside] = amplitude * np.exp(1.0 - 1.0 / (1.0 - v2[inside]))
        return out

    def grad(x):
        x = np.asarray(x, dtype=float)
        d = (x - c) / r
        v2 = np.sum(d * d, axis=-1)
        out = np.zeros_like(x)
        inside = v2 < 1.0
        g = 1.0 - v2[inside]
        factor = amplitude * np.exp(1.0 - 1.0 / g) * (-2.0 / (g * g)) / (r * r)
        out[inside] = factor[..., None] * (x[inside] - c)
        return out

    def hess(x):
        # with s = |x-c|^2/r^2 and phi(s) = exp(1 - 1/(1-s)):
        #   dphi/ds   = -phi / (1-s)^2
        #   d2phi/ds2 = phi [ (1-s)^-4 - 2 (1-s)^-3 ]
        x = np.asarray(x, dtype=float)
        D = x.shape[-1]
        d = x - c
        s = np.sum(d * d, axis=-1) / (r * r)
        H = np.zeros(x.shape[:-1] + (D, D))
        inside = s < 1.0
        g = 1.0 - s[inside]
        phi = amplitude * np.exp(1.0 - 1.0 / g)
        phi1 = -phi / (g * g)
        phi2 = phi * (g**-4 - 2.0 * g**-3)
        di = d[inside]
        outer = np.einsum("...i,...j->...ij", di, di)
        eye = np.eye(D)
        H[inside] = (
            phi2[..., None, None] * 4.0 * outer / r**4
            + phi1[..., None, None] * 2.0 * eye / r**2
        )
        return H

    # Peak slope of the unit bump profile, scaled by amplitude / radius.
    vv = np.linspace(0.0, 0.999, 4001)
    gg = 1.0 - vv * vv
    M = float(amplitude / r * np.max(np.exp(1.0 - 1.0 / gg) * 2.0 * vv / (gg * gg)))
    return ScalarField(
        fn,
        domain,
        grad,
        hess,
        lipschitz=M,
        support=support,
        regularity="Cinf-compact",
        name="bump",
    )


def catalog(domain: BoxDomain) -> dict[str, ScalarField]:
    """All named test fields instantiated on the given domain."""
    D = domain.dim
    indefinite = -np.eye(D)
    if D > 1:
        indefinite = np.diag([1.0] + [-1.0] * (D - 1))
    side = float(np.min(domain.upper_array - domain.lower_array))
    fields = {
        "constant": constant_field(domain, 1.0),
        "linear": linear_field(domain, np.arange(1, D + 1, dtype=float)),
        "quadratic": quadratic_field(domain),
        "quadratic-indefinite": quadratic_field(
            domain, matrix=indefinite, name="quadratic-indefinite"
        ),
        "sin": sin_field(domain),
        "quartic": quartic_field(domain),
        "ridge": ridge_field(domain),
        "bump": bump_field(domain, radius=0.25 * side),
    }
    if D == 1:
        fields["asymmetric-min"] = asymmetric_min_field(domain)
    return fields
