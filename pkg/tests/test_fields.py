import numpy as np
import pytest
from hypothesis import given, strategies as st

from nonlocalopt import BoxDomain, contains, extend_by_zero
from nonlocalopt.catalog import bump_field, quadratic_field
from nonlocalopt.errors import DimensionMismatchError, MissingDerivativeError
from nonlocalopt.fields import SubsetIndicator


class TestBoxDomain:
    def test_contains_interior(self):
        assert contains(BoxDomain.unit(1), [0.5]) is True

    def test_boundary_excluded(self):
        assert contains(BoxDomain.unit(1), [1.0]) is False

    def test_outside_2d(self):
        assert contains(BoxDomain.unit(2), [0.3, 1.2]) is False

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            contains(BoxDomain.unit(2), [0.3])

    def test_empty_box_rejected(self):
        with pytest.raises(ValueError):
            BoxDomain((0.0,), (0.0,))

    def test_volume(self):
        assert BoxDomain((0.0, 1.0), (2.0, 4.0)).volume == pytest.approx(6.0)

    @given(
        lo=st.floats(-10, 10),
        width=st.floats(0.1, 5),
        frac=st.floats(-0.5, 1.5),
    )
    def test_contains_matches_inequalities(self, lo, width, frac):
        box = BoxDomain.interval(lo, lo + width)
        x = lo + frac * width
        assert contains(box, [x]) == (lo < x < lo + width)


class TestScalarField:
    def test_analytic_gradient_matches_fd(self, fields_1d, fields_2d):
        # Built-in smooth fields: analytic gradient vs central differences at
        # 100 random interior points each.
        rng = np.random.default_rng(7)
        for fields in (fields_1d, fields_2d):
            for name, f in fields.items():
                if f.gradient is None or name == "ridge":
                    continue
                dim = f.dim
                pts = 0.2 + 0.6 * rng.random((100, dim))
                step = 1e-5
                for p in pts:
                    fd = np.array(
                        [
                            (f.value(p + step * e) - f.value(p - step * e)) / (2 * step)
                            for e in np.eye(dim)
                        ]
                    )
                    g = f.gradient_at(p)
                    assert np.linalg.norm(g - fd) <= 1e-6 * (1 + np.linalg.norm(g))

    def test_vectorized_evaluation(self, fields_1d):
        f = fields_1d["quadratic"]
        pts = np.linspace(0.1, 0.9, 7)[:, None]
        batch = f(pts)
        assert batch.shape == (7,)
        assert batch[3] == pytest.approx(f.value(pts[3]))


class TestExtendByZero:
    def test_outside_support_is_zero(self, unit_interval):
        f = extend_by_zero(bump_field(unit_interval, center=[0.5], radius=0.3))
        assert f.value([1.5]) == 0.0  # outside the original domain entirely

    def test_identity_inside(self, unit_interval):
        base = bump_field(unit_interval, center=[0.5], radius=0.3)
        ext = extend_by_zero(base)
        assert ext.value([0.5]) == pytest.approx(base.value([0.5]), abs=1e-15)

    def test_support_boundary_continuous_zero(self, unit_interval):
        base = bump_field(unit_interval, center=[0.5], radius=0.3)
        ext = extend_by_zero(base)
        # Original field already decays to 0 at the support edge.
        assert abs(base.value([0.8])) <= 1e-12
        assert ext.value([0.8]) == 0.0

    def test_idempotent(self, unit_interval):
        base = bump_field(unit_interval, center=[0.5], radius=0.3)
        once = extend_by_zero(base)
        twice = extend_by_zero(once)
        assert twice is once
        probes = np.linspace(-0.5, 1.5, 21)[:, None]
        assert np.array_equal(once(probes), twice(probes))

    def test_requires_declared_support(self, unit_interval):
        f = quadratic_field(unit_interval)
        with pytest.raises(MissingDerivativeError):
            extend_by_zero(f)


class TestSubsetIndicator:
    def test_membership_union(self):
        sub = SubsetIndicator.from_intervals([(0.1, 0.2), (0.6, 0.9)])
        assert sub.membership([0.15]) is True
        assert sub.membership([0.4]) is False
        assert sub.membership([0.7]) is True

    def test_empty_and_full(self, unit_interval):
        assert SubsetIndicator.empty(1).membership([0.5]) is False
        assert SubsetIndicator.full(unit_interval).membership([0.5]) is True

    def test_degenerate_intervals_dropped(self):
        sub = SubsetIndicator.from_intervals([(0.5, 0.5), (0.2, 0.4)])
        assert len(sub.boxes) == 1
