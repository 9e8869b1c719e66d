"""Radical selections, admissible windows, derivative bound measurements."""

import numpy as np
import pytest

from orbitlift import (
    check_admissible,
    check_derivative_bounds,
    dominant_index,
    make_sampled_curve,
    maximal_admissible_interval,
    normalized_curve,
    radical_selections,
    slice_selection,
)
from orbitlift.errors import (
    AllZeroAtPoint,
    OrderTooHigh,
    ShapeMismatch,
    VanishingDominant,
)
from orbitlift.reduction import AdmissibleData

from conftest import TrigPoly


def gentle_selection(rng, degrees=(1, 2), n=301, spread=0.05):
    """Nonvanishing curve with small variation: admissible windows are wide."""
    t = np.linspace(0.0, 1.0, n)
    cols = []
    for d in degrees:
        poly = TrigPoly(rng, n_components=1, max_freq=2, scale=spread)
        cols.append((2.0 ** d) * np.exp(poly(t)[:, 0] * 0.2))
    vals = np.stack(cols, axis=1).astype(complex)
    curve = make_sampled_curve(t, vals)
    return radical_selections(curve, degrees)


class TestRadicalSelections:
    def test_selections_power_back_to_base(self, rng):
        poly = TrigPoly(rng, n_components=3, max_freq=2)
        t = np.linspace(0.0, 2 * np.pi, 400)
        vals = poly(t) + 4.0  # keep every component away from zero
        curve = make_sampled_curve(t, vals)
        sel = radical_selections(curve, (1, 2, 3))
        for j, d in enumerate((1, 2, 3)):
            back = sel.selections.values[:, j] ** d
            assert np.max(np.abs(back - curve.values[:, j])) < 1e-10
        assert sel.residual < 1e-10
        assert not sel.budget_exhausted

    def test_degree_count_must_match(self, rng):
        poly = TrigPoly(rng, n_components=2)
        curve = poly.curve(np.linspace(0, 1, 20))
        with pytest.raises(ShapeMismatch):
            radical_selections(curve, (1, 2, 3))

    def test_mass_of_linear_selection(self):
        t = np.linspace(0.0, 1.0, 101)
        curve = make_sampled_curve(t, (2.0 * t + 1.0).astype(complex)[:, None])
        sel = radical_selections(curve, (1,))
        assert sel.mass(0, 100) == pytest.approx(2.0, rel=1e-12)
        assert sel.mass(0, 50) == pytest.approx(1.0, rel=1e-12)


class TestDominantIndex:
    def test_picks_largest_selection(self, rng):
        t = np.linspace(0.0, 1.0, 11)
        vals = np.stack([0.5 + 0 * t, 3.0 + 0 * t], axis=1).astype(complex)
        sel = radical_selections(make_sampled_curve(t, vals), (1, 1))
        assert dominant_index(sel, 5) == 1

    def test_all_zero_rejected(self):
        t = np.linspace(0.0, 1.0, 11)
        vals = np.zeros((11, 2), dtype=complex)
        vals[:5] = 1.0  # keep the lift well defined away from node 7
        sel = radical_selections(make_sampled_curve(t, vals), (1, 1))
        with pytest.raises(AllZeroAtPoint):
            dominant_index(sel, 7)


class TestNormalizedCurve:
    def test_dominant_component_becomes_one(self, rng):
        sel = gentle_selection(rng)
        normal = normalized_curve(sel, 1)
        assert np.allclose(normal.values[:, 1], 1.0)

    def test_invariant_under_homogeneous_rescaling(self, rng):
        poly = TrigPoly(rng, n_components=2, max_freq=2)
        t = np.linspace(0.0, 2 * np.pi, 200)
        vals = poly(t) + 4.0
        degrees = (1, 2)
        base = radical_selections(make_sampled_curve(t, vals), degrees)
        scaled_vals = vals * np.array([2.0**1, 2.0**2])[None, :]
        scaled = radical_selections(make_sampled_curve(t, scaled_vals), degrees)
        a = normalized_curve(base, 0)
        b = normalized_curve(scaled, 0)
        assert np.max(np.abs(a.values - b.values)) < 1e-10

    def test_vanishing_dominant_rejected(self):
        t = np.linspace(-1.0, 1.0, 21)
        vals = t.astype(complex)[:, None]
        sel = radical_selections(make_sampled_curve(t, vals), (1,))
        with pytest.raises(VanishingDominant):
            normalized_curve(sel, 0)


class TestSliceSelection:
    def test_window_fields(self, rng):
        sel = gentle_selection(rng)
        win = slice_selection(sel, 10, 40)
        assert len(win.grid) == 31
        assert np.array_equal(win.grid.nodes, sel.grid.nodes[10:41])
        assert np.array_equal(win.selections.values, sel.selections.values[10:41])


class TestMaximalAdmissibleInterval:
    def test_gentle_curve_fills_the_grid(self, rng):
        sel = gentle_selection(rng, spread=0.01)
        data = maximal_admissible_interval(sel, len(sel.grid) // 2, B=0.25)
        assert data.case == "boundary"
        assert (data.lo, data.hi) == (0, len(sel.grid) - 1)

    def test_steep_curve_stops_early(self):
        t = np.linspace(0.0, 1.0, 2001)
        vals = np.exp(4.0 * t).astype(complex)[:, None]
        sel = radical_selections(make_sampled_curve(t, vals), (1,))
        data = maximal_admissible_interval(sel, 1000, B=0.25)
        assert data.case == "equality"
        assert data.lo > 0 and data.hi < len(t) - 1
        assert data.lo <= data.t0_index <= data.hi

    def test_window_passes_admissibility_checks(self, rng):
        sel = gentle_selection(rng)
        data = maximal_admissible_interval(sel, 17, B=0.25)
        report = check_admissible(data)
        assert report.all_pass, report.first_failure

    def test_vanishing_dominant_rejected(self):
        t = np.linspace(-1.0, 1.0, 21)
        sel = radical_selections(
            make_sampled_curve(t, t.astype(complex)[:, None]), (1,)
        )
        with pytest.raises(VanishingDominant):
            maximal_admissible_interval(sel, 10, k=0)

    def test_rejects_bad_budget(self, rng):
        sel = gentle_selection(rng)
        with pytest.raises(ValueError):
            maximal_admissible_interval(sel, 5, B=0.0)
        with pytest.raises(ValueError):
            maximal_admissible_interval(sel, 5, B=1.0)


def flat_ramp_selection(variation, n=401):
    """Degree (1, 2) data: linear dominant ramp, constant companion.

    The dominant component is linear, so the smoothness weight vanishes
    and the whole budget is spent on the ramp's variation.
    """
    t = np.linspace(0.0, 1.0, n)
    vals = np.stack(
        [1.0 + variation * t, np.full_like(t, 0.01)], axis=1
    ).astype(complex)
    return radical_selections(make_sampled_curve(t, vals), (1, 2))


class TestAdmissibilityNegativeControls:
    def test_budget_beyond_regime_breaks_ratio_bound(self):
        # B = 0.5 admits a variation of one half, pushing the dominant
        # ratio outside (2/3, 4/3); the checks must flag it
        sel = flat_ramp_selection(variation=0.45)
        data = maximal_admissible_interval(sel, 0, k=0, B=0.5)
        assert data.case == "boundary"  # the budget covers the whole ramp
        report = check_admissible(data)
        assert not report.all_pass
        assert report.first_failure == "dominant_ratio"

    def test_violated_precondition_breaks_increment_bound(self):
        # hand-built window whose variation exceeds the claimed budget
        sel = flat_ramp_selection(variation=0.6)
        data = AdmissibleData(
            selection=sel, t0_index=0, k=0, B=0.25, M=0.0,
            lo=0, hi=len(sel.grid) - 1, case="equality",
        )
        report = check_admissible(data)
        assert not report.bounded_increments
        assert report.first_failure == "bounded_increments"
        assert report.margins["max_increment"] > report.margins["increment_bound"]

    def test_admissible_data_validates_fields(self, rng):
        sel = gentle_selection(rng)
        with pytest.raises(ValueError):
            AdmissibleData(
                selection=sel, t0_index=5, k=0, B=1.5, M=0.0, lo=0, hi=10,
                case="equality",
            )
        with pytest.raises(ValueError):
            AdmissibleData(
                selection=sel, t0_index=50, k=0, B=0.25, M=0.0, lo=0, hi=10,
                case="equality",
            )


class TestDerivativeBounds:
    def test_measures_finite_constants(self, rng):
        sel = gentle_selection(rng)
        data = maximal_admissible_interval(sel, len(sel.grid) // 2, B=0.25)
        rep = check_derivative_bounds(data)
        d = max(sel.degrees)
        assert set(rep.per_order.keys()) == set(range(1, d + 1))
        assert rep.measured == max(rep.per_order.values())
        assert all(v >= 0.0 for v in rep.per_order.values())

    def test_window_too_small_rejected(self, rng):
        sel = gentle_selection(rng)
        data = AdmissibleData(
            selection=sel, t0_index=1, k=0, B=0.25, M=0.0, lo=1, hi=2,
            case="equality",
        )
        with pytest.raises(OrderTooHigh):
            check_derivative_bounds(data)
