"""Continuous lifts: radicals, root systems, gluing, zero extension, 2-D grids."""

import itertools
import math

import numpy as np
import pytest

from orbitlift import (
    AQPoint,
    Grid,
    LiftedCurve,
    RepresentationSpec,
    SampledGrid2D,
    aq_distance,
    continuous_radical,
    continuous_roots,
    elementary_symmetric,
    extend_through_zeros,
    glue_lifts,
    lift_grid_2d,
    lift_tuple_curve,
    lp_derivative_norm,
    make_sampled_curve,
    read_lift_csv,
    solve_monic_roots,
    split_clusters,
    write_lift_csv,
)
from orbitlift.errors import (
    ClustersNotSeparated,
    CsvFormatError,
    DiscontinuousAtZeroSet,
    LengthMismatch,
    NoReconcilingElement,
    RootSolveFailure,
)

from conftest import TrigPoly, curve_from_fn


def brute_force_min_matching(left, right):
    """Minimum over permutations of the Euclidean pairing cost."""
    q = left.shape[0]
    best = math.inf
    for perm in itertools.permutations(range(q)):
        cost = math.sqrt(
            sum(abs(left[i] - right[perm[i]]) ** 2 for i in range(q))
        )
        best = min(best, cost)
    return best


class TestContinuousRadical:
    def test_nonvanishing_loop(self):
        # g winds twice around the origin; the square root winds once
        t = np.linspace(0.0, 2 * np.pi, 400)
        g = np.exp(2j * t)
        lift = continuous_radical(make_sampled_curve(t, g[:, None]), 2)
        f = lift.branches[0, :, 0]
        assert lift.residual < 1e-12
        assert np.max(np.abs(np.diff(f))) < 0.05  # continuous steps
        assert np.max(np.abs(f**2 - g)) < 1e-12
        assert not lift.budget_exhausted

    def test_starts_on_principal_branch(self):
        t = np.linspace(0.0, 1.0, 50)
        g = np.full_like(t, -4.0) + 0j  # principal square root of -4 is 2i
        lift = continuous_radical(make_sampled_curve(t, g[:, None]), 2)
        assert lift.branches[0, 0, 0] == pytest.approx(2j)

    def test_degree_one_is_identity(self, rng):
        t = np.linspace(0, 1, 20)
        g = rng.normal(size=20) + 1j * rng.normal(size=20)
        lift = continuous_radical(make_sampled_curve(t, g[:, None]), 1)
        assert np.allclose(lift.branches[0, :, 0], g)

    def test_oracle_and_fast_path_agree_off_zero(self):
        t = np.linspace(0.0, 2 * np.pi, 300)
        fn = lambda s: np.exp(2j * s) * (2.0 + np.cos(s))
        g = fn(t)
        c = make_sampled_curve(t, g[:, None])
        fast = continuous_radical(c, 3, oracle=None)
        slow = continuous_radical(c, 3, oracle=fn)
        assert np.max(np.abs(fast.branches - slow.branches)) < 1e-12

    def test_sign_change_through_zero(self):
        # real g crossing zero: |f| = sqrt|g| and f^2 = g throughout
        t = np.linspace(-1.0, 1.0, 501)  # odd count, zero lands on a node
        c = make_sampled_curve(t, t.astype(complex)[:, None])
        lift = continuous_radical(c, 2, oracle=lambda s: s)
        f = lift.branches[0, :, 0]
        t_ref = lift.grid.nodes  # refinement added nodes near the zero
        assert len(t_ref) >= len(t)
        assert np.max(np.abs(f**2 - t_ref)) < 1e-12
        assert not lift.budget_exhausted

    def test_true_discontinuity_exhausts_budget(self):
        # a genuine jump in g can never be resolved by bisection
        fn = lambda s: 1.0 if s < 0.5 else -1.0
        t = np.linspace(0.0, 1.0, 16)
        lift = continuous_radical(curve_from_fn(t, fn), 2, oracle=fn)
        assert lift.budget_exhausted
        assert lift.diagnostics

    def test_no_oracle_flags_ambiguity_without_exhaustion(self):
        fn = lambda s: 1.0 if s < 0.5 else -1.0
        t = np.linspace(0.0, 1.0, 16)
        lift = continuous_radical(curve_from_fn(t, fn), 2, oracle=None)
        assert not lift.budget_exhausted
        assert lift.diagnostics


class TestSolveMonicRoots:
    def test_known_cubic(self):
        roots = solve_monic_roots(elementary_symmetric([1.0, 2.0, 3.0]))
        assert np.allclose(sorted(roots.real), [1.0, 2.0, 3.0], atol=1e-10)
        assert np.allclose(roots.imag, 0.0, atol=1e-10)

    def test_reproduces_evals(self, rng):
        for q in range(1, 7):
            evals = rng.normal(size=q) + 1j * rng.normal(size=q)
            roots = solve_monic_roots(evals)
            back = elementary_symmetric(roots)
            scale = max(1.0, float(np.max(np.abs(evals))))
            assert np.max(np.abs(back - evals)) < 1e-9 * scale

    def test_zero_tolerance_rejected(self, rng):
        evals = rng.normal(size=5) + 1j * rng.normal(size=5)
        with pytest.raises(RootSolveFailure):
            solve_monic_roots(evals, tol=0.0)


class TestContinuousRoots:
    def test_reproduces_invariants(self, rng):
        poly = TrigPoly(rng, n_components=4, max_freq=2)
        t = np.linspace(0.0, 2 * np.pi, 400)
        curve = poly.curve(t)
        lift = continuous_roots(curve, oracle=lambda s: poly(s))
        for i in range(len(t)):
            e = elementary_symmetric(lift.branches[:, i, 0])
            scale = max(1.0, float(np.max(np.abs(curve.values[i]))))
            assert np.max(np.abs(e - curve.values[i])) < 1e-8 * scale

    def test_branches_are_continuous(self, rng):
        poly = TrigPoly(rng, n_components=3, max_freq=2)
        t = np.linspace(0.0, 2 * np.pi, 600)
        lift = continuous_roots(poly.curve(t), oracle=lambda s: poly(s))
        steps = np.abs(np.diff(lift.branches[:, :, 0], axis=1))
        assert float(steps.max()) < 0.25

    def test_matching_is_optimal(self, rng):
        # consecutive assignment must equal the brute-force permutation cost
        poly = TrigPoly(rng, n_components=5, max_freq=2)
        t = np.linspace(0.0, 2 * np.pi, 150)
        lift = continuous_roots(poly.curve(t), oracle=lambda s: poly(s))
        b = lift.branches[:, :, 0]
        for i in rng.choice(b.shape[1] - 1, size=25, replace=False):
            step = math.sqrt(float(np.sum(np.abs(b[:, i + 1] - b[:, i]) ** 2)))
            best = brute_force_min_matching(b[:, i], b[:, i + 1])
            assert step <= best + 1e-9


class TestAqDistance:
    def test_matches_brute_force(self, rng):
        for _ in range(40):
            q = int(rng.integers(1, 6))
            n = int(rng.integers(1, 4))
            a = rng.normal(size=(q, n)) + 1j * rng.normal(size=(q, n))
            b = rng.normal(size=(q, n)) + 1j * rng.normal(size=(q, n))
            got = aq_distance(AQPoint(a), AQPoint(b))
            rows_a, rows_b = AQPoint(a).points, AQPoint(b).points
            best = math.inf
            for perm in itertools.permutations(range(q)):
                cost = math.sqrt(
                    sum(
                        float(np.sum(np.abs(rows_a[i] - rows_b[p]) ** 2))
                        for i, p in enumerate(perm)
                    )
                )
                best = min(best, cost)
            assert got == pytest.approx(best, abs=1e-9)

    def test_zero_iff_equal_multiset(self, rng):
        pts = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
        a = AQPoint(pts)
        b = AQPoint(pts[::-1])
        assert aq_distance(a, b) == 0.0
        c = AQPoint(pts + 0.01)
        assert aq_distance(a, c) > 1e-3

    def test_symmetry(self, rng):
        a = AQPoint(rng.normal(size=(3, 1)) + 1j * rng.normal(size=(3, 1)))
        b = AQPoint(rng.normal(size=(3, 1)) + 1j * rng.normal(size=(3, 1)))
        assert aq_distance(a, b) == pytest.approx(aq_distance(b, a), rel=1e-12)


class TestLiftTupleCurve:
    def test_recovers_smooth_trajectories(self, rng):
        # three smooth point trajectories in C^2, scrambled per node
        polys = [TrigPoly(rng, n_components=2, max_freq=2) for _ in range(3)]
        t = np.linspace(0.0, 2 * np.pi, 300)
        true = np.stack([p(t) for p in polys], axis=0)  # (3, N, 2)
        samples = []
        for i in range(len(t)):
            perm = rng.permutation(3)
            samples.append(AQPoint(true[perm, i, :]))
        lift = lift_tuple_curve(samples, nodes=t)
        assert lift.residual == 0.0
        # each recovered branch follows one true trajectory up to relabeling
        cost = np.zeros((3, 3))
        for bi in range(3):
            for ti in range(3):
                cost[bi, ti] = np.max(np.abs(lift.branches[bi] - true[ti]))
        from scipy.optimize import linear_sum_assignment

        r, c = linear_sum_assignment(cost)
        assert cost[r, c].max() < 1e-9

    def test_branch_continuity(self, rng):
        polys = [TrigPoly(rng, n_components=1, max_freq=2) for _ in range(4)]
        t = np.linspace(0.0, 2 * np.pi, 400)
        samples = [
            AQPoint(np.array([p(float(s)) for p in polys], dtype=complex))
            for s in t
        ]
        lift = lift_tuple_curve(samples, nodes=t)
        steps = np.abs(np.diff(lift.branches, axis=1))
        assert float(steps.max()) < 0.2


class TestExtendThroughZeros:
    def test_norm_matches_bitwise_single_component(self, rng):
        for n in (101, 201, 301, 401, 501):
            # sizes chosen so +-0.5 are grid nodes and the profile vanishes there
            full = Grid(np.linspace(-1.0, 1.0, n))
            t = full.nodes
            keep = np.abs(t) <= 0.5 + 1e-12
            sub_t = t[keep]
            g = (0.25 - sub_t**2) * np.exp(1j * sub_t)
            lift = continuous_radical(make_sampled_curve(sub_t, g[:, None]), 2)
            p = float(rng.uniform(1.0, 1.9))
            _, norm = extend_through_zeros(lift, full, p)
            assert norm == lp_derivative_norm(lift.as_curve(), p).value

    def test_interior_gap_contributes_nothing(self):
        full = Grid(np.linspace(0.0, 10.0, 1001))
        t = full.nodes
        keep = (t <= 3.0) | (t >= 7.0)
        sub_t = t[keep]
        vals = np.where(sub_t <= 3.0, sub_t * (3.0 - sub_t), (sub_t - 7.0) * (10.0 - sub_t))
        lift = continuous_radical(
            make_sampled_curve(sub_t, vals.astype(complex)[:, None]), 1
        )
        ext, norm = extend_through_zeros(lift, full, 1.5)
        # the same norm computed from the extension, skipping bridge cells
        from orbitlift import derivative_samples

        m, w = derivative_samples(lift.as_curve())
        pos = np.searchsorted(full.nodes, sub_t)
        interior = np.diff(pos) == 1
        expected = math.fsum((m[interior] ** 1.5) * w[interior]) ** (1 / 1.5)
        assert norm == expected
        assert ext.grid.nodes.shape == full.nodes.shape
        assert np.all(ext.branches[:, ~np.isin(full.nodes, sub_t), :] == 0)

    def test_large_boundary_value_rejected(self):
        full = Grid(np.linspace(0.0, 1.0, 11))
        sub = Grid(full.nodes[3:7])
        branches = np.ones((1, 4, 1), dtype=complex)
        lift = LiftedCurve(
            grid=sub, branches=branches, residual=0.0,
            refinement_level=0, budget_exhausted=False, diagnostics=(),
        )
        with pytest.raises(DiscontinuousAtZeroSet):
            extend_through_zeros(lift, full, 1.5)

    def test_non_subset_rejected(self):
        full = Grid(np.linspace(0.0, 1.0, 11))
        sub = Grid(np.array([0.05, 0.15]))
        lift = LiftedCurve(
            grid=sub, branches=np.zeros((1, 2, 1), dtype=complex), residual=0.0,
            refinement_level=0, budget_exhausted=False, diagnostics=(),
        )
        with pytest.raises(LengthMismatch):
            extend_through_zeros(lift, full, 1.5)


class TestGlueLifts:
    def test_cyclic_rotation_reconciled(self):
        t_left = np.linspace(0.0, 1.0, 50)
        t_right = np.linspace(1.0, 2.0, 50)
        fn = lambda s: np.exp(2j * np.pi * s) * (2.0 + s)
        spec = RepresentationSpec.cyclic(3)
        left = continuous_radical(curve_from_fn(t_left, fn), 3)
        right = continuous_radical(curve_from_fn(t_right, fn), 3)
        # rotate the right lift to another branch; gluing must undo it
        rot = LiftedCurve(
            grid=right.grid,
            branches=right.branches * np.exp(2j * np.pi / 3),
            residual=right.residual,
            refinement_level=right.refinement_level,
            budget_exhausted=right.budget_exhausted,
            diagnostics=right.diagnostics,
        )
        glued = glue_lifts(left, rot, spec)
        f = glued.branches[0, :, 0]
        assert len(glued.grid) == 99  # shared junction node appears once
        assert np.max(np.abs(np.diff(f))) < 0.5

    def test_irreconcilable_jump_rejected(self):
        spec = RepresentationSpec.cyclic(2)
        t_left = np.linspace(0.0, 1.0, 10)
        t_right = np.linspace(1.0, 2.0, 10)
        left = continuous_radical(curve_from_fn(t_left, lambda s: 1.0 + 0j), 2)
        bad = continuous_radical(curve_from_fn(t_right, lambda s: 9.0 + 0j), 2)
        with pytest.raises(NoReconcilingElement):
            glue_lifts(left, bad, spec)

    def test_junction_grid_mismatch_rejected(self):
        spec = RepresentationSpec.cyclic(2)
        left = continuous_radical(
            curve_from_fn(np.linspace(0, 1, 5), lambda s: 1.0 + 0j), 2
        )
        right = continuous_radical(
            curve_from_fn(np.linspace(1.5, 2, 5), lambda s: 1.0 + 0j), 2
        )
        with pytest.raises(Exception):
            glue_lifts(left, right, spec)


class TestSplitClusters:
    def test_two_clusters_recombine(self, rng):
        t = np.linspace(0.0, 1.0, 60)
        near = np.stack([0.9 + 0.05 * np.sin(t), 1.1 + 0.05 * np.cos(t)], axis=0)
        far = (5.0 + 0.1 * t)[None, :]
        branches = np.concatenate([near, far], axis=0).astype(complex)[:, :, None]
        lift = LiftedCurve(
            grid=Grid(t), branches=branches, residual=0.0,
            refinement_level=0, budget_exhausted=False, diagnostics=(),
        )
        parts = split_clusters(lift, gap=1.5)
        assert sorted(len(p.branch_indices) for p in parts) == [1, 2]
        for part in parts:
            assert part.recombination_residual < 1e-10

    def test_unseparated_rejected(self, rng):
        t = np.linspace(0.0, 1.0, 30)
        branches = np.stack([np.zeros_like(t), 0.4 + 0 * t], axis=0).astype(complex)
        lift = LiftedCurve(
            grid=Grid(t), branches=branches[:, :, None], residual=0.0,
            refinement_level=0, budget_exhausted=False, diagnostics=(),
        )
        with pytest.raises(ClustersNotSeparated):
            split_clusters(lift, gap=1.0)


class TestGrid2d:
    @staticmethod
    def plane_grid(n=41, lo=-1.0, hi=1.0):
        gx = Grid(np.linspace(lo, hi, n))
        gy = Grid(np.linspace(lo, hi, n))
        x = gx.nodes[:, None]
        y = gy.nodes[None, :]
        vals = (x + 1j * y)[:, :, None]
        return gx, gy, vals

    def test_annulus_is_obstructed_with_witness(self):
        gx, gy, vals = self.plane_grid()
        r = np.abs(vals[:, :, 0])
        mask = (r >= 0.3) & (r <= 0.95)
        grid = SampledGrid2D(gx, gy, vals, mask)
        out = lift_grid_2d(grid, RepresentationSpec.cyclic(2))
        assert out.report.status == "obstructed"
        assert out.values is None
        loop = out.report.witness
        assert loop[0] == loop[-1]  # closed
        for a, b in zip(loop, loop[1:]):
            assert abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1  # lattice steps
            assert mask[a] and mask[b]
        # the witness must wind an odd number of times around the origin
        angles = np.array(
            [np.angle(vals[ix, iy, 0]) for ix, iy in loop]
        )
        winding = np.sum(np.diff(np.unwrap(angles))) / (2 * np.pi)
        assert round(abs(winding)) % 2 == 1

    def test_disk_off_origin_is_consistent(self):
        gx, gy, vals = self.plane_grid()
        center = 0.5 + 0.5j
        mask = np.abs(vals[:, :, 0] - center) <= 0.4
        grid = SampledGrid2D(gx, gy, vals, mask)
        out = lift_grid_2d(grid, RepresentationSpec.cyclic(2))
        assert out.report.status == "consistent"
        f = out.values[:, :, 0]
        w = vals[:, :, 0]
        assert np.max(np.abs(f[mask] ** 2 - w[mask])) < 1e-12
        # neighbouring lifted values stay close inside the mask
        dx = np.abs(np.diff(f, axis=0))
        both_x = mask[:-1, :] & mask[1:, :]
        assert float(dx[both_x].max()) < 0.2

    def test_report_json_shape(self):
        gx, gy, vals = self.plane_grid(n=15)
        mask = np.abs(vals[:, :, 0] - (0.5 + 0.5j)) <= 0.3
        out = lift_grid_2d(SampledGrid2D(gx, gy, vals, mask), RepresentationSpec.cyclic(2))
        payload = out.report.to_json()
        assert payload == {"status": "consistent", "witness": None}


class TestLiftCsv:
    def test_round_trip_exact(self, rng):
        t = np.linspace(0.0, 2 * np.pi, 40)
        poly = TrigPoly(rng, n_components=3, max_freq=2)
        lift = continuous_roots(poly.curve(t), oracle=lambda s: poly(s))
        path = "lift.csv"

        import tempfile, os

        with tempfile.TemporaryDirectory() as d:
            p = os.path.join(d, path)
            write_lift_csv(p, lift)
            back = read_lift_csv(p)
        assert np.array_equal(back.grid.nodes, lift.grid.nodes)
        assert np.array_equal(back.branches, lift.branches)

    def test_multi_component_round_trip(self, rng):
        t = np.linspace(0.0, 1.0, 10)
        branches = rng.normal(size=(2, 10, 3)) + 1j * rng.normal(size=(2, 10, 3))
        lift = LiftedCurve(
            grid=Grid(t), branches=branches, residual=0.0,
            refinement_level=0, budget_exhausted=False, diagnostics=(),
        )
        import tempfile, os

        with tempfile.TemporaryDirectory() as d:
            p = os.path.join(d, "lift.csv")
            write_lift_csv(p, lift)
            back = read_lift_csv(p)
        assert np.array_equal(back.branches, lift.branches)

    def test_missing_branch_row_names_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "t,branch,re,im\n0.0,0,1.0,0.0\n0.0,1,1.0,0.0\n1.0,0,1.0,0.0\n"
        )
        with pytest.raises(CsvFormatError):
            read_lift_csv(path)

    def test_duplicate_branch_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text(
            "t,branch,re,im\n0.0,0,1.0,0.0\n0.0,0,2.0,0.0\n1.0,0,1.0,0.0\n1.0,0,1.0,0.0\n"
        )
        with pytest.raises(CsvFormatError):
            read_lift_csv(path)
