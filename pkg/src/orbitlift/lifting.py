"""Continuous lifts of sampled invariant curves and grids.

A lift is a per-node choice of preimage under the invariant map, tracked
so that consecutive choices stay on the same branch.  Branch ambiguity is
resolved by nearest-candidate selection with an explicit safety margin;
cells where the margin fails are bisected through the value oracle up to
a refinement budget.  Any continuous choice is a valid lift, so the
margin guards discretisation, not correctness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import AQPoint, Grid, RepresentationSpec, SampledCurve, SampledGrid2D
from .errors import (
    DiscontinuousAtZeroSet,
    LengthMismatch,
    NoReconcilingElement,
    RootSolveFailure,
    ShapeMismatch,
)
from .invariants import elementary_symmetric

__all__ = [
    "LiftedCurve",
    "MonodromyReport",
    "GridLift",
    "continuous_radical",
    "continuous_roots",
    "lift_tuple_curve",
    "aq_distance",
    "extend_through_zeros",
    "glue_lifts",
    "lift_grid_2d",
    "write_lift_csv",
    "read_lift_csv",
]

ZERO_TOL = 1e-12
RADICAL_MAX_DEPTH = 40
ROOTS_MAX_DEPTH = 20


@dataclass(frozen=True)
class LiftedCurve:
    """Branches of a continuous lift over a (possibly refined) grid.

    branches has shape (n_branches, n_nodes, n_point_components); the
    residual is the largest deviation of the invariant map applied to the
    branches from the input samples.  budget_exhausted marks lifts where
    an ambiguous cell could not be resolved within the refinement budget
    (the values are still a valid nearest-candidate continuation).
    """

    grid: Grid
    branches: np.ndarray
    residual: float
    refinement_level: int = 0
    budget_exhausted: bool = False
    diagnostics: tuple[str, ...] = ()

    def __post_init__(self):
        arr = np.array(self.branches, dtype=complex)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[1] != len(self.grid):
            raise LengthMismatch("branches must be (B, n_nodes, C)")
        arr.setflags(write=False)
        object.__setattr__(self, "branches", arr)

    @property
    def n_branches(self) -> int:
        return int(self.branches.shape[0])

    def as_curve(self) -> SampledCurve:
        """All branch components flattened into one vector-valued curve."""
        b, n, c = self.branches.shape
        return SampledCurve(self.grid, self.branches.transpose(1, 0, 2).reshape(n, b * c))

    def branch(self, b: int) -> SampledCurve:
        return SampledCurve(self.grid, self.branches[b])


@dataclass(frozen=True)
class MonodromyReport:
    """Outcome of the consistency check of a 2-D lift."""

    status: str  # "consistent" | "obstructed"
    witness: tuple[tuple[int, int], ...] | None = None

    def to_json(self) -> dict:
        payload: dict = {"status": self.status}
        if self.witness is not None:
            payload["witness"] = [{"ix": int(ix), "iy": int(iy)} for ix, iy in self.witness]
        else:
            payload["witness"] = None
        return payload


@dataclass(frozen=True)
class GridLift:
    """2-D lift values (None when obstructed) plus the monodromy report."""

    values: np.ndarray | None
    report: MonodromyReport
    diagnostics: tuple[str, ...] = ()


def _principal_root(w: complex, d: int) -> complex:
    """d-th root with argument in [0, 2*pi/d)."""
    if d == 1 or w == 0:
        return complex(w) if d == 1 else 0.0j
    theta = math.atan2(w.imag, w.real) % (2.0 * math.pi)
    return abs(w) ** (1.0 / d) * complex(math.cos(theta / d), math.sin(theta / d))


def _all_roots(w: complex, d: int) -> np.ndarray:
    if w == 0:
        return np.zeros(1, dtype=complex)
    base = _principal_root(w, d)
    ks = np.arange(d)
    return base * np.exp(2j * np.pi * ks / d)


def continuous_radical(
    g: SampledCurve,
    d: int,
    oracle: Callable[[float], complex] | None = None,
    *,
    max_depth: int = RADICAL_MAX_DEPTH,
    zero_tol: float = ZERO_TOL,
) -> LiftedCurve:
    """Continuous d-th root of a scalar curve.

    The first node gets the principal root; every later node gets the
    root nearest to the previous value.  A step is ambiguous when the
    nearest root is farther from the previous value than half the spacing
    of adjacent roots at the previous magnitude, |f_prev| * sin(pi/d);
    ambiguous cells are bisected through the oracle up to max_depth.
    Near a zero of g (|g| below zero_tol) all roots coincide within
    tolerance and any of them is accepted.
    """
    if g.n_components != 1:
        raise ShapeMismatch("continuous_radical expects a scalar curve")
    d = int(d)
    if d < 1:
        raise ValueError("radical degree must be a positive integer")
    t_in = g.grid.nodes
    w_in = g.values[:, 0]
    sin_margin = math.sin(math.pi / d) if d > 1 else 0.0

    if oracle is None and d > 1:
        # Nearest-root continuation without refinement is phase unwrapping
        # of the principal root angle with period 2 pi / d, since for fixed
        # magnitudes the complex-nearest candidate is the angle-nearest one.
        mag = np.abs(w_in) ** (1.0 / d)
        psi = np.unwrap(np.angle(w_in) / d, period=2.0 * math.pi / d)
        # rotate so the first node carries the principal root, arg in [0, 2pi/d)
        psi += (np.angle(w_in[0]) % (2.0 * math.pi)) / d - psi[0]
        f = mag * np.exp(1j * psi)
        jump = np.abs(np.diff(f))
        ambiguous = (jump > np.abs(f[:-1]) * sin_margin) & (np.abs(w_in[1:]) >= zero_tol)
        diags = tuple(
            f"ambiguous branch at t={float(t_in[i + 1])!r}; no oracle to bisect with"
            for i in np.flatnonzero(ambiguous)
        )
        return LiftedCurve(
            grid=g.grid,
            branches=f[None, :, None],
            residual=float(np.max(np.abs(f**d - w_in))),
            refinement_level=0,
            budget_exhausted=False,
            diagnostics=diags,
        )

    out_t: list[float] = [float(t_in[0])]
    out_w: list[complex] = [complex(w_in[0])]
    out_f: list[complex] = [_principal_root(complex(w_in[0]), d)]
    diagnostics: list[str] = []
    state = {"depth": 0, "exhausted": False}

    def accept(t1: float, w1: complex, r: complex, depth: int) -> None:
        out_t.append(t1)
        out_w.append(w1)
        out_f.append(r)
        state["depth"] = max(state["depth"], depth)

    def step(t0: float, f0: complex, t1: float, w1: complex, depth: int) -> None:
        cands = _all_roots(w1, d)
        dist = np.abs(cands - f0)
        j = int(np.argmin(dist))
        r = complex(cands[j])
        if d == 1 or abs(w1) < zero_tol or dist[j] <= abs(f0) * sin_margin:
            accept(t1, w1, r, depth)
            return
        tm = 0.5 * (t0 + t1)
        if oracle is not None and depth < max_depth and t0 < tm < t1:
            wm = complex(oracle(tm))
            step(t0, f0, tm, wm, depth + 1)
            step(tm, out_f[-1], t1, w1, depth + 1)
            return
        if oracle is not None and depth >= max_depth:
            state["exhausted"] = True
            diagnostics.append(
                f"ambiguous branch at t={t1!r} after depth {depth}; "
                "g is under-sampled near one of its zeros"
            )
        else:
            diagnostics.append(f"ambiguous branch at t={t1!r}; no oracle to bisect with")
        accept(t1, w1, r, depth)

    for i in range(1, t_in.size):
        step(out_t[-1], out_f[-1], float(t_in[i]), complex(w_in[i]), 0)

    f = np.asarray(out_f, dtype=complex)
    w = np.asarray(out_w, dtype=complex)
    residual = float(np.max(np.abs(f**d - w)))
    return LiftedCurve(
        grid=Grid(np.asarray(out_t)),
        branches=f[None, :, None],
        residual=residual,
        refinement_level=state["depth"],
        budget_exhausted=state["exhausted"],
        diagnostics=tuple(diagnostics),
    )


def _coeffs_from_elementary(evals: np.ndarray) -> np.ndarray:
    """Monic coefficients of prod (X - r_i) given e_1..e_Q of the roots."""
    q = evals.size
    coeffs = np.empty(q + 1, dtype=complex)
    coeffs[0] = 1.0
    sign = -1.0
    for i in range(1, q + 1):
        coeffs[i] = sign * evals[i - 1]
        sign = -sign
    return coeffs


def solve_monic_roots(evals: Sequence[complex] | np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Root multiset whose elementary symmetric functions are evals.

    Companion-matrix eigenvalues plus a guarded Newton polish; the
    contract is the residual bound on the recombined e-values.
    """
    evals = np.asarray(evals, dtype=complex).ravel()
    q = evals.size
    if q == 1:
        return evals.copy()
    coeffs = _coeffs_from_elementary(evals)
    roots = np.roots(coeffs)
    dcoeffs = np.polyder(coeffs)
    for _ in range(2):
        p = np.polyval(coeffs, roots)
        dp = np.polyval(dcoeffs, roots)
        ok = np.abs(dp) > 1e-300
        stepped = np.where(ok, roots - np.where(ok, p, 0) / np.where(ok, dp, 1), roots)
        better = np.abs(np.polyval(coeffs, stepped)) < np.abs(p)
        roots = np.where(better, stepped, roots)
    scale = max(1.0, float(np.max(np.abs(evals))))
    residual = float(np.max(np.abs(elementary_symmetric(roots) - evals)))
    if residual > tol * scale:
        raise RootSolveFailure(
            f"root residual {residual:.3e} exceeds {tol:.1e} * scale {scale:.3e}"
        )
    return roots


def _match_to(prev: np.ndarray, roots: np.ndarray) -> tuple[np.ndarray, float]:
    """Reorder roots by the min-cost assignment against prev; squared cost."""
    cost = np.abs(prev[:, None] - roots[None, :]) ** 2
    rows, cols = linear_sum_assignment(cost)
    return roots[cols], float(cost[rows, cols].sum())


def continuous_roots(
    a: SampledCurve,
    oracle: Callable[[float], Sequence[complex]] | None = None,
    *,
    max_depth: int = ROOTS_MAX_DEPTH,
) -> LiftedCurve:
    """Continuous root branches of a coefficient curve.

    The components of a are read as the elementary symmetric values
    (e_1..e_Q) of the wanted branches.  Per node, the root multiset is
    solved; consecutive multisets are matched by a min-cost assignment
    under squared Euclidean distance.  A step whose matched cost exceeds
    (10 h)^(2/Q), the continuity budget for a Hoelder-1/Q branch system,
    is bisected through the oracle up to max_depth.
    """
    q = a.n_components
    t_in = a.grid.nodes
    e_in = a.values
    exponent = 2.0 / q

    first = solve_monic_roots(e_in[0])
    first = first[np.lexsort((first.imag, first.real))]

    out_t: list[float] = [float(t_in[0])]
    out_e: list[np.ndarray] = [e_in[0].copy()]
    out_r: list[np.ndarray] = [first]
    diagnostics: list[str] = []
    state = {"depth": 0, "exhausted": False}

    def accept(t1: float, e1: np.ndarray, r: np.ndarray, depth: int) -> None:
        out_t.append(t1)
        out_e.append(e1)
        out_r.append(r)
        state["depth"] = max(state["depth"], depth)

    def step(t0: float, r0: np.ndarray, t1: float, e1: np.ndarray, depth: int) -> None:
        matched, cost = _match_to(r0, solve_monic_roots(e1))
        budget = (10.0 * (t1 - t0)) ** exponent
        if cost <= budget:
            accept(t1, e1, matched, depth)
            return
        tm = 0.5 * (t0 + t1)
        if oracle is not None and depth < max_depth and t0 < tm < t1:
            em = np.asarray(oracle(tm), dtype=complex).ravel()
            if em.size != q:
                raise ShapeMismatch(f"oracle returned {em.size} values, expected {q}")
            step(t0, r0, tm, em, depth + 1)
            step(tm, out_r[-1], t1, e1, depth + 1)
            return
        if oracle is not None and depth >= max_depth:
            state["exhausted"] = True
            diagnostics.append(
                f"matched cost {cost:.3e} above budget {budget:.3e} at t={t1!r} "
                f"after depth {depth}"
            )
        else:
            diagnostics.append(f"matched cost above budget at t={t1!r}; no oracle")
        accept(t1, e1, matched, depth)

    for i in range(1, t_in.size):
        step(out_t[-1], out_r[-1], float(t_in[i]), e_in[i].copy(), 0)

    branches = np.stack(out_r, axis=1)  # (Q, N)
    evals = np.stack(out_e, axis=0)  # (N, Q)
    recombined = np.stack([elementary_symmetric(branches[:, i]) for i in range(branches.shape[1])])
    residual = float(np.max(np.abs(recombined - evals)))
    return LiftedCurve(
        grid=Grid(np.asarray(out_t)),
        branches=branches[:, :, None],
        residual=residual,
        refinement_level=state["depth"],
        budget_exhausted=state["exhausted"],
        diagnostics=tuple(diagnostics),
    )


def aq_distance(p: AQPoint, q: AQPoint) -> float:
    """Distance between unordered tuples: min over bijections of the
    root-sum-of-squares of pointwise Euclidean distances."""
    if p.points.shape != q.points.shape:
        raise ShapeMismatch("tuples must have the same size and dimension")
    cost = np.sum(np.abs(p.points[:, None, :] - q.points[None, :, :]) ** 2, axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(math.sqrt(cost[rows, cols].sum()))


def lift_tuple_curve(
    samples: Sequence[AQPoint],
    nodes: Sequence[float] | np.ndarray | None = None,
) -> LiftedCurve:
    """Branch curves through a sequence of unordered tuples.

    The first tuple is taken in canonical order, then every consecutive
    pair is matched by the min-cost assignment, chaining the optimal
    matchings greedily.
    """
    if len(samples) < 2:
        raise LengthMismatch("need at least two tuple samples")
    shape = samples[0].points.shape
    for s in samples[1:]:
        if s.points.shape != shape:
            raise ShapeMismatch("tuples must share size and dimension")
    if nodes is None:
        nodes = np.arange(len(samples), dtype=float)
    grid = Grid(np.asarray(nodes, dtype=float))
    if len(grid) != len(samples):
        raise LengthMismatch("one node per tuple required")

    ordered = [samples[0].points]
    for s in samples[1:]:
        prev = ordered[-1]
        cost = np.sum(np.abs(prev[:, None, :] - s.points[None, :, :]) ** 2, axis=2)
        rows, cols = linear_sum_assignment(cost)
        ordered.append(s.points[cols])
    branches = np.stack(ordered, axis=1)  # (Q, N, n)
    return LiftedCurve(grid=grid, branches=branches, residual=0.0)


def _branch_step_norm(delta: np.ndarray) -> float:
    """Euclidean magnitude of a branch-block difference."""
    return float(np.sqrt(np.sum(np.abs(delta) ** 2)))


def extend_through_zeros(
    lift: LiftedCurve,
    full_grid: Grid,
    p: float,
    *,
    boundary_tol: float = 0.05,
) -> tuple[LiftedCurve, float]:
    """Extend a lift defined off the zero set by zero, and its L^p norm.

    The lift grid must be a node subset of full_grid; missing nodes are
    the zero set.  At every boundary node of a component that is interior
    to full_grid the branches must be small (within boundary_tol relative
    to the largest branch magnitude), otherwise DiscontinuousAtZeroSet.
    The derivative is set to zero on complement and bridging cells, so the
    returned norm over full_grid equals the norm over the lift's own
    domain exactly.
    """
    sub = lift.grid.nodes
    full = full_grid.nodes
    pos = np.searchsorted(full, sub)
    if np.any(pos >= full.size) or not np.array_equal(full[pos], sub):
        raise LengthMismatch("lift grid is not a node subset of the full grid")
    present = np.zeros(full.size, dtype=bool)
    present[pos] = True

    scale = float(np.max(np.abs(lift.branches)))
    tol = boundary_tol * max(scale, 1e-30)
    # component boundaries interior to the full grid must carry small values
    sub_of_full = {int(fp): int(si) for si, fp in enumerate(pos)}
    for fi in range(full.size):
        if not present[fi]:
            continue
        left_open = fi > 0 and not present[fi - 1]
        right_open = fi < full.size - 1 and not present[fi + 1]
        if left_open or right_open:
            mag = float(np.max(np.abs(lift.branches[:, sub_of_full[fi], :])))
            if mag > tol:
                raise DiscontinuousAtZeroSet(
                    f"branch magnitude {mag:.3e} at t={full[fi]!r} exceeds {tol:.3e}"
                )

    b, _, c = lift.branches.shape
    ext = np.zeros((b, full.size, c), dtype=complex)
    ext[:, pos, :] = lift.branches

    # Bridging and complement cells contribute exactly zero, so the norm
    # is the sum over the cells interior to the lift's own components;
    # computed through the same arithmetic as lp_derivative_norm so the
    # two agree bitwise.
    from .analysis import derivative_samples

    m, w = derivative_samples(lift.as_curve())
    interior = np.diff(pos) == 1
    norm = math.fsum((m[interior] ** p) * w[interior]) ** (1.0 / p)

    extended = LiftedCurve(
        grid=full_grid,
        branches=ext,
        residual=lift.residual,
        refinement_level=lift.refinement_level,
        budget_exhausted=lift.budget_exhausted,
        diagnostics=lift.diagnostics,
    )
    return extended, norm


def glue_lifts(
    left: LiftedCurve,
    right: LiftedCurve,
    spec: RepresentationSpec,
    tol: float = 1e-6,
) -> LiftedCurve:
    """Concatenate two lifts sharing one junction node.

    A group element of the descriptor (rotation power, or a branch
    permutation) is chosen to minimise the junction mismatch and applied
    to the whole right lift.  If even the best element mismatches by more
    than tol the lifts do not lie over the same invariant curve.
    """
    if left.grid.nodes[-1] != right.grid.nodes[0]:
        raise LengthMismatch("lifts must share exactly the junction node")
    if left.branches.shape[0] != right.branches.shape[0] or (
        left.branches.shape[2] != right.branches.shape[2]
    ):
        raise ShapeMismatch("lifts must have matching branch structure")
    lvals = left.branches[:, -1, :]
    rvals = right.branches[:, 0, :]

    if spec.kind == "cyclic":
        if left.branches.shape[0] != 1:
            raise ShapeMismatch("cyclic lifts have a single branch")
        phases = np.exp(2j * np.pi * np.arange(spec.q) / spec.q)
        mismatches = np.array(
            [_branch_step_norm(ph * rvals - lvals) for ph in phases]
        )
        j = int(np.argmin(mismatches))
        mismatch = float(mismatches[j])
        new_right = phases[j] * right.branches
    elif spec.kind in ("symmetric", "qtuple"):
        cost = np.sum(np.abs(lvals[:, None, :] - rvals[None, :, :]) ** 2, axis=2)
        rows, cols = linear_sum_assignment(cost)
        mismatch = float(math.sqrt(cost[rows, cols].sum()))
        new_right = right.branches[cols]
    else:
        raise ShapeMismatch(f"gluing is not defined for kind '{spec.kind}'")

    if mismatch > tol:
        raise NoReconcilingElement(
            f"minimal junction mismatch {mismatch:.3e} exceeds tol {tol:.1e}"
        )
    nodes = np.concatenate([left.grid.nodes, right.grid.nodes[1:]])
    branches = np.concatenate([left.branches, new_right[:, 1:, :]], axis=1)
    return LiftedCurve(
        grid=Grid(nodes),
        branches=branches,
        residual=max(left.residual, right.residual),
        refinement_level=max(left.refinement_level, right.refinement_level),
        budget_exhausted=left.budget_exhausted or right.budget_exhausted,
        diagnostics=left.diagnostics + right.diagnostics,
    )


# ---------------------------------------------------------------------------
# 2-D lifting


def _anchor_values(spec: RepresentationSpec, sigma: np.ndarray) -> np.ndarray:
    if spec.kind == "cyclic":
        return np.asarray([_principal_root(complex(sigma[0]), spec.q)])
    roots = solve_monic_roots(sigma)
    return roots[np.lexsort((roots.imag, roots.real))]


def _continue_values(
    spec: RepresentationSpec, prev: np.ndarray, sigma: np.ndarray
) -> np.ndarray:
    if spec.kind == "cyclic":
        cands = _all_roots(complex(sigma[0]), spec.q)
        return np.asarray([complex(cands[int(np.argmin(np.abs(cands - prev[0])))])])
    matched, _ = _match_to(prev, solve_monic_roots(sigma))
    return matched


def _sheet_gap(spec: RepresentationSpec, values: np.ndarray) -> float:
    """Half the minimal spacing between distinct branch candidates."""
    if spec.kind == "cyclic":
        if spec.q == 1:
            return math.inf
        return float(abs(values[0]) * math.sin(math.pi / spec.q))
    vals = values
    if vals.size < 2:
        return math.inf
    diffs = np.abs(vals[:, None] - vals[None, :])
    diffs = diffs[~np.eye(vals.size, dtype=bool)]
    return float(0.5 * diffs.min())


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def lift_grid_2d(
    f: SampledGrid2D,
    spec: RepresentationSpec,
    *,
    floor: float = 1e-12,
) -> GridLift:
    """Lift a 2-D sampled invariant field, or report its obstruction.

    Branch values spread along a deterministic spanning forest of the
    valid-node adjacency graph: the bottom row first, then each column,
    then whatever rows are needed to connect masked components.  Every
    remaining adjacency (the interior row steps) is then checked: the
    nearest-branch continuation across it must land on the sheet already
    assigned.  A failing edge closes a loop with no consistent lift; that
    loop is returned as the witness.
    """
    if spec.kind == "cyclic":
        if f.n_components != 1:
            raise ShapeMismatch("cyclic field must have one component")
        n_branches = 1
    elif spec.kind == "symmetric":
        if f.n_components != spec.q:
            raise ShapeMismatch(f"symmetric field must have {spec.q} components")
        n_branches = spec.q
    else:
        raise ShapeMismatch(f"2-D lifting is not defined for kind '{spec.kind}'")

    nx, ny = f.mask.shape
    node_id = lambda ix, iy: ix * ny + iy  # noqa: E731

    def valid(ix: int, iy: int) -> bool:
        return 0 <= ix < nx and 0 <= iy < ny and bool(f.mask[ix, iy])

    # candidate edges in spanning priority: bottom row, columns, other rows
    edges: list[tuple[tuple[int, int], tuple[int, int]]] = []
    for ix in range(nx - 1):
        if valid(ix, 0) and valid(ix + 1, 0):
            edges.append(((ix, 0), (ix + 1, 0)))
    for ix in range(nx):
        for iy in range(ny - 1):
            if valid(ix, iy) and valid(ix, iy + 1):
                edges.append(((ix, iy), (ix, iy + 1)))
    for iy in range(1, ny):
        for ix in range(nx - 1):
            if valid(ix, iy) and valid(ix + 1, iy):
                edges.append(((ix, iy), (ix + 1, iy)))

    uf = _UnionFind(nx * ny)
    tree_edges = []
    check_edges = []
    for u, v in edges:
        if uf.union(node_id(*u), node_id(*v)):
            tree_edges.append((u, v))
        else:
            check_edges.append((u, v))

    adjacency: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for u, v in tree_edges:
        adjacency.setdefault(u, []).append(v)
        adjacency.setdefault(v, []).append(u)

    values = np.zeros((nx, ny, n_branches), dtype=complex)
    assigned = np.zeros((nx, ny), dtype=bool)
    parent: dict[tuple[int, int], tuple[int, int] | None] = {}

    # roots in bottom-row-first scan order
    for iy in range(ny):
        for ix in range(nx):
            if not valid(ix, iy) or assigned[ix, iy]:
                continue
            values[ix, iy] = _anchor_values(spec, f.values[ix, iy])
            assigned[ix, iy] = True
            parent[(ix, iy)] = None
            queue = [(ix, iy)]
            while queue:
                u = queue.pop(0)
                for v in sorted(adjacency.get(u, ())):
                    if assigned[v]:
                        continue
                    values[v] = _continue_values(spec, values[u], f.values[v])
                    assigned[v] = True
                    parent[v] = u
                    queue.append(v)

    def tree_path(u: tuple[int, int]) -> list[tuple[int, int]]:
        path = [u]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])  # type: ignore[arg-type]
        return path

    for u, v in check_edges:
        continued = _continue_values(spec, values[u], f.values[v])
        mismatch = _branch_step_norm(continued - values[v])
        threshold = max(_sheet_gap(spec, values[v]), floor)
        if mismatch >= threshold:
            pu = tree_path(u)
            pv = tree_path(v)
            sv = set(pv)
            # first node of pu also on pv is the lowest common ancestor
            i = next(idx for idx, node in enumerate(pu) if node in sv)
            lca = pu[i]
            j = pv.index(lca)
            # explicit closure: the final step back to the start is the
            # failing edge itself
            loop = pu[: i + 1] + list(reversed(pv[:j])) + [pu[0]]
            report = MonodromyReport(status="obstructed", witness=tuple(loop))
            return GridLift(values=None, report=report)

    return GridLift(values=values, report=MonodromyReport(status="consistent"))


def write_lift_csv(path, lift: LiftedCurve) -> None:
    """Branch samples as CSV rows `t,branch,re,im` (suffixed when C > 1)."""
    n_branches, n_nodes, n_comp = lift.branches.shape
    if n_comp == 1:
        header = "t,branch,re,im"
    else:
        header = "t,branch," + ",".join(
            f"re_{c + 1},im_{c + 1}" for c in range(n_comp)
        )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for i, t in enumerate(lift.grid.nodes):
            for b in range(n_branches):
                cells = [repr(float(t)), str(b)]
                for c in range(n_comp):
                    z = lift.branches[b, i, c]
                    cells.append(repr(float(z.real)))
                    cells.append(repr(float(z.imag)))
                fh.write(",".join(cells) + "\n")


def read_lift_csv(path) -> LiftedCurve:
    """Inverse of write_lift_csv; every (node, branch) pair must appear once."""
    import csv

    from .errors import CsvFormatError

    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise CsvFormatError("empty lift file")
    header = [h.strip() for h in rows[0]]
    if header[:2] != ["t", "branch"]:
        raise CsvFormatError("lift header must start with 't,branch'")
    tail = header[2:]
    if tail == ["re", "im"]:
        n_comp = 1
    else:
        n_comp = len(tail) // 2
        expected = [x for c in range(n_comp) for x in (f"re_{c + 1}", f"im_{c + 1}")]
        if tail != expected:
            raise CsvFormatError(f"unexpected lift columns {tail}")
    data: dict[float, dict[int, np.ndarray]] = {}
    order: list[float] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2 + 2 * n_comp:
            raise CsvFormatError(f"line {lineno}: expected {2 + 2 * n_comp} fields")
        try:
            t = float(row[0])
            b = int(row[1])
            vals = np.array(
                [complex(float(row[2 + 2 * c]), float(row[3 + 2 * c])) for c in range(n_comp)]
            )
        except ValueError as exc:
            raise CsvFormatError(f"line {lineno}: {exc}") from exc
        if t not in data:
            data[t] = {}
            order.append(t)
        if b in data[t]:
            raise CsvFormatError(f"line {lineno}: duplicate branch {b} at t={t!r}")
        data[t][b] = vals
    counts = {len(v) for v in data.values()}
    if len(counts) != 1:
        raise CsvFormatError("nodes disagree on the branch count")
    n_branches = counts.pop()
    nodes = np.array(order)
    branches = np.empty((n_branches, len(order), n_comp), dtype=complex)
    for i, t in enumerate(order):
        for b in range(n_branches):
            if b not in data[t]:
                raise CsvFormatError(f"branch {b} missing at t={t!r}")
            branches[b, i] = data[t][b]
    return LiftedCurve(grid=Grid(nodes), branches=branches, residual=0.0)
