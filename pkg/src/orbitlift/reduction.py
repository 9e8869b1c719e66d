"""Radical selections, admissible windows and branch clustering.

The local analysis of a lifted curve runs on the radicals of the
coefficient components: each a_j gets a continuous d_j-th root, the
largest component at a base point is singled out, and an interval around
the base point is grown while the combined smoothness/variation budget
stays below a fixed fraction of the dominant magnitude.  On such a
window the normalised data satisfies explicit bounds, checked here
verbatim on the discrete samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Grid, SampledCurve, finite_difference
from .errors import (
    AllZeroAtPoint,
    ClustersNotSeparated,
    OrderTooHigh,
    ShapeMismatch,
    VanishingDominant,
)
from .invariants import elementary_symmetric
from .lifting import LiftedCurve, continuous_radical

__all__ = [
    "RadicalSelection",
    "AdmissibleData",
    "AdmissibilityReport",
    "DerivativeBoundsReport",
    "ClusterSplit",
    "radical_selections",
    "dominant_index",
    "slice_selection",
    "normalized_curve",
    "maximal_admissible_interval",
    "check_admissible",
    "check_derivative_bounds",
    "split_clusters",
]


@dataclass(frozen=True)
class RadicalSelection:
    """A coefficient curve with continuous per-component radicals.

    selections holds one continuous d_j-th root of each base component
    over the same grid; selections**degrees recombines to the base within
    the recorded residual.
    """

    base: SampledCurve
    selections: SampledCurve
    degrees: tuple[int, ...]
    residual: float = 0.0
    diagnostics: tuple[str, ...] = ()
    budget_exhausted: bool = False

    def __post_init__(self):
        if self.base.n_components != self.selections.n_components:
            raise ShapeMismatch("base and selections must have equal component counts")
        if len(self.degrees) != self.base.n_components:
            raise ShapeMismatch("one degree per component required")
        if len(self.base.grid) != len(self.selections.grid):
            raise ShapeMismatch("base and selections must share the grid")

    @property
    def grid(self) -> Grid:
        return self.base.grid

    def component_masses(self, lo: int = 0, hi: int | None = None) -> np.ndarray:
        """Polyline L^1 derivative mass of each selection component on [lo, hi]."""
        hi = len(self.grid) - 1 if hi is None else hi
        seg = self.selections.values[lo : hi + 1]
        return np.sum(np.abs(np.diff(seg, axis=0)), axis=0).real

    def mass(self, lo: int = 0, hi: int | None = None) -> float:
        return float(np.sum(self.component_masses(lo, hi)))


def radical_selections(
    a: SampledCurve,
    degrees: Sequence[int],
    oracle: Callable[[float], Sequence[complex]] | None = None,
    *,
    max_rounds: int = 5,
) -> RadicalSelection:
    """Continuous d_j-th roots of every component over one common grid.

    Components are lifted independently; when ambiguity refinement
    inserts nodes, all components are re-lifted on the merged grid until
    the grids agree (the oracle supplies exact values at new nodes).
    """
    degrees = tuple(int(d) for d in degrees)
    if len(degrees) != a.n_components:
        raise ShapeMismatch("one degree per component required")
    if any(d < 1 for d in degrees):
        raise ValueError("degrees must be positive integers")

    def component_oracle(j: int) -> Callable[[float], complex] | None:
        if oracle is None:
            return None
        return lambda t: complex(np.atleast_1d(np.asarray(oracle(t), dtype=complex))[j])

    curve = a
    for _ in range(max_rounds):
        lifts = [
            continuous_radical(curve.component(j), degrees[j], component_oracle(j))
            for j in range(a.n_components)
        ]
        grids = [l.grid.nodes for l in lifts]
        merged = grids[0]
        for g in grids[1:]:
            merged = np.union1d(merged, g)
        if all(g.size == merged.size for g in grids):
            break
        if oracle is None:  # no refinement can have happened
            break
        rows = [np.asarray(oracle(float(t)), dtype=complex).ravel() for t in merged]
        curve = SampledCurve(Grid(merged), np.asarray(rows))
    else:
        # final pass without refinement so all components share the grid
        lifts = [
            continuous_radical(curve.component(j), degrees[j], None)
            for j in range(a.n_components)
        ]

    values = np.concatenate([l.branches[0] for l in lifts], axis=1)
    selections = SampledCurve(curve.grid, values)
    return RadicalSelection(
        base=curve,
        selections=selections,
        degrees=degrees,
        residual=max(l.residual for l in lifts),
        diagnostics=tuple(d for l in lifts for d in l.diagnostics),
        budget_exhausted=any(l.budget_exhausted for l in lifts),
    )


def dominant_index(sel: RadicalSelection, t0_index: int) -> int:
    """Index of the largest selection magnitude at the node (ties: smallest)."""
    mags = np.abs(sel.selections.values[t0_index])
    if float(mags.max()) == 0.0:
        raise AllZeroAtPoint(f"all components vanish at node {t0_index}")
    return int(np.argmax(mags))


def slice_selection(sel: RadicalSelection, lo: int, hi: int) -> RadicalSelection:
    """Restriction to the inclusive node range [lo, hi]."""
    if not (0 <= lo < hi < len(sel.grid)):
        raise ValueError("need 0 <= lo < hi within the grid")
    g = Grid(sel.grid.nodes[lo : hi + 1])
    return RadicalSelection(
        base=SampledCurve(g, sel.base.values[lo : hi + 1]),
        selections=SampledCurve(g, sel.selections.values[lo : hi + 1]),
        degrees=sel.degrees,
        residual=sel.residual,
    )


def normalized_curve(sel: RadicalSelection, k: int) -> SampledCurve:
    """The curve ((selection_k)^{-1} selection_j)^{d_j}, component-wise.

    Requires the k-th selection to be nonzero at every node.  Homogeneous
    rescaling of the base curve leaves the result unchanged.
    """
    ak = sel.selections.values[:, k]
    if np.any(ak == 0):
        where = int(np.flatnonzero(ak == 0)[0])
        raise VanishingDominant(f"selection {k} vanishes at node {where}")
    ratios = sel.selections.values / ak[:, None]
    powers = np.stack(
        [ratios[:, j] ** sel.degrees[j] for j in range(sel.selections.n_components)],
        axis=1,
    )
    return SampledCurve(sel.grid, powers)


def _lipschitz_of_top_difference(base: SampledCurve, j: int, lo: int, hi: int, d: int) -> float:
    """Lipschitz constant of the (d-1)-th divided difference of a_j on [lo, hi]."""
    n = hi - lo + 1
    if n < 2 or n < d + 1:
        return 0.0  # too few nodes to witness any variation at this order
    g = Grid(base.grid.nodes[lo : hi + 1])
    sub = SampledCurve(g, base.values[lo : hi + 1, j : j + 1])
    top = sub if d == 1 else finite_difference(sub, d - 1)
    dv = np.abs(np.diff(top.values[:, 0]))
    return float(np.max(dv / g.widths))


def _smoothness_weight(sel: RadicalSelection, lo: int, hi: int, ak0: float) -> float:
    """max_j Lip(a_j^{(d-1)})^{1/d} * ak0^{(d-d_j)/d} over the window."""
    d = max(sel.degrees)
    out = 0.0
    for j, dj in enumerate(sel.degrees):
        lip = _lipschitz_of_top_difference(sel.base, j, lo, hi, d)
        out = max(out, lip ** (1.0 / d) * ak0 ** ((d - dj) / d))
    return out


@dataclass(frozen=True)
class AdmissibleData:
    """A base point, dominant component and admissible window around it.

    The window satisfies M * |I| + sum_j ||selection_j'||_{L^1(I)}
    <= B * |selection_k(t0)| with M the smoothness weight recorded here.
    case records how growth stopped: "equality" when one more node would
    break the constraint, "boundary" when the window is the whole grid.
    """

    selection: RadicalSelection
    t0_index: int
    k: int
    B: float
    M: float
    lo: int
    hi: int
    case: str

    def __post_init__(self):
        if not (0.0 < self.B < 1.0):
            raise ValueError("B must lie in (0, 1); the admissible regime is (0, 1/3)")
        if self.M < 0.0:
            raise ValueError("M must be nonnegative")
        if not (self.lo <= self.t0_index <= self.hi):
            raise ValueError("base node must lie inside the window")
        if self.case not in ("equality", "boundary"):
            raise ValueError("case must be 'equality' or 'boundary'")

    @property
    def interval_length(self) -> float:
        nodes = self.selection.grid.nodes
        return float(nodes[self.hi] - nodes[self.lo])

    @property
    def dominant_magnitude(self) -> float:
        return float(abs(self.selection.selections.values[self.t0_index, self.k]))

    def to_json(self) -> dict:
        nodes = self.selection.grid.nodes
        return {
            "t0": float(nodes[self.t0_index]),
            "t0_index": self.t0_index,
            "k": self.k,
            "B": self.B,
            "M": self.M,
            "lo": float(nodes[self.lo]),
            "hi": float(nodes[self.hi]),
            "lo_index": self.lo,
            "hi_index": self.hi,
            "case": self.case,
        }


def maximal_admissible_interval(
    sel: RadicalSelection,
    t0_index: int,
    k: int | None = None,
    B: float = 0.25,
) -> AdmissibleData:
    """Largest admissible window around a node, grown symmetrically.

    Nodes are added alternately left and right while the constraint
    M(I) |I| + mass(I) <= B |selection_k(t0)| holds, switching one-sided
    when a side reaches the grid boundary; M is recomputed for every
    candidate window.  The admissible regime is B < 1/3; larger values
    are allowed so that deliberately broken data can be constructed.
    """
    if not (0.0 < B < 1.0):
        raise ValueError("B must lie in (0, 1)")
    n = len(sel.grid)
    if not (0 <= t0_index < n):
        raise ValueError("base node outside the grid")
    if k is None:
        k = dominant_index(sel, t0_index)
    ak0 = float(abs(sel.selections.values[t0_index, k]))
    if ak0 == 0.0:
        raise VanishingDominant(f"selection {k} vanishes at the base node")
    budget = B * ak0
    nodes = sel.grid.nodes

    def admissible(lo: int, hi: int) -> tuple[bool, float]:
        m = _smoothness_weight(sel, lo, hi, ak0)
        used = m * float(nodes[hi] - nodes[lo]) + sel.mass(lo, hi)
        return used <= budget, m

    lo = hi = t0_index
    m_final = _smoothness_weight(sel, lo, hi, ak0)
    prefer_left = True
    while True:
        can_left = lo > 0
        can_right = hi < n - 1
        if not can_left and not can_right:
            case = "boundary"
            break
        sides = []
        if prefer_left:
            sides = [s for s in ("left", "right") if (s == "left" and can_left) or (s == "right" and can_right)]
        else:
            sides = [s for s in ("right", "left") if (s == "left" and can_left) or (s == "right" and can_right)]
        grown = False
        for side in sides:
            nlo, nhi = (lo - 1, hi) if side == "left" else (lo, hi + 1)
            ok, m = admissible(nlo, nhi)
            if ok:
                lo, hi = nlo, nhi
                m_final = m
                prefer_left = side != "left"
                grown = True
                break
        if not grown:
            case = "equality"
            break

    return AdmissibleData(
        selection=sel, t0_index=t0_index, k=int(k), B=float(B), M=float(m_final),
        lo=lo, hi=hi, case=case,
    )


@dataclass(frozen=True)
class AdmissibilityReport:
    """Discrete checks of the window conclusions, in derivation order."""

    bounded_increments: bool  # |a^_j(t) - a^_j(t0)| <= B |a^_k(t0)|
    dominant_ratio: bool  # 2/3 < |a^_k(t)/a^_k(t0)| < 4/3
    dominant_pointwise: bool  # |a^_j(t)| <= 2 |a^_k(t)|
    normalized_length: bool  # total polyline length <= 3 d^2 2^d B
    margins: dict

    @property
    def all_pass(self) -> bool:
        return (
            self.bounded_increments
            and self.dominant_ratio
            and self.dominant_pointwise
            and self.normalized_length
        )

    @property
    def first_failure(self) -> str | None:
        for name in (
            "bounded_increments",
            "dominant_ratio",
            "dominant_pointwise",
            "normalized_length",
        ):
            if not getattr(self, name):
                return name
        return None

    def to_json(self) -> dict:
        return {
            "bounded_increments": self.bounded_increments,
            "dominant_ratio": self.dominant_ratio,
            "dominant_pointwise": self.dominant_pointwise,
            "normalized_length": self.normalized_length,
            "all_pass": self.all_pass,
            "first_failure": self.first_failure,
            "margins": self.margins,
        }


def check_admissible(data: AdmissibleData) -> AdmissibilityReport:
    """Verify the four window conclusions on the discrete samples."""
    sel = data.selection
    vals = sel.selections.values[data.lo : data.hi + 1]
    base_vals = sel.selections.values[data.t0_index]
    ak0 = data.dominant_magnitude
    if ak0 == 0.0:
        raise VanishingDominant("dominant component vanishes at the base node")
    bound = data.B * ak0

    increments = np.abs(vals - base_vals[None, :])
    max_increment = float(increments.max())
    bounded_increments = max_increment <= bound + 1e-14 * ak0

    ratios = np.abs(vals[:, data.k]) / ak0
    ratio_lo, ratio_hi = float(ratios.min()), float(ratios.max())
    dominant_ratio = (2.0 / 3.0 < ratio_lo) and (ratio_hi < 4.0 / 3.0)

    dominant_abs = np.abs(vals[:, data.k])
    others = np.abs(vals)
    margin_pointwise = float((2.0 * dominant_abs[:, None] - others).min())
    dominant_pointwise = bool(np.all(others <= 2.0 * dominant_abs[:, None] + 1e-14 * ak0))

    d = max(sel.degrees)
    window = slice_selection(sel, data.lo, data.hi) if data.hi > data.lo else None
    if window is None:
        length = 0.0
    else:
        normal = normalized_curve(window, data.k)
        length = float(np.sum(np.abs(np.diff(normal.values, axis=0))))
    length_bound = 3.0 * d * d * (2.0**d) * data.B
    normalized_length = length <= length_bound + 1e-12

    return AdmissibilityReport(
        bounded_increments=bool(bounded_increments),
        dominant_ratio=bool(dominant_ratio),
        dominant_pointwise=bool(dominant_pointwise),
        normalized_length=bool(normalized_length),
        margins={
            "max_increment": max_increment,
            "increment_bound": bound,
            "ratio_min": ratio_lo,
            "ratio_max": ratio_hi,
            "pointwise_margin": margin_pointwise,
            "normalized_length": length,
            "normalized_length_bound": length_bound,
        },
    )


@dataclass(frozen=True)
class DerivativeBoundsReport:
    """Measured constants of the window derivative bounds, per order."""

    per_order: dict  # order s -> measured constant (order d is the Lipschitz part)
    measured: float

    def to_json(self) -> dict:
        return {"per_order": {str(k): v for k, v in self.per_order.items()}, "measured": self.measured}


def check_derivative_bounds(data: AdmissibleData) -> DerivativeBoundsReport:
    """Measure ||a_j^{(s)}|| |I|^s / ak0^{d_j} over the window, s = 1..d.

    Order d uses the Lipschitz constant of the (d-1)-th difference.  The
    window must contain enough nodes for order d-1 differences.
    """
    sel = data.selection
    d = max(sel.degrees)
    n = data.hi - data.lo + 1
    if n < d + 1:
        raise OrderTooHigh(f"window has {n} nodes, order {d} bounds need {d + 1}")
    g = Grid(sel.grid.nodes[data.lo : data.hi + 1])
    length = data.interval_length
    ak0 = data.dominant_magnitude
    per_order: dict[int, float] = {}
    for s in range(1, d):
        worst = 0.0
        for j, dj in enumerate(sel.degrees):
            sub = SampledCurve(g, sel.base.values[data.lo : data.hi + 1, j : j + 1])
            sup = float(np.max(np.abs(finite_difference(sub, s).values)))
            worst = max(worst, sup * length**s / ak0**dj)
        per_order[s] = worst
    worst = 0.0
    for j, dj in enumerate(sel.degrees):
        lip = _lipschitz_of_top_difference(sel.base, j, data.lo, data.hi, d)
        worst = max(worst, lip * length**d / ak0**dj)
    per_order[d] = worst
    return DerivativeBoundsReport(per_order=per_order, measured=max(per_order.values()))


@dataclass(frozen=True)
class ClusterSplit:
    """One branch group: its lift, centroid curve and recentred coefficients."""

    branch_indices: tuple[int, ...]
    lift: LiftedCurve
    centroid: SampledCurve
    coefficients: SampledCurve
    recombination_residual: float


def split_clusters(lift: LiftedCurve, gap: float) -> list[ClusterSplit]:
    """Split scalar branches into groups separated by at least gap.

    At every node the same index partition must consist of groups with
    intra-group diameter below gap/3 and inter-group distances above gap,
    otherwise ClustersNotSeparated.  Each group is returned with its
    centroid curve and the elementary symmetric coefficients of the
    recentred branches; re-merging the groups reproduces the original
    invariant values within the recorded residual.
    """
    if gap <= 0:
        raise ValueError("gap must be positive")
    if lift.branches.shape[2] != 1:
        raise ShapeMismatch("cluster splitting expects scalar branches")
    branches = lift.branches[:, :, 0]  # (Q, N)
    q, n_nodes = branches.shape
    if q < 1:
        raise ShapeMismatch("no branches")

    def partition_at(i: int) -> list[tuple[int, ...]]:
        pts = branches[:, i]
        dist = np.abs(pts[:, None] - pts[None, :])
        linked = dist <= gap / 3.0
        seen = [False] * q
        groups = []
        for start in range(q):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v in range(q):
                    if not seen[v] and linked[u, v]:
                        seen[v] = True
                        stack.append(v)
            groups.append(tuple(sorted(comp)))
        return sorted(groups)

    def validate_at(i: int, groups: list[tuple[int, ...]]) -> None:
        pts = branches[:, i]
        dist = np.abs(pts[:, None] - pts[None, :])
        for gidx in groups:
            block = dist[np.ix_(gidx, gidx)]
            if block.size > 1 and float(block.max()) >= gap / 3.0:
                raise ClustersNotSeparated(
                    f"group diameter {float(block.max()):.3e} >= gap/3 at node {i}"
                )
        for ai in range(len(groups)):
            for bi in range(ai + 1, len(groups)):
                cross = dist[np.ix_(groups[ai], groups[bi])]
                if float(cross.min()) <= gap:
                    raise ClustersNotSeparated(
                        f"groups {ai} and {bi} only {float(cross.min()):.3e} apart at node {i}"
                    )

    groups = partition_at(0)
    validate_at(0, groups)
    for i in range(1, n_nodes):
        here = partition_at(i)
        if here != groups:
            raise ClustersNotSeparated(f"partition changes at node {i}")
        validate_at(i, here)

    originals = np.stack(
        [elementary_symmetric(branches[:, i]) for i in range(n_nodes)], axis=0
    )
    out: list[ClusterSplit] = []
    rebuilt = np.empty_like(branches)
    for gidx in groups:
        sub = branches[list(gidx), :]
        centroid = np.mean(sub, axis=0)
        recentred = sub - centroid[None, :]
        coeffs = np.stack(
            [elementary_symmetric(recentred[:, i]) for i in range(n_nodes)], axis=0
        )
        rebuilt[list(gidx), :] = recentred + centroid[None, :]
        sub_lift = LiftedCurve(
            grid=lift.grid,
            branches=sub[:, :, None],
            residual=lift.residual,
            refinement_level=lift.refinement_level,
        )
        out.append(
            ClusterSplit(
                branch_indices=gidx,
                lift=sub_lift,
                centroid=SampledCurve(lift.grid, centroid[:, None]),
                coefficients=SampledCurve(lift.grid, coeffs),
                recombination_residual=0.0,
            )
        )
    merged = np.stack(
        [elementary_symmetric(rebuilt[:, i]) for i in range(n_nodes)], axis=0
    )
    residual = float(np.max(np.abs(merged - originals)))
    out = [
        ClusterSplit(
            branch_indices=c.branch_indices,
            lift=c.lift,
            centroid=c.centroid,
            coefficients=c.coefficients,
            recombination_residual=residual,
        )
        for c in out
    ]
    return out
