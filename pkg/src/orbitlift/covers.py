"""Prepared intervals and greedy covers of the nonvanishing set.

Around a node t1 the accumulation phi(s) = L|s - t1| + mass of the
selections between t1 and s grows piecewise-linearly in s, strictly
because L > 0.  A prepared interval [s-, s+] spends exactly D times the
dominant magnitude at t1 on phi, split evenly across the two sides when
both fit (first kind) or reallocated to one side when the other hits the
domain boundary (second kind).  A greedy sweep then covers every node
where the base curve is nonzero with selected intervals such that no
point lies in more than two of them and their total length is at most
twice the covered span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllZeroAtPoint,
    CoverPropertyViolation,
    DominantVanishes,
    OutOfRange,
)
from .reduction import RadicalSelection, dominant_index

__all__ = [
    "PreparedInterval",
    "CoverResult",
    "phi",
    "build_prepared_interval",
    "select_cover",
]


@dataclass(frozen=True)
class PreparedInterval:
    """An interval [s_minus, s_plus] around node t1 with a fixed phi budget.

    kind is "first" when each side absorbs half the budget and "second"
    when one side is truncated by the domain boundary and the remainder
    moved to the other side.
    """

    t1: float
    t1_index: int
    ell: int
    s_minus: float
    s_plus: float
    kind: str
    L: float
    D: float
    budget: float  # D * |selection_ell(t1)|, fully spent across both sides

    @property
    def width(self) -> float:
        return self.s_plus - self.s_minus

    def contains(self, t: float) -> bool:
        return self.s_minus <= t <= self.s_plus

    def to_json(self) -> dict:
        return {
            "t1": self.t1,
            "ell": self.ell,
            "s_minus": self.s_minus,
            "s_plus": self.s_plus,
            "kind": self.kind,
        }


def _mass_steps(sel: RadicalSelection, lo: int, hi: int) -> np.ndarray:
    """Per-cell total selection variation on [lo, hi], shape (hi - lo,)."""
    seg = sel.selections.values[lo : hi + 1]
    return np.sum(np.abs(np.diff(seg, axis=0)), axis=1).real


def _accumulator(sel: RadicalSelection, L: float, lo: int, hi: int) -> np.ndarray:
    """base[m] = L * t_m + cumulative mass; strictly increasing for L > 0.

    phi from node t1 rightward to node m is base[m] - base[t1]; leftward
    it is base[t1] - base[m].  One array serves every base node.
    """
    nodes = sel.grid.nodes[lo : hi + 1]
    prefix = np.concatenate([[0.0], np.cumsum(_mass_steps(sel, lo, hi))])
    return L * nodes + prefix


def phi(
    sel: RadicalSelection,
    t1_index: int,
    L: float,
    s: float,
    domain: tuple[int, int] | None = None,
) -> float:
    """Accumulation L|s - t1| + selection mass between t1 and s."""
    if L <= 0:
        raise ValueError("L must be positive")
    lo, hi = domain if domain is not None else (0, len(sel.grid) - 1)
    nodes = sel.grid.nodes
    if not (lo <= t1_index <= hi):
        raise OutOfRange("base node outside the domain")
    if not (nodes[lo] <= s <= nodes[hi]):
        raise OutOfRange(f"point {s} outside the domain [{nodes[lo]}, {nodes[hi]}]")
    if hi == lo:
        return 0.0
    base = _accumulator(sel, L, lo, hi)
    local = nodes[lo : hi + 1]
    # value of the accumulator at s, interpolated within its cell
    c = int(np.searchsorted(local, s, side="right") - 1)
    c = min(max(c, 0), len(local) - 2)
    if s == local[c]:
        at_s = float(base[c])
    else:
        frac = (s - local[c]) / (local[c + 1] - local[c])
        at_s = float(base[c] + frac * (base[c + 1] - base[c]))
    return abs(at_s - float(base[t1_index - lo]))


def _solve_forward(base: np.ndarray, local: np.ndarray, i0: int, target: float):
    """Smallest s >= local[i0] with accumulated phi == target.

    Returns (s, reached) where reached is False when the domain end
    absorbs less than target; then s is the endpoint and the shortfall
    is target minus the accumulated value there.
    """
    goal = base[i0] + target
    if base[-1] < goal:
        return float(local[-1]), False, float(base[-1] - base[i0])
    m = int(np.searchsorted(base, goal, side="left"))
    if base[m] == goal:
        return float(local[m]), True, target
    c = m - 1  # goal lies strictly inside cell (c, c+1]
    rate = (base[c + 1] - base[c]) / (local[c + 1] - local[c])
    s = float(local[c] + (goal - base[c]) / rate)
    return s, True, target


def _solve_backward(base: np.ndarray, local: np.ndarray, i0: int, target: float):
    """Largest s <= local[i0] with accumulated phi == target (leftward)."""
    goal = base[i0] - target
    if base[0] > goal:
        return float(local[0]), False, float(base[i0] - base[0])
    m = int(np.searchsorted(base, goal, side="left"))
    if base[m] == goal:
        return float(local[m]), True, target
    c = m - 1
    rate = (base[c + 1] - base[c]) / (local[c + 1] - local[c])
    s = float(local[c] + (goal - base[c]) / rate)
    return s, True, target


def build_prepared_interval(
    sel: RadicalSelection,
    t1_index: int,
    L: float,
    D: float,
    ell: int | None = None,
    domain: tuple[int, int] | None = None,
    _accum: np.ndarray | None = None,
) -> PreparedInterval:
    """Prepared interval at a node: spend D |selection_ell(t1)| on phi.

    First kind: each side absorbs exactly half.  Second kind: a side
    truncated by the domain boundary passes its shortfall to the other.
    Raises CoverPropertyViolation when the whole domain cannot absorb
    the budget.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    if D <= 0:
        raise ValueError("D must be positive")
    lo, hi = domain if domain is not None else (0, len(sel.grid) - 1)
    if not (lo <= t1_index <= hi):
        raise OutOfRange("base node outside the domain")
    if ell is None:
        ell = dominant_index(sel, t1_index)
    magnitude = float(abs(sel.selections.values[t1_index, ell]))
    if magnitude == 0.0:
        raise DominantVanishes(f"selection {ell} vanishes at node {t1_index}")
    budget = D * magnitude
    half = budget / 2.0

    base = _accum if _accum is not None else _accumulator(sel, L, lo, hi)
    local = sel.grid.nodes[lo : hi + 1]
    i0 = t1_index - lo

    s_plus, ok_r, got_r = _solve_forward(base, local, i0, half)
    s_minus, ok_l, got_l = _solve_backward(base, local, i0, half)
    if ok_r and ok_l:
        kind = "first"
    elif ok_r and not ok_l:
        s_plus, ok_r, got_r = _solve_forward(base, local, i0, budget - got_l)
        if not ok_r:
            raise CoverPropertyViolation(
                f"domain absorbs {got_l + got_r:.3e} < required {budget:.3e} at node {t1_index}"
            )
        kind = "second"
    elif ok_l and not ok_r:
        s_minus, ok_l, got_l = _solve_backward(base, local, i0, budget - got_r)
        if not ok_l:
            raise CoverPropertyViolation(
                f"domain absorbs {got_l + got_r:.3e} < required {budget:.3e} at node {t1_index}"
            )
        kind = "second"
    else:
        raise CoverPropertyViolation(
            f"domain absorbs {got_l + got_r:.3e} < required {budget:.3e} at node {t1_index}"
        )

    return PreparedInterval(
        t1=float(local[i0]),
        t1_index=t1_index,
        ell=int(ell),
        s_minus=s_minus,
        s_plus=s_plus,
        kind=kind,
        L=L,
        D=D,
        budget=budget,
    )


@dataclass(frozen=True)
class CoverResult:
    """Selected prepared intervals covering the nonvanishing nodes."""

    selected: tuple[PreparedInterval, ...]
    built: tuple[PreparedInterval, ...]
    components: tuple[tuple[int, int], ...]  # inclusive node ranges of I'
    covered_span: float  # |I'|
    total_length: float  # sum of selected widths
    max_overlap: int

    def to_json(self) -> list[dict]:
        return [j.to_json() for j in self.selected]


def _nonzero_components(sel: RadicalSelection) -> list[tuple[int, int]]:
    nz = np.any(sel.base.values != 0, axis=1)
    if not bool(nz.any()):
        raise AllZeroAtPoint("the base curve vanishes at every node")
    comps = []
    i = 0
    n = len(nz)
    while i < n:
        if nz[i]:
            j = i
            while j + 1 < n and nz[j + 1]:
                j += 1
            comps.append((i, j))
            i = j + 1
        else:
            i += 1
    return comps


def select_cover(sel: RadicalSelection, L: float, D: float) -> CoverResult:
    """Greedy cover of the nonvanishing nodes by prepared intervals.

    Builds one prepared interval per nonvanishing node (per connected
    run of such nodes, which bounds every interval) and sweeps left to
    right, always selecting the candidate interval containing the
    frontier that reaches furthest.  Gaps free of nodes are jumped.  The
    structural properties (every nonvanishing node covered, no point in
    more than two selected intervals, total length at most twice the
    covered span) are verified and CoverPropertyViolation raised on any
    failure.
    """
    comps = _nonzero_components(sel)
    nodes = sel.grid.nodes
    nz = np.any(sel.base.values != 0, axis=1)
    selected: list[PreparedInterval] = []
    built: list[PreparedInterval] = []

    for lo, hi in comps:
        if hi == lo:
            raise CoverPropertyViolation(
                f"isolated nonvanishing node {lo} spans no length to absorb the budget"
            )
        accum = _accumulator(sel, L, lo, hi)
        cands = [
            build_prepared_interval(sel, i, L, D, domain=(lo, hi), _accum=accum)
            for i in range(lo, hi + 1)
        ]
        built.extend(cands)
        s_min = np.array([c.s_minus for c in cands])
        s_max = np.array([c.s_plus for c in cands])
        end = float(nodes[hi])
        frontier = float(nodes[lo])
        # the first interval must contain the leftmost node
        while True:
            # an interval reaching the component end may close the sweep
            # even when it cannot advance the frontier strictly (it can be
            # degenerate when the last node value is barely nonzero)
            mask = (s_min <= frontier) & ((s_max > frontier) | (s_max >= end))
            if not mask.any():
                ahead = s_min > frontier
                if not ahead.any():
                    raise CoverPropertyViolation(
                        f"no interval reaches beyond {frontier:.6g} in component [{lo}, {hi}]"
                    )
                nxt = float(s_min[ahead].min())
                in_gap = (nodes > frontier) & (nodes < nxt)
                if bool(in_gap.any()):
                    t_bad = float(nodes[in_gap][0])
                    raise CoverPropertyViolation(f"node {t_bad:.6g} not covered")
                frontier = nxt
                continue
            # furthest reach; ties broken by the earlier base node
            reach = np.where(mask, s_max, -np.inf)
            pick = int(np.argmax(reach))
            selected.append(cands[pick])
            frontier = float(s_max[pick])
            if frontier >= end:
                break

        # a node whose value is barely nonzero gets a near-degenerate
        # candidate that the strict sweep can step over; it still covers
        # its own base node, so select it directly
        for idx in range(lo, hi + 1):
            t_n = float(nodes[idx])
            if nz[idx] and not any(j.contains(t_n) for j in selected):
                selected.append(cands[idx - lo])
    selected.sort(key=lambda j: (j.s_minus, j.s_plus))

    # property checks on the selected family
    nz_nodes = nodes[nz]
    for t in nz_nodes:
        if not any(j.contains(float(t)) for j in selected):
            raise CoverPropertyViolation(f"node {float(t):.6g} not covered")
    for i in range(len(selected) - 2):
        a, c = selected[i], selected[i + 2]
        if a.s_plus > c.s_minus:
            raise CoverPropertyViolation(f"three intervals overlap near {c.s_minus:.6g}")
    covered_span = float(math.fsum(nodes[hi] - nodes[lo] for lo, hi in comps))
    total_length = float(math.fsum(j.width for j in selected))
    if total_length > 2.0 * covered_span * (1.0 + 1e-12) + 1e-15:
        raise CoverPropertyViolation(
            f"total length {total_length:.6g} exceeds twice the span {covered_span:.6g}"
        )

    # max multiplicity over the refinement of all endpoints
    events = sorted(
        [(j.s_minus, 1) for j in selected] + [(j.s_plus, -1) for j in selected]
    )
    depth = max_overlap = 0
    for _, delta in events:
        depth += delta
        max_overlap = max(max_overlap, depth)

    return CoverResult(
        selected=tuple(selected),
        built=tuple(built),
        components=tuple(comps),
        covered_span=covered_span,
        total_length=total_length,
        max_overlap=max_overlap,
    )
