"""Norms, inequality checks and the critical integrability exponent scan.

All integral norms act on the discrete derivative: per-cell difference
quotients with cell-width weights, combined with the Euclidean magnitude
across components so that every norm here is exactly invariant under
fixed rotations and branch permutations.  Interval norms are available in
plain and length-normalised form; the normalised variant divides by
|interval|^(1/p) so that inequalities between different exponents are
scale-consistent.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import Grid, RepresentationSpec, SampledCurve, finite_difference, make_sampled_curve
from .errors import ExponentOutOfRange, ShapeMismatch
from .lifting import LiftedCurve, continuous_radical, continuous_roots

__all__ = [
    "NormReport",
    "QpReport",
    "InterpolationReport",
    "MainBoundReport",
    "ScanProblem",
    "ExponentScanReport",
    "derivative_samples",
    "lp_derivative_norm",
    "weak_lp_quasinorm",
    "holder_norm",
    "check_qp_inequality",
    "check_interpolation_inequality",
    "verify_main_bound",
    "critical_exponent_scan",
    "parallel_map",
]

ALL_PAIRS_LIMIT = 4096
WINDOW = 64
RANDOM_PAIRS = 10**6


def _thread_count() -> int:
    raw = os.environ.get("ORBITLIFT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Sequence) -> list:
    """Map over independent work items; results always in input order."""
    workers = _thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class NormReport:
    kind: str  # "lp" | "weak_lp" | "normalized_lp" | "normalized_weak" | "holder"
    value: float
    p: float | None = None
    k: int | None = None
    alpha: float | None = None
    level: int = 0
    grid_size: int = 0

    def to_json(self) -> dict:
        row: dict = {"kind": self.kind, "level": self.level, "value": self.value}
        if self.p is not None:
            row["p"] = self.p
        if self.k is not None:
            row["k"] = self.k
        if self.alpha is not None:
            row["alpha"] = self.alpha
        if self.grid_size:
            row["grid_size"] = self.grid_size
        return row


def derivative_samples(curve: SampledCurve) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell derivative magnitudes (Euclidean over components) and widths."""
    w = curve.grid.widths
    dv = np.diff(curve.values, axis=0)
    m = np.sqrt(np.sum(np.abs(dv) ** 2, axis=1)) / w
    return m, w


def lp_derivative_norm(
    curve: SampledCurve, p: float, *, level: int = 0, normalized: bool = False
) -> NormReport:
    """Composite midpoint L^p norm of the discrete derivative.

    The normalized variant divides by |interval|^(1/p).
    """
    if p < 1:
        raise ValueError("exponent must satisfy p >= 1")
    m, w = derivative_samples(curve)
    value = math.fsum((m**p) * w) ** (1.0 / p)
    if normalized:
        value *= curve.grid.length ** (-1.0 / p)
    return NormReport(
        kind="normalized_lp" if normalized else "lp",
        value=float(value),
        p=float(p),
        level=level,
        grid_size=len(curve.grid),
    )


def _weak_value(m: np.ndarray, w: np.ndarray, p: float) -> float:
    """max over sampled thresholds of m_i * (strictly steeper mass)^(1/p).

    Each threshold is weighed against the cumulative width of the cells
    BEFORE it in decreasing order.  Counting a cell against its own width
    would pin every value to slope * width^(1/p) of that single cell,
    which near an unresolved root singularity stays O(1) no matter how
    deep the grid is; the exclusive count converges to the supremum of
    the underlying density wherever the grid resolves it.

    A threshold is trusted only where the steeper mass is at least twice
    the cell's own width: closer to the cell scale the empirical
    distribution carries no information beyond that single cell.  When no
    threshold qualifies (very coarse grids) the plain exclusive maximum
    is returned.
    """
    if m.size == 0:
        return 0.0
    order = np.argsort(-m, kind="stable")
    ms = m[order]
    ws = w[order]
    before = np.concatenate([[0.0], np.cumsum(ws)[:-1]])
    vals = ms * before ** (1.0 / p)
    resolved = before >= 2.0 * ws
    if np.any(resolved):
        return float(np.max(vals[resolved]))
    return float(np.max(vals))


def weak_lp_quasinorm(
    curve: SampledCurve, p: float, *, level: int = 0, normalized: bool = False
) -> NormReport:
    """Weak-L^p quasinorm of the discrete derivative.

    Supremum over the sampled derivative magnitudes as thresholds, each
    against the cumulative width of the strictly steeper cells.  The
    normalized variant divides by |interval|^(1/p).
    """
    if p < 1:
        raise ValueError("exponent must satisfy p >= 1")
    m, w = derivative_samples(curve)
    value = _weak_value(m, w, p)
    if normalized:
        value *= curve.grid.length ** (-1.0 / p)
    return NormReport(
        kind="normalized_weak" if normalized else "weak_lp",
        value=value,
        p=float(p),
        level=level,
        grid_size=len(curve.grid),
    )


def _pair_max(
    x: np.ndarray,
    vals: np.ndarray,
    alpha: float,
    seed: int,
) -> float:
    """Max over node pairs of |v_i - v_j| / |x_i - x_j|^alpha.

    Exact over all pairs up to ALL_PAIRS_LIMIT nodes; beyond that a
    64-wide sliding window plus one million seeded random pairs.
    alpha = 0 gives the diameter of the value set.
    """
    n = x.size

    def block(i_idx: np.ndarray, j_idx: np.ndarray) -> float:
        dx = np.abs(x[i_idx] - x[j_idx])
        dv = np.sqrt(np.sum(np.abs(vals[i_idx] - vals[j_idx]) ** 2, axis=-1))
        if alpha == 0.0:
            return float(dv.max()) if dv.size else 0.0
        keep = dx > 0
        if not np.any(keep):
            return 0.0
        return float(np.max(dv[keep] / dx[keep] ** alpha))

    if n <= ALL_PAIRS_LIMIT:
        best = 0.0
        chunk = 128
        for i0 in range(0, n, chunk):
            i1 = min(i0 + chunk, n)
            ii, jj = np.meshgrid(np.arange(i0, i1), np.arange(n), indexing="ij")
            best = max(best, block(ii.ravel(), jj.ravel()))
        return best

    best = 0.0
    for off in range(1, WINDOW + 1):
        best = max(best, block(np.arange(0, n - off), np.arange(off, n)))
    rng = np.random.default_rng(seed)
    ii = rng.integers(0, n, size=RANDOM_PAIRS)
    jj = rng.integers(0, n, size=RANDOM_PAIRS)
    keep = ii != jj
    best = max(best, block(ii[keep], jj[keep]))
    return best


def holder_norm(
    curve: SampledCurve,
    k: int,
    alpha: float,
    *,
    seed: int = 0,
    level: int = 0,
) -> NormReport:
    """Discrete C^{k,alpha} norm.

    Maximum over derivative orders 0..k of the sup magnitude, plus the
    alpha-Hoelder quotient of the order-k divided differences.  Pairs are
    sampled per the module policy (exact for small grids).
    """
    if k < 0 or int(k) != k:
        raise ValueError("derivative count k must be a nonnegative integer")
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    sup = 0.0
    kth = curve
    for s in range(0, k + 1):
        cs = curve if s == 0 else finite_difference(curve, s)
        if s == k:
            kth = cs
        sup = max(sup, float(np.max(np.sqrt(np.sum(np.abs(cs.values) ** 2, axis=1)))))
    quot = _pair_max(curve.grid.nodes, kth.values, float(alpha), seed)
    return NormReport(
        kind="holder",
        value=sup + quot,
        k=int(k),
        alpha=float(alpha),
        level=level,
        grid_size=len(curve.grid),
    )


@dataclass(frozen=True)
class QpReport:
    """Normalised norm chain for one exponent pair (q < p)."""

    q: float
    p: float
    weak_q_star: float
    lq_star: float
    weak_p_star: float
    factor: float
    lower_holds: bool
    upper_holds: bool

    @property
    def holds(self) -> bool:
        return self.lower_holds and self.upper_holds

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "p": self.p,
            "weak_q_star": self.weak_q_star,
            "lq_star": self.lq_star,
            "weak_p_star": self.weak_p_star,
            "factor": self.factor,
            "lower_holds": self.lower_holds,
            "upper_holds": self.upper_holds,
        }


def check_qp_inequality(curve: SampledCurve, q: float, p: float, *, slack: float = 1e-9) -> QpReport:
    """Weak/strong norm chain on the derivative, with normalised norms.

    Checks  weak-q* <= Lq* <= (p/(p-q))^(1/q) * weak-p*  within slack.
    """
    if not (0 < q < p):
        raise ValueError("need 0 < q < p")
    m, w = derivative_samples(curve)
    omega = curve.grid.length
    lq = math.fsum((m**q) * w) ** (1.0 / q)
    lq_star = omega ** (-1.0 / q) * lq

    def weak_star(expo: float) -> float:
        return omega ** (-1.0 / expo) * _weak_value(m, w, expo)

    weak_q = weak_star(q)
    weak_p = weak_star(p)
    factor = (p / (p - q)) ** (1.0 / q)
    return QpReport(
        q=float(q),
        p=float(p),
        weak_q_star=float(weak_q),
        lq_star=float(lq_star),
        weak_p_star=float(weak_p),
        factor=float(factor),
        lower_holds=bool(weak_q <= lq_star + slack),
        upper_holds=bool(lq_star <= factor * weak_p + slack),
    )


@dataclass(frozen=True)
class InterpolationReport:
    """Measured constant for the derivative interpolation bound."""

    m: int
    alpha: float
    s: int
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "alpha": self.alpha,
            "s": self.s,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
        }


def check_interpolation_inequality(
    curve: SampledCurve,
    m: int,
    alpha: float,
    s: int,
    *,
    seed: int = 0,
) -> InterpolationReport:
    """Measure sup|f^(s)| against the oscillation/Hoelder interpolation bracket.

    The bracket is |I|^(-s) * (V + V^((m+alpha-s)/(m+alpha))
    * Hoelder_alpha(f^(m))^(s/(m+alpha)) * |I|^s) where V is the diameter
    of the values over the interval.  The returned ratio is the measured
    constant; it stays bounded as the grid refines.
    """
    if not (1 <= s <= m + 1):
        raise ValueError("need 1 <= s <= m + 1")
    if not (0.0 < alpha <= 1.0):
        raise ValueError("alpha must lie in (0, 1]")
    ds = finite_difference(curve, s)
    lhs = float(np.max(np.sqrt(np.sum(np.abs(ds.values) ** 2, axis=1))))
    diam = _pair_max(curve.grid.nodes, curve.values, 0.0, seed)
    mth = curve if m == 0 else finite_difference(curve, m)
    hold = _pair_max(curve.grid.nodes, mth.values, float(alpha), seed)
    length = curve.grid.length
    expo = (m + alpha - s) / (m + alpha)
    rhs = length ** (-float(s)) * (diam + diam**expo * hold ** (s / (m + alpha)) * length**s)
    return InterpolationReport(m=int(m), alpha=float(alpha), s=int(s), lhs=lhs, rhs=float(rhs))


@dataclass(frozen=True)
class MainBoundReport:
    """Measured constant of the lift-derivative bound."""

    p: float
    lhs: float
    rhs: float
    degenerate: bool

    @property
    def ratio(self) -> float:
        if self.rhs == 0.0:
            return 0.0 if self.lhs == 0.0 else math.inf
        return self.lhs / self.rhs

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "degenerate": self.degenerate,
        }


def verify_main_bound(
    a: SampledCurve,
    lift: LiftedCurve,
    spec: RepresentationSpec,
    p: float,
    *,
    seed: int = 0,
) -> MainBoundReport:
    """Measured constant in ||lift'||_p <= C max_j ||a_j||^{1/d_j}.

    The component norms are C^{d-1,1} norms for maximal degree d; the
    ratio lhs/rhs is the measured constant, scale-invariant by the
    homogeneity of both sides.  Exponents at or above d/(d-1) are
    rejected: the bound genuinely fails there.
    """
    dcrit = spec.critical_exponent
    if p >= dcrit:
        raise ExponentOutOfRange(f"p = {p} is not below the critical exponent {dcrit}")
    if a.n_components != spec.n_invariants:
        raise ShapeMismatch(
            f"curve has {a.n_components} components, spec emits {spec.n_invariants}"
        )
    d = spec.max_degree
    lhs = lp_derivative_norm(lift.as_curve(), p).value
    rhs = 0.0
    for j, dj in enumerate(spec.degrees):
        nj = holder_norm(a.component(j), d - 1, 1.0, seed=seed).value
        rhs = max(rhs, nj ** (1.0 / dj))
    degenerate = rhs == 0.0 or lhs == 0.0
    return MainBoundReport(p=float(p), lhs=float(lhs), rhs=float(rhs), degenerate=degenerate)


# ---------------------------------------------------------------------------
# critical exponent scan


@dataclass(frozen=True)
class ScanProblem:
    """An invariant curve given by an exact oracle, plus its descriptor."""

    spec: RepresentationSpec
    oracle: Callable[[float], Sequence[complex]]
    interval: tuple[float, float] = (-1.0, 1.0)


@dataclass(frozen=True)
class ExponentScanReport:
    kind: str
    max_degree: int
    critical_exponent: float
    p_grid: tuple[float, ...]
    grid_sizes: tuple[int, ...]
    values: tuple[tuple[float, ...], ...]  # [level][p]
    weak_critical: tuple[float, ...]  # weak quasinorm at d' per level
    verdicts: tuple[str, ...]  # per p: stable | diverging | inconclusive
    p_star: float | None
    at_boundary: str | None  # None | "low" | "high"

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "max_degree": self.max_degree,
            "critical_exponent": self.critical_exponent,
            "p_grid": list(self.p_grid),
            "grid_sizes": list(self.grid_sizes),
            "values": [list(v) for v in self.values],
            "weak_critical": list(self.weak_critical),
            "verdicts": list(self.verdicts),
            "p_star": self.p_star,
            "at_boundary": self.at_boundary,
        }


def _sample_problem(problem: ScanProblem, nodes: np.ndarray) -> SampledCurve:
    rows = [np.atleast_1d(np.asarray(problem.oracle(float(t)), dtype=complex)) for t in nodes]
    return make_sampled_curve(nodes, rows)


def _lift_problem(problem: ScanProblem, curve: SampledCurve) -> LiftedCurve:
    # No oracle here: inside the scan the lift must see only the sampled
    # grid, otherwise ambiguity refinement re-resolves the zero set to
    # machine depth at every level and the norms stop moving.
    spec = problem.spec
    if spec.kind == "cyclic":
        return continuous_radical(curve, spec.q)
    if spec.kind == "symmetric":
        return continuous_roots(curve)
    raise ShapeMismatch(f"no constructive lift for kind '{spec.kind}'")


def _initial_grid(lo: float, hi: float, n_cells: int) -> np.ndarray:
    """Near-uniform grid with interior nodes shifted off the lattice.

    The golden-ratio offset keeps 0 (and every midpoint produced by
    later bisections) from landing exactly on a node, and breaks mirror
    symmetry of cells about 0, so threshold ties cannot pair a cell with
    its reflection.
    """
    gamma = 0.5 * (3.0 - math.sqrt(5.0))  # irrational, in (0, 1/2)
    h = (hi - lo) / n_cells
    interior = lo + h * (np.arange(n_cells - 1) + gamma)
    return np.concatenate([[lo], interior, [hi]])


def _refine_once(
    problem: ScanProblem, curve: SampledCurve, lift: LiftedCurve, top_fraction: float
) -> SampledCurve | None:
    """Bisect the cells whose lift-derivative magnitude is largest.

    Only the new midpoints are pushed through the oracle.  Returns None
    when every chosen cell is already at float resolution.
    """
    m, _ = derivative_samples(lift.as_curve())
    count = max(1, math.ceil(m.size * top_fraction))
    chosen = np.sort(np.argsort(-m, kind="stable")[:count])
    nodes = curve.grid.nodes
    mids = 0.5 * (nodes[chosen] + nodes[chosen + 1])
    keep = (mids > nodes[chosen]) & (mids < nodes[chosen + 1])
    mids = mids[keep]
    if mids.size == 0:
        return None
    rows = np.asarray(
        [np.atleast_1d(np.asarray(problem.oracle(float(t)), dtype=complex)) for t in mids]
    )
    where = np.searchsorted(nodes, mids)
    return make_sampled_curve(
        np.insert(nodes, where, mids), np.insert(curve.values, where, rows, axis=0)
    )


def critical_exponent_scan(
    problem: ScanProblem,
    p_grid: Sequence[float],
    levels: int = 6,
    *,
    n_initial: int = 4096,
    top_fraction: float = 0.02,
    stable_tol: float = 0.02,
    diverge_rate: float = 1.05,
) -> ExponentScanReport:
    """Classify L^p derivative norms as stable or diverging under refinement.

    Each level doubles the cell count through repeated bisection of the
    cells whose lift-derivative magnitude is in the top fraction; a small
    fraction means many rounds per doubling, each digging one dyadic
    scale deeper at the singular points.  Per p, the norm sequence
    across levels is stable when the last two levels differ by less than
    stable_tol relatively, diverging when every level grows by at least
    the diverge_rate factor, inconclusive otherwise.  The estimated
    critical exponent is the midpoint between the largest stable and the
    smallest diverging p.
    """
    spec = problem.spec
    dcrit = spec.critical_exponent
    if not math.isfinite(dcrit):
        raise ExponentOutOfRange("scan needs a representation with max degree >= 2")
    ps = [float(p) for p in p_grid]
    if not ps:
        raise ValueError("p_grid must be nonempty")
    if min(ps) < 1.0 or max(ps) > 2.0 * dcrit + 1e-12:
        raise ValueError(f"p_grid must lie within [1, {2.0 * dcrit}]")
    if levels < 3:
        raise ValueError("need at least three refinement levels")

    lo, hi = problem.interval
    curve = _sample_problem(problem, _initial_grid(lo, hi, int(n_initial)))
    lift = _lift_problem(problem, curve)

    level_lifts: list[LiftedCurve] = []
    for level in range(levels):
        level_lifts.append(lift)
        if level < levels - 1:
            target = 2 * (len(curve.grid) - 1)
            while len(curve.grid) - 1 < target:
                refined = _refine_once(problem, curve, lift, top_fraction)
                if refined is None:
                    break  # every chosen cell is at float resolution
                curve = refined
                lift = _lift_problem(problem, curve)

    def norms_for_level(level: int) -> tuple[float, ...]:
        curve = level_lifts[level].as_curve()
        return tuple(lp_derivative_norm(curve, p, level=level).value for p in ps)

    values = tuple(parallel_map(norms_for_level, list(range(levels))))
    weak_critical = tuple(
        weak_lp_quasinorm(level_lifts[level].as_curve(), dcrit, level=level).value
        for level in range(levels)
    )

    verdicts: list[str] = []
    for ip in range(len(ps)):
        seq = np.asarray([values[level][ip] for level in range(levels)])
        prev, last = seq[-2], seq[-1]
        rel = abs(last - prev) / abs(prev) if prev != 0 else abs(last)
        if rel < stable_tol:
            verdicts.append("stable")
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(seq[:-1] > 0, seq[1:] / seq[:-1], math.inf)
        verdicts.append("diverging" if np.all(ratios >= diverge_rate) else "inconclusive")

    stable_ps = [p for p, v in zip(ps, verdicts) if v == "stable"]
    diverging_ps = [p for p, v in zip(ps, verdicts) if v == "diverging"]
    p_star: float | None = None
    at_boundary: str | None = None
    if stable_ps and diverging_ps:
        p_star = 0.5 * (max(stable_ps) + min(diverging_ps))
    elif stable_ps:
        at_boundary = "high"
    else:
        at_boundary = "low"

    return ExponentScanReport(
        kind=spec.kind,
        max_degree=spec.max_degree,
        critical_exponent=float(dcrit),
        p_grid=tuple(ps),
        grid_sizes=tuple(len(l.grid) for l in level_lifts),
        values=values,
        weak_critical=weak_critical,
        verdicts=tuple(verdicts),
        p_star=p_star,
        at_boundary=at_boundary,
    )
