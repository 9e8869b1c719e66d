"""Grids, sampled curves, unordered tuples and representation descriptors.

Everything downstream operates on immutable sampled data: a strictly
increasing parameter grid plus one complex vector per node.  Derivatives
are always divided differences on the grid itself; no interpolation model
is assumed beyond piecewise linearity.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    CsvFormatError,
    LengthMismatch,
    NonMonotoneGrid,
    NotAGroup,
    OrderTooHigh,
    OutOfRange,
    RaggedComponents,
)

__all__ = [
    "Grid",
    "SampledCurve",
    "SampledGrid2D",
    "AQPoint",
    "RepresentationSpec",
    "make_sampled_curve",
    "finite_difference",
    "refine",
    "read_curve_csv",
    "write_curve_csv",
    "read_tuple_csv",
    "write_tuple_csv",
    "read_grid2d_csv",
    "write_grid2d_csv",
]


@dataclass(frozen=True)
class Grid:
    """Strictly increasing sequence of parameter values (at least two)."""

    nodes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.nodes, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise NonMonotoneGrid("grid needs at least two one-dimensional nodes")
        if not np.all(np.isfinite(arr)):
            raise NonMonotoneGrid("grid nodes must be finite")
        if not np.all(np.diff(arr) > 0):
            raise NonMonotoneGrid("grid nodes must be strictly increasing")
        arr.setflags(write=False)
        object.__setattr__(self, "nodes", arr)

    def __len__(self) -> int:
        return int(self.nodes.size)

    @property
    def length(self) -> float:
        """Total length of the parameter interval."""
        return float(self.nodes[-1] - self.nodes[0])

    @property
    def widths(self) -> np.ndarray:
        """Cell widths, one per consecutive node pair."""
        return np.diff(self.nodes)

    @property
    def span(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])


@dataclass(frozen=True)
class SampledCurve:
    """Complex vector samples over a grid.

    ``values`` has shape (len(grid), n_components).  ``synthetic`` marks
    nodes whose values were produced by interpolation rather than by an
    oracle or original data.
    """

    grid: Grid
    values: np.ndarray
    synthetic: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise RaggedComponents("values must form a rectangular node-by-component array")
        if vals.shape[0] != len(self.grid):
            raise LengthMismatch(
                f"{vals.shape[0]} value rows for {len(self.grid)} grid nodes"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        syn = self.synthetic
        if syn is None:
            syn = np.zeros(len(self.grid), dtype=bool)
        else:
            syn = np.array(syn, dtype=bool)
            if syn.shape != (len(self.grid),):
                raise LengthMismatch("synthetic flags must have one entry per node")
        syn.setflags(write=False)
        object.__setattr__(self, "synthetic", syn)

    @property
    def n_components(self) -> int:
        return int(self.values.shape[1])

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def component(self, j: int) -> "SampledCurve":
        """Single component as a scalar curve over the same grid."""
        return SampledCurve(self.grid, self.values[:, j : j + 1], self.synthetic)


@dataclass(frozen=True)
class SampledGrid2D:
    """Complex vector samples over a tensor grid, with an optional mask.

    ``values`` has shape (len(x_grid), len(y_grid), n_components).  A False
    mask entry removes the node from the domain (used for annuli and other
    holed regions); masked values are ignored.
    """

    x_grid: Grid
    y_grid: Grid
    values: np.ndarray
    mask: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        if vals.ndim == 2:
            vals = vals[:, :, None]
        if vals.ndim != 3:
            raise RaggedComponents("2-D values must be node-by-node-by-component")
        if vals.shape[0] != len(self.x_grid) or vals.shape[1] != len(self.y_grid):
            raise LengthMismatch(
                f"value block {vals.shape[:2]} does not match grid "
                f"({len(self.x_grid)}, {len(self.y_grid)})"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        mask = self.mask
        if mask is None:
            mask = np.ones(vals.shape[:2], dtype=bool)
        else:
            mask = np.array(mask, dtype=bool)
            if mask.shape != vals.shape[:2]:
                raise LengthMismatch("mask shape must match the grid")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @property
    def n_components(self) -> int:
        return int(self.values.shape[2])


class AQPoint:
    """Unordered multiset of Q points in C^n.

    Points are stored in a canonical order (lexicographic by real/imaginary
    parts coordinate-wise), so equality and hashing are order-insensitive:
    two AQPoints are equal iff some bijection matches their points exactly.
    """

    __slots__ = ("points",)

    def __init__(self, points: Iterable[Sequence[complex]] | np.ndarray):
        arr = np.array(points, dtype=complex)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise RaggedComponents("an AQPoint is a nonempty Q-by-n point block")
        keys = []
        for c in range(arr.shape[1] - 1, -1, -1):
            keys.append(arr[:, c].imag)
            keys.append(arr[:, c].real)
        order = np.lexsort(tuple(keys))
        arr = arr[order]
        arr.setflags(write=False)
        self.points = arr

    @property
    def q(self) -> int:
        return int(self.points.shape[0])

    @property
    def n(self) -> int:
        return int(self.points.shape[1])

    def __eq__(self, other) -> bool:
        if not isinstance(other, AQPoint):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )

    def __hash__(self) -> int:
        return hash((self.points.shape, self.points.tobytes()))

    def __repr__(self) -> str:
        rows = ", ".join(str(tuple(row)) for row in self.points)
        return f"AQPoint([{rows}])"


def polarization_index(q: int, n: int) -> list[tuple[int, tuple[int, ...]]]:
    """Deterministic generator order for polarized invariants.

    One entry per (degree k, multiset of coordinate columns), ordered
    lexicographically by (k, sorted column indices).
    """
    out: list[tuple[int, tuple[int, ...]]] = []
    for k in range(1, q + 1):
        for cols in combinations_with_replacement(range(n), k):
            out.append((k, cols))
    return out


@dataclass(frozen=True)
class RepresentationSpec:
    """Descriptor of a finite-group representation and its invariant map.

    kind is one of "cyclic", "symmetric", "qtuple", "matrix_group".  The
    degrees tuple lists the homogeneity degree of each emitted invariant,
    in evaluation order.
    """

    kind: str
    degrees: tuple[int, ...]
    q: int = 1
    dim: int = 1
    matrices: tuple[bytes, ...] | None = None

    @classmethod
    def cyclic(cls, d: int) -> "RepresentationSpec":
        if d < 1:
            raise ValueError("cyclic order must be a positive integer")
        return cls(kind="cyclic", degrees=(int(d),), q=int(d), dim=1)

    @classmethod
    def symmetric(cls, q: int) -> "RepresentationSpec":
        if q < 1:
            raise ValueError("tuple size must be a positive integer")
        return cls(kind="symmetric", degrees=tuple(range(1, q + 1)), q=int(q), dim=1)

    @classmethod
    def qtuple(cls, q: int, n: int) -> "RepresentationSpec":
        if q < 1 or n < 1:
            raise ValueError("tuple size and point dimension must be positive")
        degs = tuple(k for k, _ in polarization_index(q, n))
        return cls(kind="qtuple", degrees=degs, q=int(q), dim=int(n))

    @classmethod
    def matrix_group(cls, matrices: Sequence[np.ndarray]) -> "RepresentationSpec":
        mats = [np.array(m, dtype=float) for m in matrices]
        if not mats:
            raise NotAGroup("empty matrix list")
        n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n):
                raise NotAGroup("matrices must all be square of the same size")
            if not np.allclose(m @ m.T, np.eye(n), atol=1e-10):
                raise NotAGroup("matrices must be orthogonal")
        # closure and identity, checked by value up to tolerance
        def find(m) -> int:
            for i, g in enumerate(mats):
                if np.allclose(m, g, atol=1e-10):
                    return i
            return -1

        if find(np.eye(n)) < 0:
            raise NotAGroup("identity matrix missing")
        for a in mats:
            for b in mats:
                if find(a @ b) < 0:
                    raise NotAGroup("matrix list is not closed under products")
        degs = tuple(k for k, _ in polarization_index(len(mats), n))
        frozen = tuple(m.tobytes() for m in mats)
        return cls(kind="matrix_group", degrees=degs, q=len(mats), dim=n, matrices=frozen)

    def group_matrices(self) -> list[np.ndarray]:
        if self.matrices is None:
            raise ValueError("not a matrix-group descriptor")
        return [
            np.frombuffer(b, dtype=float).reshape(self.dim, self.dim)
            for b in self.matrices
        ]

    @property
    def max_degree(self) -> int:
        return max(self.degrees)

    @property
    def critical_exponent(self) -> float:
        """d / (d - 1) for maximum degree d; infinite when d == 1."""
        d = self.max_degree
        if d <= 1:
            return math.inf
        return d / (d - 1)

    @property
    def n_invariants(self) -> int:
        return len(self.degrees)


def make_sampled_curve(nodes, values) -> SampledCurve:
    """Validate raw node/value data into a SampledCurve.

    Raises NonMonotoneGrid, LengthMismatch or RaggedComponents with the
    offending index in the message.
    """
    rows = list(values)
    widths = set()
    for row in rows:
        arr = np.atleast_1d(np.asarray(row))
        widths.add(arr.shape[-1] if arr.ndim else 1)
    if len(widths) > 1:
        raise RaggedComponents(f"rows have mixed component counts {sorted(widths)}")
    return SampledCurve(Grid(np.asarray(nodes, dtype=float)), np.array(rows, dtype=complex))


def finite_difference(curve: SampledCurve, order: int) -> SampledCurve:
    """Divided-difference estimate of the order-th derivative, same grid.

    Stencils are the order+1 nearest consecutive nodes, centred where
    possible and one-sided at the boundary, so the output grid equals the
    input grid.  Exact on polynomials of degree <= order.
    """
    s = int(order)
    if s < 1:
        raise ValueError("difference order must be >= 1")
    n = len(curve.grid)
    if s >= n:
        raise OrderTooHigh(f"order {s} needs at least {s + 1} nodes, grid has {n}")
    x = curve.grid.nodes
    dd = curve.values
    for r in range(1, s + 1):
        dd = (dd[1:] - dd[:-1]) / (x[r:] - x[:-r])[:, None]
    start = np.clip(np.arange(n) - s // 2, 0, n - 1 - s)
    return SampledCurve(curve.grid, math.factorial(s) * dd[start])


def refine(
    curve: SampledCurve,
    cells: Iterable[int],
    oracle: Callable[[float], complex | Sequence[complex]] | None = None,
) -> SampledCurve:
    """Bisect the listed cells (index i is the cell between nodes i, i+1).

    New node values come from the oracle when given, otherwise from linear
    interpolation; interpolated nodes are flagged synthetic.
    """
    n_cells = len(curve.grid) - 1
    wanted = sorted({int(c) for c in cells})
    for c in wanted:
        if c < 0 or c >= n_cells:
            raise OutOfRange(f"cell index {c} outside [0, {n_cells})")
    marks = set(wanted)
    nodes: list[float] = []
    rows: list[np.ndarray] = []
    syn: list[bool] = []
    x = curve.grid.nodes
    for i in range(len(x)):
        nodes.append(float(x[i]))
        rows.append(curve.values[i])
        syn.append(bool(curve.synthetic[i]))
        if i in marks:
            mid = 0.5 * (x[i] + x[i + 1])
            nodes.append(float(mid))
            if oracle is None:
                rows.append(0.5 * (curve.values[i] + curve.values[i + 1]))
                syn.append(True)
            else:
                rows.append(np.atleast_1d(np.asarray(oracle(mid), dtype=complex)))
                syn.append(False)
    return SampledCurve(Grid(np.asarray(nodes)), np.array(rows, dtype=complex), np.asarray(syn))


# ---------------------------------------------------------------------------
# delimited input/output


def _component_header(n: int) -> list[str]:
    cols = []
    for j in range(1, n + 1):
        cols.append(f"re_{j}")
        cols.append(f"im_{j}")
    return cols


def _check_header(actual: list[str], expected: list[str]) -> None:
    for i, want in enumerate(expected):
        got = actual[i] if i < len(actual) else "<missing>"
        if got.strip() != want:
            raise CsvFormatError(f"column {i + 1}: expected '{want}', found '{got}'")
    if len(actual) > len(expected):
        raise CsvFormatError(f"unexpected trailing column '{actual[len(expected)]}'")


def write_curve_csv(path: str | Path, curve: SampledCurve) -> None:
    """Write `t,re_1,im_1,...,re_n,im_n` rows sorted by t."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + _component_header(curve.n_components))
        for i, t in enumerate(curve.grid.nodes):
            row = [repr(float(t))]
            for v in curve.values[i]:
                row.append(repr(float(v.real)))
                row.append(repr(float(v.imag)))
            w.writerow(row)


def read_curve_csv(path: str | Path) -> SampledCurve:
    """Read the curve format written by write_curve_csv."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file") from None
        if not header or header[0].strip() != "t":
            raise CsvFormatError("column 1: expected 't'")
        if (len(header) - 1) % 2 != 0 or len(header) < 3:
            raise CsvFormatError("need one or more re_j,im_j column pairs after 't'")
        n = (len(header) - 1) // 2
        _check_header(header, ["t"] + _component_header(n))
        nodes = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvFormatError(f"line {lineno}: expected {len(header)} fields")
            try:
                vals = [float(f) for f in row]
            except ValueError as exc:
                raise CsvFormatError(f"line {lineno}: {exc}") from None
            nodes.append(vals[0])
            rows.append([complex(vals[2 * j + 1], vals[2 * j + 2]) for j in range(n)])
    try:
        return make_sampled_curve(nodes, rows)
    except NonMonotoneGrid as exc:
        raise CsvFormatError(f"t column: {exc}") from None


def write_tuple_csv(path: str | Path, nodes: Sequence[float], tuples: Sequence[AQPoint]) -> None:
    """Write unordered-tuple samples: Q rows per node, `t,point,re_1,...`."""
    if len(nodes) != len(tuples):
        raise LengthMismatch("one tuple per node required")
    n = tuples[0].n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "point"] + _component_header(n))
        for t, aq in zip(nodes, tuples):
            for b, pt in enumerate(aq.points):
                row = [repr(float(t)), str(b)]
                for v in pt:
                    row.append(repr(float(v.real)))
                    row.append(repr(float(v.imag)))
                w.writerow(row)


def read_tuple_csv(path: str | Path) -> tuple[np.ndarray, list[AQPoint]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file") from None
        if len(header) < 4 or (len(header) - 2) % 2 != 0:
            raise CsvFormatError("expected 't,point,re_1,im_1,...' columns")
        n = (len(header) - 2) // 2
        _check_header(header, ["t", "point"] + _component_header(n))
        groups: dict[float, list] = {}
        order: list[float] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t = float(row[0])
                vals = [float(f) for f in row[2:]]
            except (ValueError, IndexError) as exc:
                raise CsvFormatError(f"line {lineno}: {exc}") from None
            if t not in groups:
                groups[t] = []
                order.append(t)
            groups[t].append([complex(vals[2 * j], vals[2 * j + 1]) for j in range(n)])
    qs = {len(v) for v in groups.values()}
    if len(qs) != 1:
        raise CsvFormatError(f"tuples have mixed sizes {sorted(qs)}")
    return np.asarray(order, dtype=float), [AQPoint(groups[t]) for t in order]


def write_grid2d_csv(path: str | Path, grid: SampledGrid2D) -> None:
    """Write `x,y,re_1,...` rows in row-major order; masked nodes omitted."""
    n = grid.n_components
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"] + _component_header(n))
        for ix, x in enumerate(grid.x_grid.nodes):
            for iy, y in enumerate(grid.y_grid.nodes):
                if not grid.mask[ix, iy]:
                    continue
                row = [repr(float(x)), repr(float(y))]
                for v in grid.values[ix, iy]:
                    row.append(repr(float(v.real)))
                    row.append(repr(float(v.imag)))
                w.writerow(row)


def read_grid2d_csv(path: str | Path) -> SampledGrid2D:
    """Read the 2-D format; (x, y) pairs absent from the file become mask holes."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file") from None
        if len(header) < 4 or (len(header) - 2) % 2 != 0:
            raise CsvFormatError("expected 'x,y,re_1,im_1,...' columns")
        n = (len(header) - 2) // 2
        _check_header(header, ["x", "y"] + _component_header(n))
        entries: dict[tuple[float, float], list[complex]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                vals = [float(f) for f in row]
            except ValueError as exc:
                raise CsvFormatError(f"line {lineno}: {exc}") from None
            key = (vals[0], vals[1])
            entries[key] = [complex(vals[2 + 2 * j], vals[3 + 2 * j]) for j in range(n)]
    if not entries:
        raise CsvFormatError("no data rows")
    xs = sorted({k[0] for k in entries})
    ys = sorted({k[1] for k in entries})
    values = np.zeros((len(xs), len(ys), n), dtype=complex)
    mask = np.zeros((len(xs), len(ys)), dtype=bool)
    xi = {x: i for i, x in enumerate(xs)}
    yi = {y: i for i, y in enumerate(ys)}
    for (x, y), v in entries.items():
        values[xi[x], yi[y]] = v
        mask[xi[x], yi[y]] = True
    return SampledGrid2D(Grid(np.asarray(xs)), Grid(np.asarray(ys)), values, mask)
