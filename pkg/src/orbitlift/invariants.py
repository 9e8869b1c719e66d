"""Invariant maps for the supported representations.

Each map sends an orbit to a complex vector whose components are
homogeneous of the degrees recorded on the RepresentationSpec.  The
polarized generators are emitted as plain distinct-index sums, without
any normalising integer factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import numpy as np

from .core import AQPoint, RepresentationSpec, polarization_index
from .errors import ShapeMismatch

__all__ = [
    "InvariantValue",
    "power_map",
    "elementary_symmetric",
    "polarized_invariants",
    "noether_invariants",
    "evaluate_sigma",
    "apply_group_element",
    "group_elements",
]


@dataclass(frozen=True)
class InvariantValue:
    """Invariant vector plus the homogeneity degree of each component."""

    values: np.ndarray
    degrees: tuple[int, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (len(self.degrees),):
            raise ShapeMismatch("one degree per invariant component required")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def power_map(z: complex, d: int) -> complex:
    """z**d by repeated multiplication (d a positive integer)."""
    if d < 1 or int(d) != d:
        raise ValueError("exponent must be a positive integer")
    out = complex(z)
    for _ in range(int(d) - 1):
        out *= z
    return out


def elementary_symmetric(points: Sequence[complex] | np.ndarray) -> np.ndarray:
    """All elementary symmetric functions e_1..e_Q of the inputs.

    Uses the product recurrence: appending a point p maps
    e_i -> e_i + p * e_{i-1}.  Cost O(Q^2).
    """
    pts = np.asarray(points, dtype=complex).ravel()
    q = pts.size
    if q == 0:
        raise ShapeMismatch("need at least one point")
    e = np.zeros(q + 1, dtype=complex)
    e[0] = 1.0
    for m, p in enumerate(pts, start=1):
        e[1 : m + 1] = e[1 : m + 1] + p * e[0:m]
    return e[1:]


def _distinct_index_sum(columns: list[np.ndarray]) -> complex:
    """Sum over injective index tuples of the product of column entries."""
    q = columns[0].size
    k = len(columns)
    total = 0.0 + 0.0j
    for idx in permutations(range(q), k):
        prod = 1.0 + 0.0j
        for col, i in zip(columns, idx):
            prod *= col[i]
        total += prod
    return total


def polarized_invariants(point: AQPoint) -> InvariantValue:
    """Polarized elementary symmetric functions of an unordered tuple.

    For every degree k <= Q and every multiset of coordinate columns the
    generator is the sum over distinct point indices of the entry product;
    for n = 1 this reduces to k! * e_k.  Generators appear in the
    deterministic order of core.polarization_index.
    """
    mat = point.points
    cols = [mat[:, c] for c in range(point.n)]
    vals = []
    degs = []
    for k, col_idx in polarization_index(point.q, point.n):
        vals.append(_distinct_index_sum([cols[c] for c in col_idx]))
        degs.append(k)
    return InvariantValue(np.asarray(vals), tuple(degs))


def noether_invariants(spec: RepresentationSpec, p: Sequence[float] | np.ndarray) -> InvariantValue:
    """Invariants of a finite orthogonal matrix group at the point p.

    The full orbit (g p) over the group is formed and fed to the polarized
    generators of the symmetric group on |G| letters; the result is
    invariant under replacing p by any g p.
    """
    if spec.kind != "matrix_group":
        raise ShapeMismatch("noether_invariants needs a matrix-group descriptor")
    vec = np.asarray(p, dtype=float).ravel()
    if vec.shape != (spec.dim,):
        raise ShapeMismatch(f"point must have {spec.dim} real coordinates")
    orbit = np.stack([g @ vec for g in spec.group_matrices()])
    return polarized_invariants(AQPoint(orbit.astype(complex)))


def evaluate_sigma(spec: RepresentationSpec, point) -> InvariantValue:
    """Evaluate the invariant map of the descriptor at a point of V."""
    if spec.kind == "cyclic":
        z = np.asarray(point, dtype=complex).ravel()
        if z.size != 1:
            raise ShapeMismatch("cyclic representation takes a single complex number")
        return InvariantValue(
            np.asarray([power_map(complex(z[0]), spec.q)]), spec.degrees
        )
    if spec.kind == "symmetric":
        pts = np.asarray(point, dtype=complex).ravel()
        if pts.size != spec.q:
            raise ShapeMismatch(f"expected {spec.q} complex numbers, got {pts.size}")
        return InvariantValue(elementary_symmetric(pts), spec.degrees)
    if spec.kind == "qtuple":
        if not isinstance(point, AQPoint):
            raise ShapeMismatch("qtuple representation takes an AQPoint")
        if point.q != spec.q or point.n != spec.dim:
            raise ShapeMismatch(
                f"expected a {spec.q}-tuple in C^{spec.dim}, got {point.q}-tuple in C^{point.n}"
            )
        return polarized_invariants(point)
    if spec.kind == "matrix_group":
        return noether_invariants(spec, point)
    raise ShapeMismatch(f"unknown representation kind '{spec.kind}'")


def group_elements(spec: RepresentationSpec) -> list:
    """Concrete group elements usable with apply_group_element.

    Rotation powers for cyclic, permutations for symmetric/qtuple (all Q!
    of them, so keep Q small), matrices for matrix groups.
    """
    if spec.kind == "cyclic":
        return list(range(spec.q))
    if spec.kind in ("symmetric", "qtuple"):
        return [tuple(p) for p in permutations(range(spec.q))]
    if spec.kind == "matrix_group":
        return spec.group_matrices()
    raise ShapeMismatch(f"unknown representation kind '{spec.kind}'")


def apply_group_element(spec: RepresentationSpec, g, point):
    """Act on a point of V: rotate, permute, or multiply by a matrix."""
    if spec.kind == "cyclic":
        return np.exp(2j * np.pi * int(g) / spec.q) * np.asarray(point, dtype=complex)
    if spec.kind == "symmetric":
        pts = np.asarray(point, dtype=complex).ravel()
        return pts[list(g)]
    if spec.kind == "qtuple":
        if not isinstance(point, AQPoint):
            raise ShapeMismatch("qtuple representation acts on AQPoints")
        return AQPoint(point.points[list(g)])
    if spec.kind == "matrix_group":
        return np.asarray(g) @ np.asarray(point, dtype=float)
    raise ShapeMismatch(f"unknown representation kind '{spec.kind}'")
