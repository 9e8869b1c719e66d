"""Shared corpus builders for the test suite.

Seeded trigonometric polynomials are the stock random-but-smooth curves:
periodic, infinitely differentiable, cheap to evaluate at arbitrary
points, so every lift test gets a midpoint oracle for free.
"""

from __future__ import annotations

import numpy as np
import pytest

from orbitlift import make_sampled_curve


class TrigPoly:
    """Complex trigonometric polynomial sum_k c[j, k] exp(i k t) per component."""

    def __init__(self, rng: np.random.Generator, n_components: int = 1,
                 max_freq: int = 3, scale: float = 1.0):
        freqs = np.arange(-max_freq, max_freq + 1)
        coeffs = rng.normal(size=(n_components, freqs.size)) + 1j * rng.normal(
            size=(n_components, freqs.size)
        )
        # damp high frequencies so derivatives stay moderate
        coeffs *= scale / (1.0 + np.abs(freqs)[None, :]) ** 2
        self.freqs = freqs
        self.coeffs = coeffs

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        phases = np.exp(1j * np.multiply.outer(t, self.freqs))
        out = phases @ self.coeffs.T
        return out if t.ndim else out[()]

    def curve(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        vals = self(nodes)
        if vals.ndim == 1:
            vals = vals[:, None]
        return make_sampled_curve(nodes, vals)


def curve_from_fn(nodes, fn):
    nodes = np.asarray(nodes, dtype=float)
    vals = np.asarray([fn(t) for t in nodes], dtype=complex)
    if vals.ndim == 1:
        vals = vals[:, None]
    return make_sampled_curve(nodes, vals)


def step_derivative_curve(rng, n_steps, cells_per_step=40):
    """Piecewise-linear curve whose derivative is a positive step function.

    Each plateau spans cells_per_step uniform cells, so excluding a single
    cell changes any plateau mass by at most 1/cells_per_step.
    """
    slopes = rng.lognormal(mean=0.0, sigma=1.0, size=n_steps)
    widths = rng.uniform(0.5, 1.5, size=n_steps)
    nodes = [0.0]
    values = [0.0]
    for slope, width in zip(slopes, widths):
        h = width / cells_per_step
        for _ in range(cells_per_step):
            nodes.append(nodes[-1] + h)
            values.append(values[-1] + slope * h)
    return make_sampled_curve(
        np.asarray(nodes), np.asarray(values, dtype=complex)[:, None]
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
