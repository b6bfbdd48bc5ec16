"""Grids and vector-valued grid functions on an interval.

The default grid is Chebyshev-Gauss-Lobatto with Clenshaw-Curtis quadrature
weights (they sum to b - a).  Grid-data derivatives in the solver path use
local finite-difference stencils (Fornberg weights), which keeps the formula
path independent of the global spectral differentiation matrices used by the
collocation oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

__all__ = [
    "Grid",
    "GridFunction",
    "cgl_grid",
    "uniform_grid",
    "chebyshev_gauss_nodes",
    "fornberg_weights",
    "stencil_derivative_matrix",
]


def _cgl_nodes(n: int, a: float, b: float) -> np.ndarray:
    x = np.cos(np.pi * np.arange(n) / (n - 1))[::-1]
    return (a + b) / 2 + (b - a) / 2 * x


def _clenshaw_curtis_weights(n: int, a: float, b: float) -> np.ndarray:
    """Quadrature weights at CGL nodes, exact for polynomials of degree n-1."""
    if n == 1:
        return np.array([b - a])
    m = n - 1
    c = np.zeros(n)
    for j in range(n):
        # integral of the j-th Lagrange cardinal = sum over even k of cosine terms
        s = 1.0
        for k in range(1, m // 2 + 1):
            f = 2.0 if 2 * k < m else 1.0
            s -= f * np.cos(2 * k * np.pi * j / m) / (4 * k * k - 1)
        c[j] = 2.0 * s / m
    c[0] /= 2.0
    c[-1] /= 2.0
    return c[::-1] * (b - a) / 2.0


def chebyshev_gauss_nodes(n: int, a: float, b: float) -> np.ndarray:
    """First-kind Chebyshev points (no endpoints), ascending on [a, b]."""
    t = np.cos((2 * np.arange(n) + 1) * np.pi / (2 * n))[::-1]
    return (a + b) / 2 + (b - a) / 2 * t


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at z from nodes x.

    Classic recursive algorithm; returns array (m+1, len(x)).
    """
    n = len(x)
    w = np.zeros((m + 1, n))
    w[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - z
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    w[k, i] = c1 * (k * w[k - 1, i - 1] - c5 * w[k, i - 1]) / c2
                w[0, i] = -c1 * c5 * w[0, i - 1] / c2
            for k in range(mn, 0, -1):
                w[k, j] = ((x[i] - z) * w[k, j] - k * w[k - 1, j]) / c3
            w[0, j] = (x[i] - z) * w[0, j] / c3
        c1 = c2
    return w


def stencil_derivative_matrix(nodes: np.ndarray, order: int, width: int = 7) -> np.ndarray:
    """Dense derivative matrix built from local Fornberg stencils.

    Each row differentiates the local polynomial through ``width`` nearest
    nodes; accuracy is O(h^(width-order)) for smooth data.
    """
    n = len(nodes)
    width = min(width, n)
    D = np.zeros((n, n))
    for i in range(n):
        lo = min(max(i - width // 2, 0), n - width)
        idx = np.arange(lo, lo + width)
        D[i, idx] = fornberg_weights(nodes[i], nodes[idx], order)[order]
    return D


@dataclass(frozen=True)
class Grid:
    """Strictly increasing nodes on [a, b] plus positive quadrature weights."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "cgl"

    def __post_init__(self):
        x, w = np.asarray(self.nodes, float), np.asarray(self.weights, float)
        if x.ndim != 1 or x.shape != w.shape:
            raise DimensionMismatch("nodes and weights must be matching 1-d arrays")
        if np.any(np.diff(x) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def n(self) -> int:
        return len(self.nodes)

    def derivative_matrix(self, order: int) -> np.ndarray:
        return stencil_derivative_matrix(self.nodes, order)


def cgl_grid(n: int, a: float, b: float) -> Grid:
    """Chebyshev-Gauss-Lobatto grid with Clenshaw-Curtis weights."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    return Grid(_cgl_nodes(n, a, b), _clenshaw_curtis_weights(n, a, b), "cgl")


def uniform_grid(n: int, a: float, b: float) -> Grid:
    """Uniform grid with trapezoid weights."""
    if n < 2:
        raise ValueError("need at least 2 nodes")
    x = np.linspace(a, b, n)
    h = (b - a) / (n - 1)
    w = np.full(n, h)
    w[0] = w[-1] = h / 2
    return Grid(x, w, "uniform")


class GridFunction:
    """X-valued function sampled on a grid: values has shape (dim, n_nodes)."""

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.asarray(values, dtype=complex)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2 or values.shape[1] != grid.n:
            raise DimensionMismatch(
                f"values shape {values.shape} does not match grid with {grid.n} nodes"
            )
        self.grid = grid
        self.values = values

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, grid: Grid, dim: int) -> "GridFunction":
        return cls(grid, np.zeros((dim, grid.n), dtype=complex))

    @classmethod
    def from_callable(cls, grid: Grid, dim: int, fn) -> "GridFunction":
        vals = np.array([np.asarray(fn(x), dtype=complex) for x in grid.nodes]).T
        return cls(grid, vals.reshape(dim, grid.n))

    def norm(self) -> float:
        """Weighted-l2 surrogate of the L2(a,b;X) norm."""
        per_node = np.sum(np.abs(self.values) ** 2, axis=0)
        return float(np.sqrt(np.sum(self.grid.weights * per_node)))

    def max_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar) -> "GridFunction":
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def copy(self) -> "GridFunction":
        return GridFunction(self.grid, self.values.copy())
