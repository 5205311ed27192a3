from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import InputError

# relative slack when snapping a time onto the mesh
SNAP_RTOL = 1e-9


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform grid t_j = a + j(b - a)/n, j = 0..n.

    Parameters
        a: float
            Start time
        b: float
            End time, b > a
        n: int
            Number of intervals, n >= 2
    """
    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.b <= self.a:
            raise InputError(f"grid needs finite a < b, got a={self.a!r}, b={self.b!r}", field="grid")
        if int(self.n) != self.n or self.n < 2:
            raise InputError(f"grid needs an integer n >= 2, got {self.n!r}", field="n_steps")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self):
        return (self.b - self.a) / self.n

    @property
    def length(self):
        return self.b - self.a

    @property
    def n_nodes(self):
        return self.n + 1

    @property
    def nodes(self):
        return self.a + self.h * np.arange(self.n + 1)

    def index_at_or_below(self, t):
        """Index of the last node not exceeding t."""
        j = int(np.floor((t - self.a) / self.h + SNAP_RTOL))
        return min(max(j, 0), self.n)

    def subgrid(self, i0, i1=None):
        """Grid over nodes i0..i1 (inclusive)."""
        i1 = self.n if i1 is None else i1
        if not 0 <= i0 < i1 <= self.n:
            raise InputError(f"invalid node range [{i0}, {i1}] for a grid with n={self.n}")
        return TimeGrid(self.a + i0 * self.h, self.a + i1 * self.h, i1 - i0)

    def matches(self, other):
        return (self.n == other.n
                and np.isclose(self.a, other.a, rtol=0, atol=1e-12 * (1 + abs(self.a)))
                and np.isclose(self.b, other.b, rtol=0, atol=1e-12 * (1 + abs(self.b))))


class SampledFunction:
    """
    Samples of a function of time on a TimeGrid.

    Parameters
        grid: TimeGrid
            Grid the samples live on
        values: np.ndarray
            (n+1,) or (n+1, ...) array; the first axis runs over the nodes
    """
    def __init__(self, grid, values):
        values = np.asarray(values, dtype=float)
        if values.ndim == 0 or values.shape[0] != grid.n_nodes:
            raise InputError(
                f"expected {grid.n_nodes} samples, got array of shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InputError("sampled values must be finite")
        self.grid = grid
        self.values = values

    @classmethod
    def constant(cls, grid, value):
        value = np.asarray(value, dtype=float)
        return cls(grid, np.broadcast_to(value, (grid.n_nodes,) + value.shape).copy())

    @property
    def dim(self):
        return 1 if self.values.ndim == 1 else int(np.prod(self.values.shape[1:]))

    def vectors(self):
        """Samples as an (n+1, d) array."""
        return self.values.reshape(self.grid.n_nodes, -1)

    def sup_norm(self):
        return float(np.max(np.linalg.norm(self.vectors(), axis=1)))

    def __add__(self, other):
        _check_same_grid(self, other)
        return SampledFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SampledFunction(self.grid, self.values - other.values)

    def __mul__(self, c):
        return SampledFunction(self.grid, self.values * c)

    __rmul__ = __mul__

    def __repr__(self):
        return f"{type(self).__name__}(grid={self.grid}, shape={self.values.shape})"


def _check_same_grid(f, g):
    if not f.grid.matches(g.grid):
        raise InputError(f"grid mismatch: {f.grid} versus {g.grid}", field="grid")
