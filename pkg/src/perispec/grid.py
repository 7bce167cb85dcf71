"""Uniform periodic space-time grids and node-indexed field storage.

Conventions used throughout the package:
  - nodes t_j = j*T/N (j = 0..N-1) and x_i = L_lo + i*dx (i = 0..M-1),
    with node N identified with node 0 and likewise in space;
  - a ScalarField stores an M x N array, entry (i, j) ~ f(t_j, x_i);
  - flattening is column-major so each time slice is contiguous, which is
    the layout the block parabolic operator acts on;
  - all quadratures are uniform-weight sums (rectangle = trapezoid on a
    periodic uniform grid).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform discretization of [0,T] x [L_lo, L_hi], both periodic."""

    T: float
    L_lo: float
    L_hi: float
    N: int
    M: int

    def __post_init__(self):
        if self.N < 2 or self.M < 2:
            raise ValueError("grid needs N >= 2 and M >= 2")
        if not (self.T > 0):
            raise ValueError("time horizon T must be positive")
        if not (self.L_hi > self.L_lo):
            raise ValueError("space interval must have L_hi > L_lo")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def dx(self) -> float:
        return (self.L_hi - self.L_lo) / self.M

    def times(self):
        return np.arange(self.N) * self.dt

    def points(self):
        return self.L_lo + np.arange(self.M) * self.dx

    def to_dict(self):
        return {"T": self.T, "L_lo": self.L_lo, "L_hi": self.L_hi,
                "N": self.N, "M": self.M}

    @staticmethod
    def from_dict(d):
        return SpaceTimeGrid(T=float(d["T"]), L_lo=float(d["L_lo"]),
                             L_hi=float(d["L_hi"]), N=int(d["N"]), M=int(d["M"]))


class ScalarField:
    """M x N node values; rows are space indices, columns time slices."""

    def __init__(self, grid: SpaceTimeGrid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.M, grid.N):
            raise ValueError(
                f"field shape {values.shape} does not match grid (M={grid.M}, N={grid.N})")
        self.grid = grid
        self.values = values

    def at(self, i: int, j: int) -> float:
        return self.values[i % self.grid.M, j % self.grid.N]

    def mean(self) -> float:
        return float(self.values.mean())

    def copy(self):
        return ScalarField(self.grid, self.values.copy())

    def flatten(self):
        # time slice j occupies entries [j*M, (j+1)*M)
        return self.values.flatten(order="F")

    @staticmethod
    def from_flat(grid, flat):
        flat = np.asarray(flat, dtype=float)
        if flat.size != grid.M * grid.N:
            raise ValueError("flat vector length does not match grid")
        return ScalarField(grid, flat.reshape((grid.M, grid.N), order="F"))


class TimeProfile:
    """Length-N periodic samples of a function of time."""

    def __init__(self, grid: SpaceTimeGrid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.N,):
            raise ValueError(f"profile length {values.shape} does not match N={grid.N}")
        self.grid = grid
        self.values = values

    def at(self, j: int) -> float:
        return self.values[j % self.grid.N]

    def mean(self) -> float:
        return float(self.values.mean())

    def copy(self):
        return TimeProfile(self.grid, self.values.copy())


class SpaceProfile:
    """Length-M periodic samples of a function of space."""

    def __init__(self, grid: SpaceTimeGrid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.M,):
            raise ValueError(f"profile length {values.shape} does not match M={grid.M}")
        self.grid = grid
        self.values = values

    def at(self, i: int) -> float:
        return self.values[i % self.grid.M]

    def mean(self) -> float:
        return float(self.values.mean())

    def copy(self):
        return SpaceProfile(self.grid, self.values.copy())


def outer_product(c: TimeProfile, V: SpaceProfile) -> ScalarField:
    """Separable field m(t_j, x_i) = c_j * V_i."""
    if c.grid != V.grid:
        raise ValueError("time and space profiles live on different grids")
    return ScalarField(c.grid, np.outer(V.values, c.values))


def field_mean(f: ScalarField) -> float:
    """Arithmetic mean of all M*N entries (the normalized space-time integral)."""
    return float(f.values.mean())


def field_to_json_dict(f: ScalarField):
    return {"grid": f.grid.to_dict(), "values": f.values.tolist()}


def field_from_json_dict(d) -> ScalarField:
    return ScalarField(SpaceTimeGrid.from_dict(d["grid"]), np.array(d["values"]))


def field_to_csv(f: ScalarField, path):
    # M rows x N columns, row-major
    np.savetxt(path, f.values, delimiter=",", fmt="%.17g")


def field_from_csv(grid: SpaceTimeGrid, path) -> ScalarField:
    values = np.loadtxt(path, delimiter=",", ndmin=2)
    return ScalarField(grid, values)
