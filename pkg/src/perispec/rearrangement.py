"""Rearrangement utilities.

Profiles are rearranged into the canonical unimodal shape: values sorted
ascending, then interleaved so the largest sits at index floor(N/2), the
runner-up immediately left of it, the next immediately right, and so on.
This is the discrete counterpart of the symmetric decreasing rearrangement
about the half period, made deterministic by stable tie-breaking.

Prescribed-rearrangement classes are parametrized by subgraph-area bodies:
F[i][j] stores how much of cell [t_j, t_{j+1}] x [v_i, v_{i+1}] lies under
the graph of the profile. Columns of F are nonincreasing upward and row
sums give the slice masses q. The same construction over space-time cells
gives the 2D body. Reconstruction divides the accumulated cell areas by
the cell footprint (dt, or dt*dx in 2D), which makes build/reconstruct an
exact round trip for grid-sampled controls.
"""

from dataclasses import dataclass

import numpy as np

from .grid import ScalarField, SpaceTimeGrid, TimeProfile


def rearrangement_values(values: np.ndarray) -> np.ndarray:
    """Canonical unimodal arrangement of a value multiset."""
    w = np.sort(np.asarray(values, dtype=float), kind="stable")
    return np.concatenate([w[0::2], w[1::2][::-1]])


def symmetric_decreasing_rearrangement(c: TimeProfile) -> TimeProfile:
    return TimeProfile(c.grid, rearrangement_values(c.values))


def dominates(c1: TimeProfile, c2: TimeProfile, tol: float = 1e-10) -> bool:
    """Discrete Hardy-Littlewood domination with equal totals.

    True iff every partial sum of the r largest samples of c1 is at most
    the corresponding sum for c2 (plus tol), and the totals agree.
    """
    if c1.grid != c2.grid:
        raise ValueError("profiles live on different grids")
    a = np.sort(c1.values)[::-1].cumsum()
    b = np.sort(c2.values)[::-1].cumsum()
    if abs(a[-1] - b[-1]) > tol:
        return False
    return bool(np.all(a <= b + tol))


@dataclass
class RearrangementBody1D:
    """Subgraph-area parametrization of a time profile.

    F has shape (K, N); F[i][j] is the area of the profile's subgraph
    inside the cell [t_j, t_{j+1}] x [v_i, v_{i+1}] with v_i = c_min + i*dc.
    """

    grid: SpaceTimeGrid
    K: int
    c_min: float
    c_max: float
    F: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if self.K < 1:
            raise ValueError("need at least one value slice")
        if self.F.shape != (self.K, self.grid.N):
            raise ValueError(f"F must have shape ({self.K}, {self.grid.N})")
        if self.q.shape != (self.K,):
            raise ValueError("q must have one entry per slice")

    @property
    def dc(self) -> float:
        return (self.c_max - self.c_min) / self.K

    def cell_capacity(self) -> float:
        return self.grid.dt * self.dc

    def check_invariants(self, tol: float = 1e-10) -> None:
        cap = self.cell_capacity()
        if self.F.min() < -tol or self.F.max() > cap + tol:
            raise ValueError("cell areas escape [0, dt*dc]")
        if np.any(np.diff(self.F, axis=0) > tol):
            raise ValueError("columns of F must be nonincreasing upward")
        row = self.F.sum(axis=1)
        if np.abs(row - self.q).max() > tol * max(1.0, np.abs(self.q).max()):
            raise ValueError("row sums of F disagree with slice masses q")
        if np.any(np.diff(self.q) > tol):
            raise ValueError("slice masses must be nonincreasing")

    def to_json_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "K": self.K,
            "c_min": self.c_min,
            "c_max": self.c_max,
            "F": self.F.tolist(),
            "q": self.q.tolist(),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "RearrangementBody1D":
        return RearrangementBody1D(
            grid=SpaceTimeGrid.from_dict(d["grid"]), K=int(d["K"]),
            c_min=float(d["c_min"]), c_max=float(d["c_max"]),
            F=np.array(d["F"], dtype=float), q=np.array(d["q"], dtype=float))


@dataclass
class RearrangementBody2D:
    """Subgraph-volume parametrization of a space-time field.

    F has shape (K, M, N); slice k collects the volume of the field's
    subgraph between levels h_k and h_{k+1} in each space-time cell.
    """

    grid: SpaceTimeGrid
    K: int
    m_min: float
    m_max: float
    F: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.F = np.asarray(self.F, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if self.K < 1:
            raise ValueError("need at least one value slice")
        if self.F.shape != (self.K, self.grid.M, self.grid.N):
            raise ValueError(
                f"F must have shape ({self.K}, {self.grid.M}, {self.grid.N})")
        if self.q.shape != (self.K,):
            raise ValueError("q must have one entry per slice")

    @property
    def dh(self) -> float:
        return (self.m_max - self.m_min) / self.K

    def cell_capacity(self) -> float:
        return self.grid.dt * self.grid.dx * self.dh

    def check_invariants(self, tol: float = 1e-10) -> None:
        cap = self.cell_capacity()
        if self.F.min() < -tol or self.F.max() > cap + tol:
            raise ValueError("cell volumes escape [0, dt*dx*dh]")
        if np.any(np.diff(self.F, axis=0) > tol):
            raise ValueError("slices of F must be nonincreasing upward")
        sums = self.F.sum(axis=(1, 2))
        if np.abs(sums - self.q).max() > tol * max(1.0, np.abs(self.q).max()):
            raise ValueError("slice sums of F disagree with masses q")
        if np.any(np.diff(self.q) > tol):
            raise ValueError("slice masses must be nonincreasing")

    def to_json_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "K": self.K,
            "m_min": self.m_min,
            "m_max": self.m_max,
            "F": self.F.tolist(),
            "q": self.q.tolist(),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "RearrangementBody2D":
        return RearrangementBody2D(
            grid=SpaceTimeGrid.from_dict(d["grid"]), K=int(d["K"]),
            m_min=float(d["m_min"]), m_max=float(d["m_max"]),
            F=np.array(d["F"], dtype=float), q=np.array(d["q"], dtype=float))


def body_from_profile(c: TimeProfile, K: int, c_min=None, c_max=None) -> RearrangementBody1D:
    """Exact subgraph areas of a piecewise-constant profile."""
    if K < 1:
        raise ValueError("need at least one value slice")
    lo = float(c.values.min()) if c_min is None else float(c_min)
    hi = float(c.values.max()) if c_max is None else float(c_max)
    if hi < lo:
        raise ValueError("c_max must be at least c_min")
    if c.values.min() < lo - 1e-12 or c.values.max() > hi + 1e-12:
        raise ValueError("profile escapes the prescribed value range")
    dc = (hi - lo) / K
    v = lo + dc * np.arange(K)
    F = c.grid.dt * np.clip(c.values[None, :] - v[:, None], 0.0, dc)
    return RearrangementBody1D(grid=c.grid, K=K, c_min=lo, c_max=hi,
                               F=F, q=F.sum(axis=1))


def body_from_field(m: ScalarField, K: int, m_min=None, m_max=None) -> RearrangementBody2D:
    """Exact subgraph volumes of a piecewise-constant field."""
    if K < 1:
        raise ValueError("need at least one value slice")
    lo = float(m.values.min()) if m_min is None else float(m_min)
    hi = float(m.values.max()) if m_max is None else float(m_max)
    if hi < lo:
        raise ValueError("m_max must be at least m_min")
    if m.values.min() < lo - 1e-12 or m.values.max() > hi + 1e-12:
        raise ValueError("field escapes the prescribed value range")
    dh = (hi - lo) / K
    h = lo + dh * np.arange(K)
    cell = m.grid.dt * m.grid.dx
    F = cell * np.clip(m.values[None, :, :] - h[:, None, None], 0.0, dh)
    return RearrangementBody2D(grid=m.grid, K=K, m_min=lo, m_max=hi,
                               F=F, q=F.sum(axis=(1, 2)))


def reconstruct_profile(b: RearrangementBody1D) -> TimeProfile:
    vals = b.c_min + b.F.sum(axis=0) / b.grid.dt
    return TimeProfile(b.grid, vals)


def reconstruct_field(b: RearrangementBody2D) -> ScalarField:
    vals = b.m_min + b.F.sum(axis=0) / (b.grid.dt * b.grid.dx)
    return ScalarField(b.grid, vals)


def aligned_l2_distance(c1: TimeProfile, c2: TimeProfile):
    """Smallest dt-weighted L2 distance over cyclic time shifts of c2.

    Returns (distance, shift) with the minimizing roll of c2.
    """
    if c1.grid != c2.grid:
        raise ValueError("profiles live on different grids")
    best = np.inf
    best_shift = 0
    for k in range(c1.grid.N):
        d = np.sqrt(c1.grid.dt * np.sum((c1.values - np.roll(c2.values, k)) ** 2))
        if d < best:
            best, best_shift = d, k
    return float(best), int(best_shift)
