"""Feasibility projections.

project_box_mean is the thresholding projection onto {lo <= c <= hi,
mean(c) = target}: the output is clamp(c + tau, lo, hi) where the scalar
tau is found by bisection (the map tau -> mean of the clamp is nondecreasing
and continuous). Bisection runs until the bracket hits float resolution;
clamp-aware correction sweeps then spread the residual defect over entries
with room to move, so the mean constraint holds to machine precision even
when the row is almost fully saturated.

The rearrangement-body projections apply the same box+mean step slice by
slice: slice 0 against the fixed cell capacity, every later slice against
the previously projected slice as its variable upper bound. This preserves
the monotone column structure by construction. It is the sequential
feasibility scheme, not the metric projection onto the intersection.
"""

import numpy as np

from .grid import TimeProfile
from .rearrangement import RearrangementBody1D, RearrangementBody2D

_MAX_BISECT = 200


def project_box_mean_array(values, lo, hi, target_mean, tol=1e-12):
    """Array core of the box+mean projection; lo/hi scalar or arrays."""
    vals = np.asarray(values, dtype=float)
    lo_arr = np.broadcast_to(np.asarray(lo, dtype=float), vals.shape)
    hi_arr = np.broadcast_to(np.asarray(hi, dtype=float), vals.shape)
    if np.any(hi_arr < lo_arr):
        raise ValueError("upper bound below lower bound")
    lo_mean = lo_arr.mean()
    hi_mean = hi_arr.mean()
    scale = max(1.0, np.abs(lo_arr).max(), np.abs(hi_arr).max())
    if target_mean < lo_mean - 1e-12 * scale or target_mean > hi_mean + 1e-12 * scale:
        raise ValueError(
            f"target mean {target_mean} infeasible for bounds "
            f"[{lo_mean}, {hi_mean}]")

    a = float((lo_arr - vals).min())
    b = float((hi_arr - vals).max())
    eps = np.finfo(float).eps
    out = np.clip(vals, lo_arr, hi_arr)
    for _ in range(_MAX_BISECT):
        mid = 0.5 * (a + b)
        out = np.clip(vals + mid, lo_arr, hi_arr)
        defect = out.mean() - target_mean
        if defect == 0.0 or (b - a) <= eps * max(1.0, abs(a), abs(b)):
            break
        if defect < 0:
            a = mid
        else:
            b = mid
    # clamp-aware correction sweeps: spread the residual defect over the
    # entries with room to move; each sweep shrinks the defect without
    # overshooting, so a few passes reach machine precision
    for _ in range(4):
        defect = out.mean() - target_mean
        if defect == 0.0:
            break
        movable = (out > lo_arr) if defect > 0 else (out < hi_arr)
        k = int(movable.sum())
        if k == 0:
            break
        shift = defect * out.size / k
        out[movable] = np.clip(out[movable] - shift, lo_arr[movable], hi_arr[movable])
    defect = out.mean() - target_mean
    if abs(defect) > tol:
        raise RuntimeError(
            f"mean projection stalled at defect {defect:.3e}; "
            "tolerance too tight for this data")
    return out


def project_box_mean(c: TimeProfile, lo, hi, target_mean, tol=1e-12) -> TimeProfile:
    lo_vals = lo.values if isinstance(lo, TimeProfile) else lo
    hi_vals = hi.values if isinstance(hi, TimeProfile) else hi
    out = project_box_mean_array(c.values, lo_vals, hi_vals, target_mean, tol)
    return TimeProfile(c.grid, out)


def _validate_masses(q, K, slice_capacity):
    q = np.asarray(q, dtype=float)
    if q.shape != (K,):
        raise ValueError("slice masses must have one entry per slice")
    if np.any(q < -1e-14):
        raise ValueError("slice masses must be nonnegative")
    if np.any(np.diff(q) > 1e-10 * max(1.0, np.abs(q).max())):
        raise ValueError("slice masses must be nonincreasing")
    if q[0] > slice_capacity * (1 + 1e-10):
        raise ValueError("first slice mass exceeds the slice capacity")
    return q


def _project_slices(F_flat, q, cap, count):
    """Sequential slice projection over flattened slices of length count."""
    K = F_flat.shape[0]
    out = np.empty_like(F_flat)
    upper = np.full(count, cap)
    for i in range(K):
        if q[i] <= 0.0:
            out[i] = 0.0
        else:
            if q[i] > upper.sum() * (1 + 1e-10):
                raise ValueError(
                    f"slice {i} mass {q[i]:.6g} exceeds available capacity")
            out[i] = project_box_mean_array(F_flat[i], 0.0, upper, q[i] / count)
        upper = out[i]
    return out


def project_rearrangement_1d(b: RearrangementBody1D, q) -> RearrangementBody1D:
    q = _validate_masses(q, b.K, b.grid.N * b.cell_capacity())
    F = _project_slices(b.F, q, b.cell_capacity(), b.grid.N)
    out = RearrangementBody1D(grid=b.grid, K=b.K, c_min=b.c_min, c_max=b.c_max,
                              F=F, q=q.copy())
    out.check_invariants()
    return out


def project_rearrangement_2d(b: RearrangementBody2D, q) -> RearrangementBody2D:
    count = b.grid.M * b.grid.N
    q = _validate_masses(q, b.K, count * b.cell_capacity())
    F_flat = b.F.reshape(b.K, count)
    F = _project_slices(F_flat, q, b.cell_capacity(), count)
    out = RearrangementBody2D(grid=b.grid, K=b.K, m_min=b.m_min, m_max=b.m_max,
                              F=F.reshape(b.F.shape), q=q.copy())
    out.check_invariants()
    return out
