"""Rearrangement utilities: canonical profile rearrangement, domination,
and the subgraph-area body parametrization (1D and 2D)."""

import json

import numpy as np
import pytest

from perispec.grid import ScalarField, SpaceTimeGrid, TimeProfile
from perispec.rearrangement import (
    RearrangementBody1D,
    RearrangementBody2D,
    aligned_l2_distance,
    body_from_field,
    body_from_profile,
    dominates,
    reconstruct_field,
    reconstruct_profile,
    rearrangement_values,
    symmetric_decreasing_rearrangement,
)


def make_grid(N, M=4, T=2 * np.pi):
    return SpaceTimeGrid(T=T, L_lo=-np.pi, L_hi=np.pi, N=N, M=M)


def profile(grid, values):
    return TimeProfile(grid, np.asarray(values, dtype=float))


class TestSymmetricRearrangement:
    def test_small_example(self):
        g = make_grid(4)
        out = symmetric_decreasing_rearrangement(profile(g, [3, 1, 2, 0]))
        assert np.array_equal(out.values, [0.0, 2.0, 3.0, 1.0])

    def test_small_case_shape(self):
        # among all arrangements that rise then fall (with wrap), the
        # interleave of the sorted values is the one produced
        g = make_grid(4)
        out = rearrangement_values(np.array([3.0, 1.0, 2.0, 0.0]))
        assert out[2] == 3.0  # largest at floor(N/2)
        assert np.all(np.diff(out[:3]) >= 0)
        assert out[3] <= out[2]
        assert out[0] <= out[3]

    def test_cosine_moves_peak_to_midpoint(self):
        g = make_grid(16, M=2)
        t = g.times()
        c = profile(g, np.cos(t))
        out = symmetric_decreasing_rearrangement(c)
        assert np.allclose(out.values, np.cos(t - np.pi), atol=1e-12)

    def test_fixed_point(self):
        g = make_grid(12, M=2)
        rng = np.random.default_rng(3)
        c = rng.normal(size=12)
        once = rearrangement_values(c)
        twice = rearrangement_values(once)
        assert np.array_equal(once, twice)

    def test_multiset_and_mean_preserved(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(2, 40))
            vals = rng.normal(size=n)
            out = rearrangement_values(vals)
            assert np.array_equal(np.sort(out), np.sort(vals))
            assert out.mean() == pytest.approx(vals.mean(), abs=1e-13)

    def test_unimodal_shape(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            n = int(rng.integers(3, 33))
            out = rearrangement_values(rng.uniform(-2, 2, size=n))
            k = n // 2
            assert out[k] == out.max()
            assert np.all(np.diff(out[: k + 1]) >= 0)
            # falls back to the start across the wrap
            tail = np.concatenate([out[k:], out[:1]])
            assert np.all(np.diff(tail) <= 0)


class TestDominates:
    def test_reflexive(self):
        g = make_grid(6)
        rng = np.random.default_rng(0)
        c = profile(g, rng.normal(size=6))
        assert dominates(c, c)

    def test_hand_pair(self):
        g = make_grid(2)
        c1 = profile(g, [0.5, 0.5])
        c2 = profile(g, [1.0, 0.0])
        assert dominates(c1, c2)
        assert not dominates(c2, c1)

    def test_rearrangement_dominates(self):
        rng = np.random.default_rng(11)
        g = make_grid(20)
        for _ in range(10):
            c = profile(g, rng.uniform(0, 3, size=20))
            cbar = symmetric_decreasing_rearrangement(c)
            assert dominates(c, cbar)
            assert dominates(cbar, c)  # same multiset, both directions

    def test_total_mismatch_fails(self):
        g = make_grid(3)
        assert not dominates(profile(g, [1, 1, 1]), profile(g, [1, 1, 2]))

    def test_grid_mismatch_rejected(self):
        g1, g2 = make_grid(4), make_grid(5)
        with pytest.raises(ValueError):
            dominates(profile(g1, np.zeros(4)), profile(g2, np.zeros(5)))


class TestBody1D:
    def test_full_cells_at_upper_bound(self):
        g = make_grid(8)
        c = profile(g, np.full(8, 2.0))
        b = body_from_profile(c, K=5, c_min=0.0, c_max=2.0)
        assert np.allclose(b.F, g.dt * b.dc)
        assert np.allclose(b.q, g.T * b.dc)
        b.check_invariants()

    def test_cosine_cell_capacity(self):
        g = make_grid(10, T=2 * np.pi)
        c = profile(g, np.cos(g.times()))
        b = body_from_profile(c, K=10)
        assert b.c_min == pytest.approx(-1.0)
        assert b.c_max == pytest.approx(1.0)
        assert round(g.dt * b.dc, 3) == 0.126
        b.check_invariants()

    def test_round_trip_exact(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            n = int(rng.integers(2, 30))
            k = int(rng.integers(1, 12))
            g = make_grid(n)
            c = profile(g, rng.uniform(-3, 5, size=n))
            b = body_from_profile(c, K=k)
            b.check_invariants()
            back = reconstruct_profile(b)
            assert np.allclose(back.values, c.values, atol=1e-12)

    def test_reconstruct_degenerate_bodies(self):
        g = make_grid(6)
        b = RearrangementBody1D(grid=g, K=4, c_min=-1.0, c_max=3.0,
                                F=np.zeros((4, 6)), q=np.zeros(4))
        assert np.allclose(reconstruct_profile(b).values, -1.0)
        full = np.full((4, 6), g.dt * 1.0)
        q = full.sum(axis=1)
        b2 = RearrangementBody1D(grid=g, K=4, c_min=-1.0, c_max=3.0, F=full, q=q)
        assert np.allclose(reconstruct_profile(b2).values, 3.0)

    def test_invariant_violations_detected(self):
        g = make_grid(4)
        c = profile(g, [0.0, 1.0, 2.0, 3.0])
        b = body_from_profile(c, K=3)
        bad = b.F.copy()
        bad[0, 2], bad[2, 2] = bad[2, 2], bad[0, 2]  # breaks monotone columns
        broken = RearrangementBody1D(grid=g, K=3, c_min=b.c_min, c_max=b.c_max,
                                     F=bad, q=b.q)
        with pytest.raises(ValueError):
            broken.check_invariants()

    def test_json_round_trip(self):
        g = make_grid(5)
        b = body_from_profile(profile(g, [0.0, 0.5, 2.0, 1.0, 0.25]), K=4)
        blob = json.dumps(b.to_json_dict())
        b2 = RearrangementBody1D.from_json_dict(json.loads(blob))
        assert b2.grid == b.grid and b2.K == b.K
        assert np.allclose(b2.F, b.F) and np.allclose(b2.q, b.q)


class TestBody2D:
    def test_constant_field_round_trip(self):
        g = make_grid(6, M=5)
        m = ScalarField(g, np.full((5, 6), 1.5))
        b = body_from_field(m, K=3, m_min=0.0, m_max=2.0)
        b.check_invariants()
        assert np.allclose(reconstruct_field(b).values, 1.5, atol=1e-12)

    def test_random_field_round_trip(self):
        rng = np.random.default_rng(23)
        for _ in range(8):
            n, mm, k = int(rng.integers(2, 12)), int(rng.integers(2, 12)), int(rng.integers(1, 9))
            g = make_grid(n, M=mm)
            m = ScalarField(g, rng.uniform(-2, 2, size=(mm, n)))
            b = body_from_field(m, K=k)
            b.check_invariants()
            assert np.allclose(reconstruct_field(b).values, m.values, atol=1e-12)

    def test_cone_slice_masses(self):
        # cone of height 1 and radius 2 centred in the rectangle: the
        # superlevel set {m > h} is a disk of area pi (R(1-h))^2, so slice
        # masses scale like (1 - h)^2
        N = M = 200
        g = SpaceTimeGrid(T=2 * np.pi, L_lo=-np.pi, L_hi=np.pi, N=N, M=M)
        R = 2.0
        t = g.times()
        x = g.points()
        X, Tm = np.meshgrid(x, t, indexing="ij")
        dist = np.sqrt((Tm - np.pi) ** 2 + X ** 2)
        m = ScalarField(g, np.clip(1.0 - dist / R, 0.0, None))
        K = 10
        b = body_from_field(m, K=K, m_min=0.0, m_max=1.0)
        b.check_invariants()
        h = b.m_min + b.dh * (np.arange(K) + 0.5)
        predicted = np.pi * R ** 2 * (1.0 - h) ** 2 * b.dh
        mid = slice(1, 7)
        rel = np.abs(b.q[mid] - predicted[mid]) / predicted[mid]
        assert rel.max() < 0.03

    def test_json_round_trip(self):
        g = make_grid(4, M=3)
        rng = np.random.default_rng(29)
        b = body_from_field(ScalarField(g, rng.uniform(0, 1, (3, 4))), K=3)
        blob = json.dumps(b.to_json_dict())
        b2 = RearrangementBody2D.from_json_dict(json.loads(blob))
        assert b2.grid == b.grid and np.allclose(b2.F, b.F)


class TestAlignedDistance:
    def test_shifted_copy_has_zero_distance(self):
        g = make_grid(16)
        c = np.cos(g.times())
        rolled = np.roll(c, 5)
        d, shift = aligned_l2_distance(profile(g, c), profile(g, rolled))
        assert d == pytest.approx(0.0, abs=1e-12)
        assert np.allclose(np.roll(rolled, shift), c)

    def test_lower_bound_over_shifts(self):
        g = make_grid(8)
        rng = np.random.default_rng(31)
        a = profile(g, rng.normal(size=8))
        b = profile(g, rng.normal(size=8))
        d, _ = aligned_l2_distance(a, b)
        base = np.sqrt(g.dt * np.sum((a.values - b.values) ** 2))
        assert d <= base + 1e-15
