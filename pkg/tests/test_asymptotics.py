import numpy as np
import pytest

from perispec.grid import SpaceTimeGrid, ScalarField, TimeProfile, SpaceProfile, outer_product
from perispec.pde_ops import BlockParabolicOperator, solve_direct, assemble_laplacian
from perispec.rearrangement import rearrangement_values
from perispec.asymptotics import (
    SweepTable,
    capital_lambda,
    duality_pair,
    mu_sweep,
    epsilon_sweep,
)

# frozen at N=200, M=100, m = cos(pi+t)cos(x)
FROZEN_STAGGERED = 0.1250057
FROZEN_SAME_INDEX = 0.1210776
FROZEN_LAMBDA_MU10 = -1.2101715512e-02


def make_grid(N, M, T=2 * np.pi):
    return SpaceTimeGrid(T=T, L_lo=-np.pi, L_hi=np.pi, N=N, M=M)


def separable(grid, cvals, vvals):
    return outer_product(TimeProfile(grid, cvals), SpaceProfile(grid, vvals))


def cosine_potential(grid):
    return separable(grid, np.cos(np.pi + grid.times()), np.cos(grid.points()))


def test_constant_potential_gives_zero():
    g = make_grid(16, 12)
    lam = capital_lambda(ScalarField(g, np.full((12, 16), 0.7)), BlockParabolicOperator(g))
    assert lam == 0.0


def test_closed_form_eighth():
    g = make_grid(200, 100)
    stag, same = duality_pair(cosine_potential(g), BlockParabolicOperator(g))
    assert abs(stag - 0.125) <= 0.01 * 0.125
    assert stag == pytest.approx(FROZEN_STAGGERED, abs=5e-7)
    assert same == pytest.approx(FROZEN_SAME_INDEX, abs=5e-7)


def test_nonnegative_and_energy_identity():
    # staggered pairing telescopes to diffusion energy plus squared time
    # increments, so the value is nonnegative and the identity is exact
    g = make_grid(64, 32)
    op = BlockParabolicOperator(g)
    A = assemble_laplacian(g)
    rng = np.random.default_rng(5)
    for _ in range(4):
        mv = rng.uniform(-1, 1, (32, 64))
        lam = capital_lambda(ScalarField(g, mv), op)
        assert lam >= 0.0
        mt = ScalarField(g, mv - mv.mean(axis=0, keepdims=True))
        phi = solve_direct(op, mt).values
        inc = np.roll(phi, -1, axis=1) - phi
        ident = (g.dt * np.sum(phi * (A @ phi)) + 0.5 * np.sum(inc ** 2)) / (phi.size * g.dt)
        assert lam == pytest.approx(ident, rel=1e-12)


def test_pure_time_shift_invariance():
    g = make_grid(48, 24)
    op = BlockParabolicOperator(g)
    rng = np.random.default_rng(11)
    mv = rng.uniform(-1, 1, (24, 48))
    base = capital_lambda(ScalarField(g, mv), op)
    shifted = mv + (0.8 * np.sin(3 * g.times()) - 2.4)[None, :]
    assert capital_lambda(ScalarField(g, shifted), op) == pytest.approx(base, abs=1e-12)


def test_fourier_mode_oracle():
    # solve the same scheme mode by mode with dense cyclic recurrences
    g = make_grid(64, 32)
    t, x = g.times(), g.points()
    cvals = np.exp(np.cos(t)) - 0.3 * np.sin(t)
    modes = [(2.0, np.cos(x), 1), (0.7, np.sin(3 * x), 3), (1.3, np.cos(5 * x), 5)]
    vvals = sum(a * u for a, u, _ in modes)
    lam = capital_lambda(separable(g, cvals, vvals), BlockParabolicOperator(g))
    oracle = 0.0
    for a, _, k in modes:
        lamk = (2 - 2 * np.cos(k * g.dx)) / g.dx ** 2
        C = np.zeros((g.N, g.N))
        for n in range(g.N):
            C[n, n] = -1.0
            C[n, (n + 1) % g.N] = 1 + g.dt * lamk
        alpha = np.linalg.solve(C, g.dt * a * cvals)
        oracle += a * 0.5 * np.mean(cvals * np.roll(alpha, -1))
    assert lam == pytest.approx(oracle, abs=1e-6)
    assert lam == pytest.approx(oracle, rel=1e-12)


def test_rearranged_profile_raises_lambda():
    g = make_grid(64, 32)
    op = BlockParabolicOperator(g)
    t = g.times()
    V = np.cos(g.points())
    for seed in range(6):
        rng = np.random.default_rng(seed)
        cv = np.abs(rng.uniform(0.2, 1.5) + rng.uniform(-1, 1) * np.cos(t)
                    + rng.uniform(-0.6, 0.6) * np.cos(2 * t + rng.uniform(0, 6)))
        lam = capital_lambda(separable(g, cv, V), op)
        lam_h = capital_lambda(separable(g, rearrangement_values(cv), V), op)
        assert lam_h >= lam - 1e-12


def test_mu_sweep_constant_potential():
    g = make_grid(16, 12)
    m = ScalarField(g, np.full((12, 16), 0.7))
    tab = mu_sweep(m, [1.0, 10.0, 100.0], lambda mu: BlockParabolicOperator(g, alpha=mu, beta=mu))
    assert np.all(tab.defects() < 1e-12)
    assert tab.slope is None
    for r in tab.rows:
        assert r["lambda"] == pytest.approx(-0.7, abs=1e-10)


def test_mu_sweep_decay():
    g = make_grid(64, 32)
    m = cosine_potential(g)
    tab = mu_sweep(m, [10.0, 30.0, 100.0, 300.0],
                   lambda mu: BlockParabolicOperator(g, alpha=mu, beta=mu))
    assert tab.slope <= -1.4
    assert tab.slope == pytest.approx(-3.0, abs=0.1)
    d = tab.defects()
    assert np.all(np.diff(d) < 0)
    # the rescaled column approaches minus the same-index coefficient
    K = tab.metadata["lambda_same_index"]
    assert tab.rescaled()[-1] == pytest.approx(-K, abs=1e-6)
    assert abs(tab.metadata["lambda_staggered"] - 0.125) <= 0.01 * 0.125


def test_mu_sweep_frozen_point():
    g = make_grid(200, 100)
    m = cosine_potential(g)
    tab = mu_sweep(m, [10.0], lambda mu: BlockParabolicOperator(g, alpha=mu, beta=mu))
    assert tab.rows[0]["lambda"] == pytest.approx(FROZEN_LAMBDA_MU10, abs=1e-11)


def test_mu_sweep_validation():
    g = make_grid(8, 8)
    m = ScalarField(g, np.zeros((8, 8)))
    fac = lambda mu: BlockParabolicOperator(g, alpha=mu, beta=mu)
    with pytest.raises(ValueError):
        mu_sweep(m, [], fac)
    with pytest.raises(ValueError):
        mu_sweep(m, [1.0, -2.0], fac)
    with pytest.raises(ValueError):
        mu_sweep(m, [10.0, 10.0], fac)
    with pytest.raises(ValueError):
        mu_sweep(m, [10.0, 3.0], fac)


def test_epsilon_sweep_concentration_anchor():
    # for a time-constant profile the periodic eigenvalue coincides with the
    # stationary one, which a dense symmetric solve certifies independently
    g = make_grid(16, 800)
    c = TimeProfile(g, np.ones(16))
    V = SpaceProfile(g, np.cos(g.points()))
    tab = epsilon_sweep(c, V, [0.05, 0.02])
    assert tab.refused == []
    resc = tab.rescaled()
    assert resc[0] == pytest.approx(0.703930, abs=1e-5)
    assert resc[1] == pytest.approx(0.705759, abs=1e-5)

    A = assemble_laplacian(g).toarray()
    for r in tab.rows:
        eps = r["parameter"]
        lam_dense = np.linalg.eigvalsh(eps ** 2 * A - np.diag(V.values))[0]
        assert r["lambda"] == pytest.approx(lam_dense, abs=1e-8)

    ref = tab.metadata["reference_lambda_bar"]
    target = np.sqrt(0.5)
    assert ref == pytest.approx(target, abs=1e-4)
    assert np.all(np.abs(resc - target) <= 0.1 * target)
    gaps = np.abs(resc - ref)
    assert gaps[1] < gaps[0]


def test_epsilon_sweep_resolution_gate():
    g = make_grid(16, 40)
    c = TimeProfile(g, np.ones(16))
    V = SpaceProfile(g, np.cos(g.points()))
    # 10*dx^2 = 0.247 here, so only the coarse point survives
    tab = epsilon_sweep(c, V, [0.5, 0.05])
    assert tab.refused == [0.05]
    assert len(tab.rows) == 1
    assert tab.rows[0]["parameter"] == 0.5
    assert tab.slope is None


def test_epsilon_sweep_degenerate_peaks():
    g = make_grid(16, 40)
    c = TimeProfile(g, np.ones(16))
    with pytest.raises(ValueError, match="unique"):
        epsilon_sweep(c, SpaceProfile(g, np.ones(40)), [0.5])
    two_peaks = np.cos(2 * g.points())
    with pytest.raises(ValueError, match="unique"):
        epsilon_sweep(c, SpaceProfile(g, two_peaks), [0.5])
    with pytest.raises(ValueError):
        epsilon_sweep(c, SpaceProfile(g, np.cos(g.points())), [])
    with pytest.raises(ValueError):
        epsilon_sweep(c, SpaceProfile(g, np.cos(g.points())), [-0.1])


def test_sweep_table_serialization():
    tab = SweepTable("mu", rows=[
        {"parameter": 10.0, "lambda": -0.25, "defect": 1e-5, "rescaled": -0.12},
        {"parameter": 30.0, "lambda": -0.125, "defect": 1e-6, "rescaled": -0.121},
    ], refused=[3.0], slope=-2.5, metadata={"mean_m": 0.0})
    csv = tab.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "parameter,lambda,defect,rescaled"
    assert len(lines) == 3
    back = [float(v) for v in lines[1].split(",")]
    assert back == [10.0, -0.25, 1e-5, -0.12]
    d = tab.to_json_dict()
    assert d["slope"] == -2.5
    assert d["refused"] == [3.0]
    assert d["rows"][1]["parameter"] == 30.0
