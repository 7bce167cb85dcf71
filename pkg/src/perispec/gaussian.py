"""Gaussian-case machinery: periodic Riccati profiles and the closed form.

The scalar problem is xi'/2 + xi^2 = (mu/2) c with xi positive and periodic.
Writing w = exp(2 * integral of xi) turns it into the linear Hill equation
-w''/4 + (mu/2) c w = 0, so a positive periodic xi corresponds to a positive
Floquet solution with multiplier exp(2 alpha T), alpha = mean(xi). The
principal periodic eigenvalue theta0 of -(1/4) d^2/dt^2 + (mu/2) c certifies
admissibility (theta0 > 0 exactly when the positive branch exists) and
sqrt(theta0) estimates alpha; the estimate is exact only for constant
profiles, because the Floquet band of the Hill operator is not a parabola
in general, so the solver does not stop there.

The solve itself is a damped Newton iteration on Fourier collocation of the
Riccati residual. The Jacobian D/2 + 2 diag(xi) has positive definite
symmetric part whenever the iterate is positive (the differentiation matrix
is skew), so steps are well defined along the positive branch and the line
search only has to guard positivity and residual decrease. A transfer-matrix
Floquet profile provides the warm start when the constant guess stalls.

Means, the eigenvalue lambda_bar, and the drift primitive beta all use the
plain node average, which makes beta close periodically to rounding error.
"""

from dataclasses import dataclass

import numpy as np

from .eigensolver import periodic_ode_principal_eigenvalue
from .grid import TimeProfile

_MAX_NEWTON = 60
_MAX_HALVINGS = 40


@dataclass
class RiccatiSolution:
    xi: TimeProfile
    mean_xi: float
    residual: float


@dataclass
class GaussianEigen:
    lambda_bar: float
    mu: tuple
    xi_profiles: tuple
    beta: TimeProfile


def fourier_differentiation_matrix(N: int, T: float) -> np.ndarray:
    """Dense spectral differentiation on N uniform nodes of a T-period."""
    if N < 2:
        raise ValueError("need at least two nodes")
    j = np.arange(N)
    diff = j[:, None] - j[None, :]
    D = np.zeros((N, N))
    off = diff != 0
    h = 2.0 * np.pi / N
    if N % 2 == 0:
        D[off] = 0.5 * (-1.0) ** diff[off] / np.tan(0.5 * h * diff[off])
    else:
        D[off] = 0.5 * (-1.0) ** diff[off] / np.sin(0.5 * h * diff[off])
    return D * (2.0 * np.pi / T)


def _validate_profile(c: TimeProfile, mu: float):
    vals = np.asarray(c.values, dtype=float)
    if mu <= 0:
        raise ValueError("diffusion eigenvalue mu must be positive")
    if vals.min() < 0:
        raise ValueError("profile must be nonnegative")
    if vals.max() == 0:
        raise ValueError("profile must not vanish identically")
    return vals


def _floquet_start(g: np.ndarray, dt: float):
    """O(dt^2) positive periodic profile from the transfer-matrix monodromy.

    Central differences of -w''/4 + g w = 0 give the three-term recurrence
    w_{j+1} = (2 + 4 dt^2 g_j) w_j - w_{j-1}; the monodromy of its 2x2
    transfer matrices has reciprocal positive multipliers exp(+-2 alpha T).
    """
    N = g.size
    Phi = np.eye(2)
    for j in range(N):
        Phi = np.array([[2.0 + 4.0 * dt ** 2 * g[j], -1.0], [1.0, 0.0]]) @ Phi
    tr = Phi[0, 0] + Phi[1, 1]
    disc = tr * tr - 4.0
    if disc <= 0:
        raise RuntimeError("monodromy lost the positive Floquet pair")
    m = 0.5 * (tr + np.sqrt(disc))
    alpha = np.log(m) / (2.0 * N * dt)
    # eigenvector gives w_0, w_{-1}; march the ratio r_j = w_{j+1}/w_j
    w0 = np.array([Phi[0, 1], m - Phi[0, 0]])
    if abs(w0[0]) < 1e-300:
        w0 = np.array([m - Phi[1, 1], Phi[1, 0]])
    r_prev = w0[0] / w0[1] if w0[1] != 0 else m
    decay = np.exp(-2.0 * alpha * dt)
    y = np.empty(N)
    y[0] = 1.0
    for j in range(N - 1):
        r = (2.0 + 4.0 * dt ** 2 * g[j]) - 1.0 / r_prev
        if r <= 0:
            raise RuntimeError("Floquet ratio lost positivity")
        y[j + 1] = y[j] * r * decay
        r_prev = r
    xi = alpha + (np.roll(y, -1) - np.roll(y, 1)) / (4.0 * dt * y)
    return alpha, xi


def _newton(g: np.ndarray, D: np.ndarray, xi0: np.ndarray, tol: float):
    xi = xi0.copy()
    scale = max(1.0, np.abs(g).max())
    res = np.abs(D @ xi / 2.0 + xi ** 2 - g).max()
    for _ in range(_MAX_NEWTON):
        if res <= tol * scale:
            return xi, res
        F = D @ xi / 2.0 + xi ** 2 - g
        J = D / 2.0 + 2.0 * np.diag(xi)
        step = np.linalg.solve(J, -F)
        lam = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS):
            cand = xi + lam * step
            if cand.min() > 0:
                cand_res = np.abs(D @ cand / 2.0 + cand ** 2 - g).max()
                if cand_res <= (1.0 - 0.25 * lam) * res:
                    xi, res = cand, cand_res
                    accepted = True
                    break
            lam *= 0.5
        if not accepted:
            return None, res
    if res <= tol * scale:
        return xi, res
    return None, res


def solve_riccati_periodic(c: TimeProfile, mu: float, tol: float = 1e-10) -> RiccatiSolution:
    """Unique positive periodic solution of xi'/2 + xi^2 = (mu/2) c."""
    vals = _validate_profile(c, mu)
    grid = c.grid
    g = 0.5 * mu * vals
    theta0 = periodic_ode_principal_eigenvalue(TimeProfile(grid, g), 0.25)
    if theta0 <= 0:
        raise RuntimeError(
            f"auxiliary eigenvalue {theta0:.3e} is not positive; "
            "no positive periodic branch exists for this input")
    D = fourier_differentiation_matrix(grid.N, grid.T)
    xi, res = _newton(g, D, np.full(grid.N, np.sqrt(theta0)), tol)
    if xi is None:
        alpha, warm = _floquet_start(g, grid.dt)
        if warm.min() <= 0:
            warm = np.maximum(warm, 1e-12 * max(alpha, 1.0))
        xi, res = _newton(g, D, warm, tol)
    if xi is None:
        raise RuntimeError(
            f"Riccati iteration stalled at residual {res:.3e}")
    return RiccatiSolution(xi=TimeProfile(grid, xi),
                           mean_xi=float(xi.mean()),
                           residual=float(res))


def gaussian_eigenvalue(c: TimeProfile, A_eigenvalues, tol: float = 1e-10) -> GaussianEigen:
    """Principal-eigenvalue data for the quadratic-potential problem.

    lambda_bar is the node average of the trace of the Riccati matrix, one
    scalar profile per eigenvalue of the quadratic form; beta is the
    periodic primitive of lambda_bar minus that trace, pinned at beta(0)=0.
    """
    mus = tuple(float(m) for m in np.atleast_1d(np.asarray(A_eigenvalues, dtype=float)))
    if len(mus) == 0:
        raise ValueError("need at least one quadratic-form eigenvalue")
    sols = tuple(solve_riccati_periodic(c, mu, tol=tol) for mu in mus)
    trace = np.sum([s.xi.values for s in sols], axis=0)
    lambda_bar = float(trace.mean())
    dt = c.grid.dt
    increments = dt * (lambda_bar - trace)
    beta = np.concatenate([[0.0], np.cumsum(increments)[:-1]])
    return GaussianEigen(lambda_bar=lambda_bar, mu=mus, xi_profiles=sols,
                         beta=TimeProfile(c.grid, beta))


def sample_eigenfunction(ge: GaussianEigen, points) -> np.ndarray:
    """Eigenfunction samples exp(beta(t) - (1/2) sum_i xi_i(t) x_i^2).

    points has one row per sample location, expressed in the eigenbasis of
    the quadratic form; returns an (N, npoints) array over the time nodes.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    d = len(ge.mu)
    if X.shape[1] != d:
        raise ValueError(f"points must have {d} coordinates per row")
    quad = np.zeros((ge.beta.values.size, X.shape[0]))
    for i, sol in enumerate(ge.xi_profiles):
        quad += sol.xi.values[:, None] * (X[:, i] ** 2)[None, :]
    return np.exp(ge.beta.values[:, None] - 0.5 * quad)
