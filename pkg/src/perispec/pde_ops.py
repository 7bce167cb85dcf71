"""Discrete periodic heat operator and its direct/adjoint solves.

The block operator for alpha*d/dt - beta*Laplacian on the periodic grid is

    A_block = -I + kron(S, B),   B = I + dt_eff * A,   dt_eff = dt*beta/alpha,

with S the cyclic forward shift in time (S[n, n+1 mod N] = 1) and A the
circulant second-difference matrix. Block row n reads -U_n + B U_{n+1}:
diffusion is implicit at t_{n+1}, everything else sits at t_n. The scaling
makes the assembled matrix represent dt*(alpha*d/dt - beta*Lap)/alpha, so
the eigenproblem weight on mass terms is dt_mass = dt/alpha.

The operator annihilates constants, and its kernel and left kernel are
exactly the constant vector; solves are done against the rank-one
regularization A_block + e0 e0^T (nonsingular because e0 has nonzero mean
and the range of A_block is the mean-zero subspace), with the right-hand
side and the solution projected to zero mean.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import SpaceTimeGrid, ScalarField


def assemble_laplacian(grid: SpaceTimeGrid):
    """Circulant tridiagonal second-difference matrix, M x M, CSR.

    Row sums are exactly zero in floating point: the diagonal is 2*a and
    the two off-diagonal entries are -a for the same a = 1/dx^2.
    """
    M = grid.M
    if M < 3:
        raise ValueError("laplacian stencil needs M >= 3")
    a = 1.0 / grid.dx ** 2
    A = sp.diags(
        [np.full(M, 2.0 * a), np.full(M - 1, -a), np.full(M - 1, -a)],
        [0, 1, -1],
        format="lil",
    )
    A[0, M - 1] = -a
    A[M - 1, 0] = -a
    return A.tocsr()


class BlockParabolicOperator:
    """Assembled space-time operator with a cached regularized LU.

    The factorization is potential-independent, so one instance is reused
    across all direct/adjoint solves on its grid; it is immutable after
    construction and safe to share across threads for solves.
    """

    def __init__(self, grid: SpaceTimeGrid, alpha: float = 1.0, beta: float = 1.0):
        if alpha <= 0 or beta <= 0:
            raise ValueError("scaling parameters alpha, beta must be positive")
        self.grid = grid
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.laplacian = assemble_laplacian(grid)
        M, N = grid.M, grid.N
        dt_eff = grid.dt * self.beta / self.alpha
        B = sp.identity(M, format="csr") + dt_eff * self.laplacian
        S = sp.csr_matrix(
            (np.ones(N), (np.arange(N), (np.arange(N) + 1) % N)), shape=(N, N)
        )
        self.matrix = (-sp.identity(M * N, format="csr") + sp.kron(S, B)).tocsc()
        # weight on mass/eigenvalue terms for the alpha-scaled problem
        self.dt_mass = grid.dt / self.alpha
        self._lu = None

    def matvec(self, u):
        return self.matrix @ u

    def rmatvec(self, u):
        return self.matrix.T @ u

    def factorization(self):
        """LU of the rank-one regularized matrix; built once, then cached."""
        if self._lu is None:
            n = self.matrix.shape[0]
            e00 = sp.csc_matrix(([1.0], ([0], [0])), shape=(n, n))
            self._lu = spla.splu((self.matrix + e00).tocsc())
        return self._lu


def _check_compatible(rhs_values, tol):
    scale = np.abs(rhs_values).max()
    defect = abs(rhs_values.mean())
    if defect > tol * max(scale, 1e-300):
        raise ValueError(
            f"right-hand side is incompatible with the periodic problem: "
            f"mean defect {defect:.3e} exceeds tolerance")
    return defect


def solve_direct(op: BlockParabolicOperator, rhs: ScalarField, compat_tol: float = 1e-8) -> ScalarField:
    """Solve A_block U = dt * rhs with zero-mean normalization of U.

    The rhs must be (numerically) mean-zero; the compatibility defect is
    checked against compat_tol before the projected solve.
    """
    if rhs.grid != op.grid:
        raise ValueError("rhs grid does not match operator grid")
    _check_compatible(rhs.values, compat_tol)
    b = op.grid.dt * rhs.flatten()
    b = b - b.mean()
    x = op.factorization().solve(b)
    x = x - x.mean()
    if not np.all(np.isfinite(x)):
        raise ValueError("singular factorization produced non-finite solution")
    return ScalarField.from_flat(op.grid, x)


def solve_adjoint(op: BlockParabolicOperator, rhs: ScalarField, compat_tol: float = 1e-8) -> ScalarField:
    """Solve A_block^T P = dt * rhs; same conventions as solve_direct."""
    if rhs.grid != op.grid:
        raise ValueError("rhs grid does not match operator grid")
    _check_compatible(rhs.values, compat_tol)
    b = op.grid.dt * rhs.flatten()
    b = b - b.mean()
    x = op.factorization().solve(b, trans="T")
    x = x - x.mean()
    if not np.all(np.isfinite(x)):
        raise ValueError("singular factorization produced non-finite solution")
    return ScalarField.from_flat(op.grid, x)
