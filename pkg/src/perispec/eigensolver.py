"""Principal (Perron) eigenpair of the discrete periodic parabolic operator,
plus a small periodic 1D ODE eigensolver.

Shift strategy. The eigenproblem is (A_block - dt_m diag(m)) U = dt_m lam U
with dt_m = dt/alpha. Adding a constant to the potential shifts the whole
spectrum exactly, so the solver first centers the potential at its midrange
and undoes the shift at the end; every amplitude below is the minimal one.

With the centered potential m' (sup norm r) the iteration targets the
eigenvalue of K(sigma) = A_block - dt_m diag(m' + sigma) nearest zero by
inverse power iteration. The first shift sigma = -(r + 1) sits below the
principal eigenvalue (which lives in [-max m', -min m'] by entrywise
monotonicity), and in the benign regime the principal eigenvalue is the
nearest one, so the iteration converges to the positive Perron vector.

That nearest-eigenvalue property can fail: the block time discretization
carries a family of oscillatory modes with real parts near -2/dt_m, and
once r + 1 approaches that band the shifted operator has spurious
eigenvalues closer to sigma than the principal one. The iteration then
converges cleanly to a sign-changing eigenvector. Positivity of the
iterate is therefore the acceptance test, not an assumption: a converged
but sign-changing candidate moves the shift up a ladder of values just
below -max m' (where the principal eigenvalue is nearest again, since it
lies inside the bracket while the oscillatory band stays a distance
~2/dt_m - 2r away), and as a last resort an Arnoldi sweep collects the
modes nearest the bracket edge and picks the one-signed one.

Whatever rung succeeds, a final polishing pass re-centers the shift just
below the eigenvalue estimate, which makes the last inverse iteration and
the left-eigenvector iteration converge in a handful of steps. Reported
residuals are unchanged by any of the shifting because the shift cancels
exactly in the residual formula.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import ScalarField, TimeProfile
from .pde_ops import BlockParabolicOperator

_POSITIVITY_FLOOR = 1e3  # multiples of machine epsilon tolerated below zero
_LADDER = (0.5, 0.1, 0.02)  # rung offsets below the bracket edge, in scale units


@dataclass
class EigenPair:
    """Principal eigenpair; lam is the unshifted eigenvalue.

    The field is named lam because lambda is reserved in Python. right and
    left are the strictly positive right/left eigenvectors (L2-normalized
    right, positive pairing with the left), residual is the sup-norm defect
    of the unshifted eigen-equation relative to ||U||_inf.
    """

    lam: float
    right: ScalarField
    left: ScalarField
    residual: float
    iterations: int


def _inverse_iterate(K, lu, x0, tol, max_iters):
    """Inverse power iteration returning (vector, rayleigh, residual, iters).

    Bails out early when the residual has stopped contracting; the caller
    either rescues the partial iterate by re-centering the shift or moves
    on to the next shift.
    """
    x = x0 / np.linalg.norm(x0)
    nu = 0.0
    res = np.inf
    history = []
    for it in range(1, max_iters + 1):
        y = lu.solve(x) if not isinstance(lu, tuple) else lu[0].solve(x, trans="T")
        norm = np.linalg.norm(y)
        if not np.isfinite(norm) or norm == 0.0:
            raise RuntimeError("inverse iteration broke down (singular shift)")
        y /= norm
        if y.sum() < 0:
            y = -y
        Ky = K @ y if not isinstance(lu, tuple) else K.T @ y
        nu = float(y @ Ky)
        res = np.abs(Ky - nu * y).max() / np.abs(y).max()
        x = y
        if res <= tol:
            return x, nu, res, it
        history.append(res)
        if it >= 150 and res > 0.8 * history[-50]:
            return x, nu, res, it
    return x, nu, res, max_iters


def _one_signed(vec):
    floor = -_POSITIVITY_FLOOR * np.finfo(float).eps * np.abs(vec).max()
    return vec.min() >= floor


def principal_eigenpair(op: BlockParabolicOperator, m: ScalarField, tol: float = 1e-10,
                        max_iters: int = 500) -> EigenPair:
    """Perron eigenpair of (A_block - dt_m diag(m)) U = dt_m lam U."""
    if m.grid != op.grid:
        raise ValueError("potential grid does not match operator grid")
    if not np.all(np.isfinite(m.values)):
        raise ValueError("potential must be finite")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = op.grid.M * op.grid.N
    dtm = op.dt_mass
    m_raw = m.flatten()
    center = 0.5 * (m_raw.max() + m_raw.min())
    m_flat = m_raw - center
    r = np.abs(m_flat).max()
    lo = -m_flat.max()  # centered principal eigenvalue lies in [lo, -min m']
    scale = max(1.0, r)

    def shifted_matrix(sigma):
        # K(sigma) = A_block - dt_m diag(m' + sigma); eigenvalues dt_m (lam' - sigma)
        return (op.matrix - dtm * sp.diags(m_flat + sigma)).tocsc()

    def polish_and_finish(lam_hat, res_hint, x, total):
        """Re-center just below the estimate, converge both eigenvectors."""
        margin = max(100.0 * res_hint / dtm, 1e-12 * max(1.0, abs(lam_hat)))
        sigma = lam_hat - margin
        K = shifted_matrix(sigma)
        try:
            lu = spla.splu(K)
        except RuntimeError:
            return None, total
        try:
            x2, nu, res, it = _inverse_iterate(K, lu, x, tol, max_iters)
            total += it
            if res > tol or not _one_signed(x2):
                return None, total
            v, nu_l, res_l, it_l = _inverse_iterate(K, (lu,), x2.copy(), tol, max_iters)
            total += it_l
        except RuntimeError:
            return None, total
        if res_l > tol or not _one_signed(v):
            return None, total
        if abs(nu_l - nu) > 10 * tol * max(1.0, abs(nu)):
            return None, total
        lam = nu / dtm + sigma - center
        pair = EigenPair(
            lam=float(lam),
            right=ScalarField.from_flat(op.grid, x2),
            left=ScalarField.from_flat(op.grid, v),
            residual=float(max(res, res_l)),
            iterations=total,
        )
        return pair, total

    starts = [np.ones(n), None]  # second entry triggers a seeded random restart
    last_error = None
    for x0 in starts:
        if x0 is None:
            x0 = np.random.default_rng(12345).uniform(0.5, 1.5, n)
        total = 0
        rungs = [-(r + 1.0)] + [lo - z * scale for z in _LADDER]
        for sigma in rungs:
            K = shifted_matrix(sigma)
            try:
                lu = spla.splu(K)
                x, nu, res, it = _inverse_iterate(K, lu, x0, tol, max_iters)
            except RuntimeError as exc:
                last_error = exc
                continue
            total += it
            if res <= 10.0 * tol and not _one_signed(x):
                # converged cleanly to a sign-changing mode; this shift is lost
                last_error = RuntimeError(
                    "inverse iteration locked onto a sign-changing mode")
                continue
            pair, total = polish_and_finish(nu / dtm + sigma, res, x, total)
            if pair is not None:
                return pair
            last_error = RuntimeError(
                f"polish failed near lam={nu / dtm + sigma - center:.6g}")
        # Arnoldi sweep near the bracket edge: collect nearby modes, keep
        # the one-signed one, then polish as above.
        sigma = lo - 0.01 * scale
        K = shifted_matrix(sigma)
        try:
            lu = spla.splu(K)
            op_inv = spla.LinearOperator((n, n), matvec=lu.solve)
            k = min(16, n - 2)
            w, vecs = spla.eigs(op_inv, k=k, which="LM", tol=1e-9,
                                v0=np.ones(n) / np.sqrt(n))
        except Exception as exc:
            last_error = RuntimeError(f"Arnoldi fallback failed: {exc}")
            continue
        order = np.argsort(-np.abs(w))
        for j in order:
            vec = np.real(vecs[:, j])
            nrm = np.linalg.norm(vec)
            if nrm == 0.0:
                continue
            vec = vec / nrm
            if vec.sum() < 0:
                vec = -vec
            if vec.min() < -1e-6:
                continue
            lam_hat = 1.0 / (dtm * w[j].real) + sigma if w[j].real != 0 else None
            if lam_hat is None or not np.isfinite(lam_hat):
                continue
            pair, total = polish_and_finish(lam_hat, 1e-9 * dtm, vec, total)
            if pair is not None:
                return pair
        if last_error is None:
            last_error = RuntimeError("no one-signed mode in the Arnoldi window")
    raise last_error if last_error is not None else RuntimeError("eigensolver failed")


def periodic_ode_principal_eigenvalue(f: TimeProfile, a: float) -> float:
    """Smallest eigenvalue of -a y'' + f y, periodic in time, positive eigenvector.

    Tridiagonal-plus-corners discretization on the profile's time grid;
    inverse iteration against the safe shift min(f) - 1 (the shifted matrix
    is symmetric positive definite). The dense symmetric eigensolver serves
    as the oracle in the tests.
    """
    if a <= 0:
        raise ValueError("second-derivative weight a must be positive")
    fv = np.asarray(f.values, dtype=float)
    N = fv.size
    dt = f.grid.dt
    w = a / dt ** 2
    H = sp.lil_matrix((N, N))
    for j in range(N):
        H[j, j] = 2.0 * w + fv[j]
        H[j, (j + 1) % N] += -w
        H[j, (j - 1) % N] += -w
    H = H.tocsc()
    sigma = fv.min() - 1.0
    lu = spla.splu((H - sigma * sp.identity(N, format="csc")).tocsc())
    x = np.ones(N) / np.sqrt(N)
    theta = 0.0
    scale = 2.0 * w + np.abs(fv).max()
    for _ in range(20000):
        y = lu.solve(x)
        y /= np.linalg.norm(y)
        if y.sum() < 0:
            y = -y
        Hy = H @ y
        theta = float(y @ Hy)
        res = np.abs(Hy - theta * y).max()
        x = y
        if res <= 1e-12 * scale:
            break
    else:
        raise RuntimeError("periodic ODE eigensolver did not converge")
    if not _one_signed(x):
        raise RuntimeError(
            f"loss of positivity in the periodic ODE eigenvector (min {x.min():.3e})")
    return theta
