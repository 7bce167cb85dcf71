"""Parameter sweeps around the large- and small-diffusivity limits.

capital_lambda evaluates the quadratic functional that governs the large-mu
expansion of the principal eigenvalue: solve the periodic heat problem driven
by the demeaned potential, then pair potential and response. The pairing is
taken in staggered form, mean(m_n * phi_{n+1}); summation by parts turns that
into diffusion energy plus a squared time-increment term, so it is exactly
nonnegative and its quadrature error enters at second order. The plain
same-index pairing mean(m_n * phi_n) is the coefficient the discrete
eigenvalue actually expands against, so mu_sweep measures its defect with
that value and reports both in the table metadata. One number cannot serve
both purposes at first order in dt; see the sweep metadata.

epsilon_sweep probes the opposite regime (alpha = eps, beta = eps^2), where
the eigenfunction concentrates near the potential's peak with layer width
sqrt(eps). Points the grid cannot resolve (eps <= 10*dx^2) are refused and
reported rather than computed. The Gaussian reference value uses the
discrete curvature at the peak, which is what the grid actually sees.
"""

from dataclasses import dataclass, field

import numpy as np

from .grid import ScalarField, SpaceProfile, TimeProfile, outer_product
from .pde_ops import BlockParabolicOperator, solve_direct
from .eigensolver import principal_eigenpair
from .gaussian import gaussian_eigenvalue

_CSV_COLUMNS = ("parameter", "lambda", "defect", "rescaled")


@dataclass
class SweepTable:
    """Rows of a one-parameter sweep plus the fitted defect decay slope.

    rows hold dicts keyed by the CSV column names; refused lists parameter
    values skipped by a resolution gate. slope is the log-log least-squares
    slope of defect vs parameter, or None when fewer than two positive
    defects are available.
    """

    parameter_name: str
    rows: list = field(default_factory=list)
    refused: list = field(default_factory=list)
    slope: float | None = None
    metadata: dict = field(default_factory=dict)

    def defects(self) -> np.ndarray:
        return np.array([r["defect"] for r in self.rows])

    def rescaled(self) -> np.ndarray:
        return np.array([r["rescaled"] for r in self.rows])

    def to_csv(self) -> str:
        lines = [",".join(_CSV_COLUMNS)]
        for r in self.rows:
            lines.append(",".join("%.17g" % r[c] for c in _CSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "parameter": self.parameter_name,
            "rows": [dict(r) for r in self.rows],
            "refused": list(self.refused),
            "slope": self.slope,
            "metadata": dict(self.metadata),
        }


def _slice_demean(m: ScalarField) -> ScalarField:
    # removing the space mean slice by slice makes the functional exactly
    # invariant under adding any function of time alone
    vals = m.values - m.values.mean(axis=0, keepdims=True)
    return ScalarField(m.grid, vals)


def duality_pair(m: ScalarField, op: BlockParabolicOperator):
    """Staggered and same-index pairings of the demeaned potential with its
    periodic heat response. Returns (staggered, same_index)."""
    mt = _slice_demean(m)
    # slice-demeaning a space-constant field leaves only rounding residue;
    # the response to that is zero, not a solve against noise
    scale = float(np.abs(m.values).max())
    if np.abs(mt.values).max() <= 1e-13 * max(scale, 1.0):
        return 0.0, 0.0
    phi = solve_direct(op, mt)
    stag = float(np.mean(mt.values * np.roll(phi.values, -1, axis=1)))
    same = float(np.mean(mt.values * phi.values))
    return stag, same


def capital_lambda(m: ScalarField, op: BlockParabolicOperator) -> float:
    """Value of the limiting quadratic functional at potential m."""
    stag, _ = duality_pair(m, op)
    return stag


def _fit_slope(params, defects, floor=0.0):
    # defects at rounding level are exact zeros as far as the fit goes
    pts = [(p, d) for p, d in zip(params, defects) if d > floor]
    if len(pts) < 2:
        return None
    lp = np.log([p for p, _ in pts])
    ld = np.log([d for _, d in pts])
    return float(np.polyfit(lp, ld, 1)[0])


def mu_sweep(m: ScalarField, mus, op_factory) -> SweepTable:
    """Eigenvalue sweep over the diffusivity mu with alpha = beta = mu.

    op_factory(mu) must return the operator for that scaling on m's grid.
    The eigenvalue sits below -mean(m) by K/mu to leading order (integrating
    the log-transformed equation shows lambda + mean(m) is a negative
    Dirichlet energy), so the defect at each mu is |lambda + mean(m) + K/mu|
    with K the same-index duality coefficient; the staggered value (the
    limiting functional) is carried alongside in the metadata.
    """
    mus = [float(mu) for mu in mus]
    if not mus:
        raise ValueError("mus must be nonempty")
    if any(mu <= 0 for mu in mus):
        raise ValueError("mus must be positive")
    if any(b <= a for a, b in zip(mus, mus[1:])):
        raise ValueError("mus must be strictly increasing")

    stag, same = duality_pair(m, op_factory(1.0))
    mbar = float(m.values.mean())
    table = SweepTable("mu", metadata={
        "lambda_staggered": stag,
        "lambda_same_index": same,
        "mean_m": mbar,
        "defect_reference": "same_index",
    })
    for mu in mus:
        pair = principal_eigenpair(op_factory(mu), m, tol=1e-12)
        defect = abs(pair.lam + mbar + same / mu)
        table.rows.append({
            "parameter": mu,
            "lambda": pair.lam,
            "defect": defect,
            "rescaled": mu * (pair.lam + mbar),
        })
    table.slope = _fit_slope(mus, table.defects(), floor=1e-13 * max(1.0, abs(mbar)))
    return table


def epsilon_sweep(c: TimeProfile, V: SpaceProfile, epsilons) -> SweepTable:
    """Eigenvalue sweep in the concentration regime alpha = eps, beta = eps^2.

    The potential is c(t)V(x); V must peak at a single grid point. Rescaled
    values are (lambda_eps + mean(c) * V_max) / eps and the defect is their
    distance to the Gaussian reference built from the discrete peak
    curvature.
    """
    if V.grid != c.grid:
        raise ValueError("space profile grid does not match time profile grid")
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ValueError("epsilons must be nonempty")
    if any(e <= 0 for e in eps_list):
        raise ValueError("epsilons must be positive")

    grid = c.grid
    vvals = V.values
    i = int(np.argmax(vvals))
    others = np.delete(vvals, i)
    if others.size and others.max() >= vvals[i]:
        raise ValueError("potential peak is not unique")
    curv = (vvals[(i + 1) % grid.M] - 2 * vvals[i] + vvals[i - 1]) / grid.dx ** 2
    if curv >= 0:
        raise ValueError("potential peak is degenerate")

    mu_eff = -curv
    reference = gaussian_eigenvalue(c, [mu_eff]).lambda_bar
    shift = float(c.values.mean()) * vvals[i]
    m = outer_product(c, V)
    gate = 10.0 * grid.dx ** 2

    table = SweepTable("epsilon", metadata={
        "reference_lambda_bar": reference,
        "mu_effective": mu_eff,
        "v_max": float(vvals[i]),
        "c_mean": float(c.values.mean()),
        "resolution_gate": gate,
    })
    for eps in eps_list:
        if eps <= gate:
            table.refused.append(eps)
            continue
        op = BlockParabolicOperator(grid, alpha=eps, beta=eps ** 2)
        pair = principal_eigenpair(op, m, tol=1e-12)
        rescaled = (pair.lam + shift) / eps
        table.rows.append({
            "parameter": eps,
            "lambda": pair.lam,
            "defect": abs(rescaled - reference),
            "rescaled": rescaled,
        })
    table.slope = _fit_slope([r["parameter"] for r in table.rows], table.defects(),
                             floor=1e-13 * max(1.0, abs(reference)))
    return table
