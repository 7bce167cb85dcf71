"""Projected gradient ascent/descent with an adaptive step.

One generic loop: propose control + step * gradient, project onto the
constraint set, accept only strict improvement in the chosen direction.
Accepted steps grow the step size by step_up, rejections shrink it by
step_down and retry from the same iterate. Controls are flat float arrays;
the adapter factories below lift the domain objectives (profile functional,
principal eigenvalue, subgraph-area bodies) into that array space.

Step constants: initial_step 1, up 1.2, down 0.5, floor 1e-12. Stagnation
stops the loop when the relative objective change over the last 20 accepted
iterations falls below the tolerance.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .grid import ScalarField, SpaceProfile, TimeProfile
from .objectives import eval_eigenvalue, eval_talenti, field_gradient_to_profile
from .pde_ops import BlockParabolicOperator
from .projections import project_box_mean_array, project_rearrangement_1d, project_rearrangement_2d
from .rearrangement import RearrangementBody1D, RearrangementBody2D

_STAGNATION_WINDOW = 20


@dataclass
class OptimizerConfig:
    max_iters: int = 1000
    initial_step: float = 1.0
    step_up: float = 1.2
    step_down: float = 0.5
    min_step: float = 1e-12
    tolerance: float = 1e-10
    direction: str = "maximize"
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.step_down < 1.0 < self.step_up):
            raise ValueError("need 0 < step_down < 1 < step_up")
        if self.min_step <= 0:
            raise ValueError("min_step must be positive")
        if self.initial_step < self.min_step:
            raise ValueError("initial_step must be at least min_step")
        if self.direction not in ("minimize", "maximize"):
            raise ValueError("direction must be 'minimize' or 'maximize'")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass
class OptimizerTrace:
    """Accepted-iterate history; row 0 is the initial control."""

    objectives: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    defects: list = field(default_factory=list)
    evaluations: int = 0
    wall_time: float = 0.0
    stop_reason: str = ""

    def to_csv(self) -> str:
        lines = ["iter,objective,step"]
        for i, (obj, step) in enumerate(zip(self.objectives, self.steps)):
            lines.append(f"{i},{obj:.17g},{step:.17g}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "objectives": list(self.objectives),
            "steps": list(self.steps),
            "defects": list(self.defects),
            "evaluations": self.evaluations,
            "wall_time": self.wall_time,
            "stop_reason": self.stop_reason,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _evaluate(objective, control, iteration):
    try:
        value, grad = objective(control)
    except Exception as exc:
        raise RuntimeError(
            f"objective evaluation failed at iteration {iteration}") from exc
    grad = np.asarray(grad, dtype=float)
    if grad.shape != control.shape:
        raise RuntimeError(
            f"gradient shape {grad.shape} does not match control {control.shape}")
    return float(value), grad


def run(objective, control0, projection, cfg: OptimizerConfig):
    """Optimize objective(control) -> (value, gradient) over projection's set.

    control0 must already be feasible. Returns (control, trace); the trace's
    objective sequence is strictly monotone in cfg.direction and every entry
    corresponds to a projected (feasible) control.
    """
    t0 = time.perf_counter()
    sign = 1.0 if cfg.direction == "maximize" else -1.0
    control = np.array(control0, dtype=float).copy()
    value, grad = _evaluate(objective, control, 0)
    trace = OptimizerTrace(objectives=[value], steps=[0.0], defects=[0.0],
                           evaluations=1)
    gamma = cfg.initial_step
    while True:
        if trace.evaluations >= cfg.max_iters:
            trace.stop_reason = "max_iters"
            break
        if gamma < cfg.min_step:
            trace.stop_reason = "step_underflow"
            break
        proposal = control + sign * gamma * grad
        projected = projection(proposal)
        projected = np.asarray(projected, dtype=float)
        new_value, new_grad = _evaluate(objective, projected, trace.evaluations)
        trace.evaluations += 1
        if sign * (new_value - value) > 0.0:
            control, value, grad = projected, new_value, new_grad
            trace.objectives.append(value)
            trace.steps.append(gamma)
            trace.defects.append(float(np.abs(projected - proposal).max()))
            gamma *= cfg.step_up
            if len(trace.objectives) > _STAGNATION_WINDOW:
                recent = trace.objectives[-(_STAGNATION_WINDOW + 1):]
                if abs(recent[-1] - recent[0]) < cfg.tolerance * max(1.0, abs(recent[-1])):
                    trace.stop_reason = "stagnation"
                    break
        else:
            gamma *= cfg.step_down
    trace.wall_time = time.perf_counter() - t0
    return control, trace


def uniform_start(lo, hi, size, seed):
    """Random control in the box, to be projected by the caller."""
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size)


# ---------------------------------------------------------------------------
# adapters: domain objectives and constraints as array-space callables


def talenti_profile_objective(op: BlockParabolicOperator, V: SpaceProfile, k: int):
    """Profile functional as c_values -> (value, pointwise-in-time gradient)."""
    def fn(c_values):
        ev = eval_talenti(TimeProfile(op.grid, c_values), V, k, op)
        return ev.value, ev.grad_profile.values / op.grid.dt
    return fn


def eigenvalue_field_objective(op: BlockParabolicOperator, tol: float = 1e-10):
    """Eigenvalue as flat m -> (value, pointwise gradient), shape (M*N,)."""
    grid = op.grid
    def fn(m_flat):
        m = ScalarField(grid, m_flat.reshape(grid.M, grid.N))
        ev = eval_eigenvalue(m, op, tol=tol)
        return ev.value, (ev.grad_field.values / (grid.dt * grid.dx)).ravel()
    return fn


def eigenvalue_separable_objective(op: BlockParabolicOperator, V: SpaceProfile,
                                   tol: float = 1e-10):
    """Eigenvalue of a separable potential c(t)V(x) as a profile objective."""
    grid = op.grid
    def fn(c_values):
        m = ScalarField(grid, np.outer(V.values, c_values))
        ev = eval_eigenvalue(m, op, tol=tol)
        return ev.value, field_gradient_to_profile(ev.grad_field, V).values / grid.dt
    return fn


def eigenvalue_time_profile_objective(op: BlockParabolicOperator, tol: float = 1e-10):
    """Eigenvalue of a space-constant potential m(t,x) = c(t)."""
    grid = op.grid
    def fn(c_values):
        m = ScalarField(grid, np.tile(c_values, (grid.M, 1)))
        ev = eval_eigenvalue(m, op, tol=tol)
        return ev.value, ev.grad_field.values.sum(axis=0) / grid.dt
    return fn


def box_mean_projection(lo, hi, target_mean, tol: float = 1e-12):
    def proj(values):
        return project_box_mean_array(values, lo, hi, target_mean, tol=tol)
    return proj


def body_objective_1d(profile_objective, template: RearrangementBody1D):
    """Lift a profile objective to the flat subgraph-area control F.

    The profile is c = c_min + column sums of F / dt. With the pointwise
    gradient convention of the factories above, the chain rule makes the
    F-space sensitivity of every cell in a column equal to the profile's
    pointwise gradient there, with no extra scaling.
    """
    K, N = template.K, template.grid.N
    dt = template.grid.dt

    def fn(F_flat):
        F = F_flat.reshape(K, N)
        c_values = template.c_min + F.sum(axis=0) / dt
        value, grad_c = profile_objective(c_values)
        return value, np.tile(grad_c, (K, 1)).ravel()
    return fn


def body_projection_1d(template: RearrangementBody1D):
    def proj(F_flat):
        b = RearrangementBody1D(grid=template.grid, K=template.K,
                                c_min=template.c_min, c_max=template.c_max,
                                F=F_flat.reshape(template.K, template.grid.N),
                                q=template.q)
        return project_rearrangement_1d(b, template.q).F.ravel()
    return proj


def body_objective_2d(field_objective, template: RearrangementBody2D):
    """Same lift for space-time potentials; control is F of shape (K, M, N)."""
    K = template.K
    M, N = template.grid.M, template.grid.N
    cell = template.grid.dt * template.grid.dx

    def fn(F_flat):
        F = F_flat.reshape(K, M, N)
        m_flat = (template.m_min + F.sum(axis=0) / cell).ravel()
        value, grad_m = field_objective(m_flat)
        return value, np.tile(grad_m, K)
    return fn


def body_projection_2d(template: RearrangementBody2D):
    shape = (template.K, template.grid.M, template.grid.N)

    def proj(F_flat):
        b = RearrangementBody2D(grid=template.grid, K=template.K,
                                m_min=template.m_min, m_max=template.m_max,
                                F=F_flat.reshape(shape), q=template.q)
        return project_rearrangement_2d(b, template.q).F.ravel()
    return proj
