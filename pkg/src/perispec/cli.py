"""Batch driver: JSON config in, deterministic CSV/JSON artifacts out.

Four subcommands cover the toolkit's workflows:

  solve          eigenpair or periodic direct solve of one configuration
  optimize       projected gradient run with box-mean or rearrangement
                 constraints, plus a peak-aligned symmetry report
  sweep          mu or epsilon parameter sweep tables
  gaussian-check batch comparison of the quadratic-ansatz eigenvalue
                 against its value at the rearranged profile

Every command takes --config (one JSON file), --out (artifact directory)
and optionally --seed (overrides the config seed). Artifacts carry the
effective, defaulted configuration so each run is self-describing, floats
are printed with 17 significant digits, and nothing time-stamped is ever
written: identical config and seed give identical bytes.

Profile formulas (the "c" / "V" / reference entries):

  {"formula": "constant", "value": v}
  {"formula": "cos", "offset": 0, "amplitude": 1, "harmonic": 1, "phase": 0}
      time axis:  offset + amplitude*cos(2*pi*harmonic*t/T + phase)
      space axis: offset + amplitude*cos(harmonic*x + phase)
  {"formula": "cone", "center": 0, "radius": r, "amplitude": 1, "offset": 0}
      offset + amplitude*max(0, 1 - |wrap(s - center)|/radius)
  {"file": "samples.csv"}    one comma-separated row of grid values

Fields are either {"kind": "separable", "c": ..., "V": ...} or
{"kind": "field", "file": "m.csv"} with an M x N matrix.

Exit codes: 0 success, 2 malformed config, 3 solver or constraint failure.
"""

import argparse
import json
import os
import sys

import numpy as np

from .grid import SpaceTimeGrid, ScalarField, TimeProfile, SpaceProfile, outer_product
from .pde_ops import BlockParabolicOperator, solve_direct
from .eigensolver import principal_eigenpair
from .rearrangement import (
    RearrangementBody1D,
    RearrangementBody2D,
    body_from_profile,
    body_from_field,
    rearrangement_values,
    aligned_l2_distance,
)
from .projections import project_rearrangement_1d, project_rearrangement_2d
from .objectives import asymmetry_measure
from .optimizer import (
    OptimizerConfig,
    run,
    uniform_start,
    talenti_profile_objective,
    eigenvalue_field_objective,
    eigenvalue_separable_objective,
    eigenvalue_time_profile_objective,
    box_mean_projection,
    body_objective_1d,
    body_projection_1d,
    body_objective_2d,
    body_projection_2d,
)
from .gaussian import gaussian_eigenvalue
from .asymptotics import mu_sweep, epsilon_sweep


class ConfigError(Exception):
    """Malformed or inconsistent configuration input."""


def _req(d, key, ctx):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing '{key}' in {ctx}")
    return d[key]


def _grid_from(cfg):
    g = _req(cfg, "grid", "config")
    try:
        grid = SpaceTimeGrid(T=float(_req(g, "T", "grid")),
                             L_lo=float(g.get("L", [-np.pi, np.pi])[0]),
                             L_hi=float(g.get("L", [-np.pi, np.pi])[1]),
                             N=int(_req(g, "N", "grid")),
                             M=int(_req(g, "M", "grid")))
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"bad grid section: {exc}") from exc
    return grid


def _profile_values(spec, coords, span, ctx, angular=False):
    """Evaluate one formula spec on a coordinate axis.

    Returns (values, effective_spec). angular=True means the coordinate is
    already an angle (space axis); otherwise harmonics are scaled by the
    axis period.
    """
    if not isinstance(spec, dict):
        raise ConfigError(f"{ctx} must be an object")
    if "file" in spec:
        try:
            vals = np.loadtxt(spec["file"], delimiter=",", ndmin=1)
        except OSError as exc:
            raise ConfigError(f"{ctx}: cannot read '{spec['file']}'") from exc
        if vals.shape != coords.shape:
            raise ConfigError(f"{ctx}: file has {vals.shape[0]} samples, grid wants {coords.size}")
        return vals.astype(float), {"file": spec["file"]}
    name = _req(spec, "formula", ctx)
    if name == "constant":
        v = float(_req(spec, "value", ctx))
        return np.full(coords.size, v), {"formula": "constant", "value": v}
    if name == "cos":
        off = float(spec.get("offset", 0.0))
        amp = float(spec.get("amplitude", 1.0))
        har = float(spec.get("harmonic", 1.0))
        ph = float(spec.get("phase", 0.0))
        freq = har if angular else 2.0 * np.pi * har / span
        vals = off + amp * np.cos(freq * coords + ph)
        return vals, {"formula": "cos", "offset": off, "amplitude": amp,
                      "harmonic": har, "phase": ph}
    if name == "cone":
        cen = float(spec.get("center", 0.0))
        rad = float(_req(spec, "radius", ctx))
        amp = float(spec.get("amplitude", 1.0))
        off = float(spec.get("offset", 0.0))
        if rad <= 0:
            raise ConfigError(f"{ctx}: cone radius must be positive")
        w = np.mod(coords - cen + 0.5 * span, span) - 0.5 * span
        vals = off + amp * np.clip(1.0 - np.abs(w) / rad, 0.0, None)
        return vals, {"formula": "cone", "center": cen, "radius": rad,
                      "amplitude": amp, "offset": off}
    raise ConfigError(f"{ctx}: unknown formula '{name}'")


def _time_profile(spec, grid, ctx):
    vals, eff = _profile_values(spec, grid.times(), grid.T, ctx)
    return TimeProfile(grid, vals), eff


def _space_profile(spec, grid, ctx):
    vals, eff = _profile_values(spec, grid.points(), grid.L_hi - grid.L_lo,
                                ctx, angular=True)
    return SpaceProfile(grid, vals), eff


def _field_from(spec, grid, ctx):
    kind = _req(spec, "kind", ctx)
    if kind == "separable":
        c, ceff = _time_profile(_req(spec, "c", ctx), grid, ctx + ".c")
        V, veff = _space_profile(_req(spec, "V", ctx), grid, ctx + ".V")
        return outer_product(c, V), {"kind": "separable", "c": ceff, "V": veff}
    if kind == "field":
        path = _req(spec, "file", ctx)
        try:
            vals = np.loadtxt(path, delimiter=",", ndmin=2)
        except OSError as exc:
            raise ConfigError(f"{ctx}: cannot read '{path}'") from exc
        if vals.shape != (grid.M, grid.N):
            raise ConfigError(f"{ctx}: field file is {vals.shape}, grid wants ({grid.M}, {grid.N})")
        return ScalarField(grid, vals.astype(float)), {"kind": "field", "file": path}
    raise ConfigError(f"{ctx}: unknown field kind '{kind}'")


def _write_json(path, obj):
    def np_default(o):
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.integer):
            return int(o)
        raise TypeError(f"not JSON serializable: {type(o)}")
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True, default=np_default)
        f.write("\n")


def _write_matrix(path, values):
    np.savetxt(path, np.atleast_2d(np.asarray(values)), delimiter=",", fmt="%.17g")


def _field_asymmetry(values):
    # roll the peak to index (0, 0); reflection through it is then i -> -i.
    # cells tying at the maximum are all peaks, so ties are broken by the
    # alignment with the smallest report
    M, N = values.shape
    mx = values.max()
    ties = np.argwhere(values > mx - 1e-9 * max(1.0, abs(mx)))
    best = np.inf
    for i, j in ties:
        cen = np.roll(np.roll(values, -int(i), axis=0), -int(j), axis=1)
        t_ref = cen[:, (-np.arange(N)) % N]
        x_ref = cen[(-np.arange(M)) % M, :]
        best = min(best, float(max(np.abs(cen - t_ref).max(),
                                   np.abs(cen - x_ref).max())))
    return best


def cmd_solve(cfg, out_dir):
    grid = _grid_from(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    beta = float(cfg.get("beta", 1.0))
    tol = float(cfg.get("tol", 1e-10))
    mode = cfg.get("mode", "eigen")
    op = BlockParabolicOperator(grid, alpha=alpha, beta=beta)
    effective = {"grid": grid.to_dict(), "alpha": alpha, "beta": beta,
                 "mode": mode, "tol": tol}

    if mode == "eigen":
        m, meff = _field_from(_req(cfg, "potential", "config"), grid, "potential")
        effective["potential"] = meff
        pair = principal_eigenpair(op, m, tol=tol)
        _write_matrix(os.path.join(out_dir, "solution.csv"), pair.right.values)
        meta = {"mode": mode, "lambda": pair.lam, "residual": pair.residual,
                "iterations": pair.iterations, "config": effective}
    elif mode == "direct":
        rhs, reff = _field_from(_req(cfg, "rhs", "config"), grid, "rhs")
        effective["rhs"] = reff
        phi = solve_direct(op, rhs)
        _write_matrix(os.path.join(out_dir, "solution.csv"), phi.values)
        meta = {"mode": mode, "sup": float(np.abs(phi.values).max()),
                "mean": float(phi.values.mean()), "config": effective}
    else:
        raise ConfigError(f"unknown solve mode '{mode}'")
    _write_json(os.path.join(out_dir, "metadata.json"), meta)


def _optimizer_config(cfg, direction_default, seed):
    o = cfg.get("optimizer", {})
    try:
        return OptimizerConfig(
            max_iters=int(o.get("max_iters", 1000)),
            initial_step=float(o.get("initial_step", 1.0)),
            step_up=float(o.get("step_up", 1.2)),
            step_down=float(o.get("step_down", 0.5)),
            min_step=float(o.get("min_step", 1e-12)),
            tolerance=float(o.get("tolerance", 1e-10)),
            direction=o.get("direction", direction_default),
            seed=seed,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad optimizer section: {exc}") from exc


def cmd_optimize(cfg, out_dir):
    grid = _grid_from(cfg)
    alpha = float(cfg.get("alpha", 1.0))
    beta = float(cfg.get("beta", 1.0))
    seed = int(cfg.get("seed", 0))
    op = BlockParabolicOperator(grid, alpha=alpha, beta=beta)

    obj_cfg = _req(cfg, "objective", "config")
    obj_kind = _req(obj_cfg, "kind", "objective")
    control_kind = _req(cfg, "control", "config").get("kind")
    con_cfg = _req(cfg, "constraint", "config")
    con_kind = _req(con_cfg, "kind", "constraint")
    effective = {"grid": grid.to_dict(), "alpha": alpha, "beta": beta, "seed": seed,
                 "control": {"kind": control_kind}}

    if control_kind not in ("profile", "field"):
        raise ConfigError(f"unknown control kind '{control_kind}'")

    if obj_kind == "talenti":
        if control_kind != "profile":
            raise ConfigError("talenti objective optimizes a time profile")
        k = int(_req(obj_cfg, "k", "objective"))
        V, veff = _space_profile(_req(obj_cfg, "V", "objective"), grid, "objective.V")
        base_objective = talenti_profile_objective(op, V, k)
        effective["objective"] = {"kind": "talenti", "k": k, "V": veff}
        direction_default = "maximize"
    elif obj_kind == "eigenvalue":
        eigen_tol = float(obj_cfg.get("tol", 1e-10))
        effective["objective"] = {"kind": "eigenvalue", "tol": eigen_tol}
        if control_kind == "profile":
            if "V" in obj_cfg:
                # separable potential c(t)V(x); without V the potential is
                # constant in space
                V, veff = _space_profile(obj_cfg["V"], grid, "objective.V")
                base_objective = eigenvalue_separable_objective(op, V, tol=eigen_tol)
                effective["objective"]["V"] = veff
            else:
                base_objective = eigenvalue_time_profile_objective(op, tol=eigen_tol)
        else:
            base_objective = eigenvalue_field_objective(op, tol=eigen_tol)
        direction_default = "minimize"
    else:
        raise ConfigError(f"unknown objective kind '{obj_kind}'")

    ocfg = _optimizer_config(cfg, direction_default, seed)
    effective["optimizer"] = {
        "max_iters": ocfg.max_iters, "initial_step": ocfg.initial_step,
        "step_up": ocfg.step_up, "step_down": ocfg.step_down,
        "min_step": ocfg.min_step, "tolerance": ocfg.tolerance,
        "direction": ocfg.direction,
    }

    size = grid.N if control_kind == "profile" else grid.M * grid.N
    if con_kind == "box_mean":
        lo = float(_req(con_cfg, "lo", "constraint"))
        hi = float(_req(con_cfg, "hi", "constraint"))
        mean = float(_req(con_cfg, "mean", "constraint"))
        if not (lo <= mean <= hi):
            raise ConfigError("constraint mean must lie inside the box")
        effective["constraint"] = {"kind": "box_mean", "lo": lo, "hi": hi, "mean": mean}
        projection = box_mean_projection(lo, hi, mean)
        objective = base_objective
        control0 = projection(uniform_start(lo, hi, size, seed))
        unpack = (lambda v: v) if control_kind == "profile" \
            else (lambda v: v.reshape(grid.M, grid.N))
    elif con_kind == "rearrangement":
        K = int(_req(con_cfg, "K", "constraint"))
        ref_spec = _req(con_cfg, "reference", "constraint")
        if control_kind == "profile":
            ref, reff = _time_profile(ref_spec, grid, "constraint.reference")
            template = body_from_profile(ref, K)
            start = TimeProfile(grid, uniform_start(template.c_min, template.c_max,
                                                    grid.N, seed))
            b0 = project_rearrangement_1d(
                body_from_profile(start, K, c_min=template.c_min, c_max=template.c_max),
                template.q)
            objective = body_objective_1d(base_objective, template)
            projection = body_projection_1d(template)
            control0 = b0.F.ravel()
            unpack = lambda F: template.c_min + F.reshape(K, grid.N).sum(axis=0) / grid.dt
        else:
            ref, reff = _field_from(ref_spec, grid, "constraint.reference")
            template = body_from_field(ref, K)
            start = ScalarField(grid, uniform_start(template.m_min, template.m_max,
                                                    size, seed).reshape(grid.M, grid.N))
            b0 = project_rearrangement_2d(
                body_from_field(start, K, m_min=template.m_min, m_max=template.m_max),
                template.q)
            objective = body_objective_2d(base_objective, template)
            projection = body_projection_2d(template)
            control0 = b0.F.ravel()
            cell = grid.dt * grid.dx
            unpack = lambda F: template.m_min + F.reshape(K, grid.M, grid.N).sum(axis=0) / cell
        effective["constraint"] = {"kind": "rearrangement", "K": K, "reference": reff}
    else:
        raise ConfigError(f"unknown constraint kind '{con_kind}'")

    final, trace = run(objective, control0, projection, ocfg)
    control = unpack(final)
    if control_kind == "profile":
        asym = asymmetry_measure(control)
    else:
        asym = _field_asymmetry(control)

    _write_matrix(os.path.join(out_dir, "control.csv"), control)
    with open(os.path.join(out_dir, "trace.csv"), "w") as f:
        f.write(trace.to_csv())
    report = {
        "objective_final": trace.objectives[-1],
        "stop_reason": trace.stop_reason,
        "evaluations": trace.evaluations,
        "accepted_iterations": len(trace.objectives) - 1,
        "asymmetry": asym,
        "control_min": float(np.min(control)),
        "control_max": float(np.max(control)),
        "control_mean": float(np.mean(control)),
        "config": effective,
    }
    _write_json(os.path.join(out_dir, "report.json"), report)


def cmd_sweep(cfg, out_dir):
    grid = _grid_from(cfg)
    sw = _req(cfg, "sweep", "config")
    kind = _req(sw, "kind", "sweep")
    effective = {"grid": grid.to_dict(), "sweep": {"kind": kind}}
    if kind == "mu":
        m, meff = _field_from(_req(sw, "potential", "sweep"), grid, "sweep.potential")
        mus = list(_req(sw, "mus", "sweep"))
        effective["sweep"]["potential"] = meff
        effective["sweep"]["mus"] = [float(v) for v in mus]
        table = mu_sweep(m, mus, lambda mu: BlockParabolicOperator(grid, alpha=mu, beta=mu))
    elif kind == "epsilon":
        c, ceff = _time_profile(_req(sw, "c", "sweep"), grid, "sweep.c")
        V, veff = _space_profile(_req(sw, "V", "sweep"), grid, "sweep.V")
        eps = list(_req(sw, "epsilons", "sweep"))
        effective["sweep"].update({"c": ceff, "V": veff,
                                   "epsilons": [float(v) for v in eps]})
        table = epsilon_sweep(c, V, eps)
    else:
        raise ConfigError(f"unknown sweep kind '{kind}'")
    with open(os.path.join(out_dir, "sweep.csv"), "w") as f:
        f.write(table.to_csv())
    summary = table.to_json_dict()
    summary["config"] = effective
    _write_json(os.path.join(out_dir, "summary.json"), summary)


def cmd_gaussian_check(cfg, out_dir):
    T = float(cfg.get("T", 2 * np.pi))
    N = int(cfg.get("N", 256))
    count = int(cfg.get("count", 100))
    seed = int(cfg.get("seed", 0))
    mus = [float(v) for v in cfg.get("mus", [0.5, 1.0, 4.0])]
    if count < 1:
        raise ConfigError("count must be at least 1")
    if any(mu <= 0 for mu in mus) or not mus:
        raise ConfigError("mus must be a nonempty list of positive values")
    try:
        grid = SpaceTimeGrid(T=T, L_lo=-np.pi, L_hi=np.pi, N=N, M=4)
    except ValueError as exc:
        raise ConfigError(f"bad grid parameters: {exc}") from exc
    effective = {"T": T, "N": N, "count": count, "seed": seed, "mus": mus}

    t = grid.times()
    rng = np.random.default_rng(seed)
    rows = []
    min_margin = np.inf
    violations = 0
    for idx in range(count):
        vals = np.abs(rng.uniform(0.3, 1.5)
                      + rng.uniform(-1, 1) * np.cos(2 * np.pi * t / T)
                      + rng.uniform(-0.6, 0.6) * np.cos(4 * np.pi * t / T + rng.uniform(0, 6)))
        ch = rearrangement_values(vals)
        dist, _ = aligned_l2_distance(TimeProfile(grid, vals), TimeProfile(grid, ch))
        for mu in mus:
            lam = gaussian_eigenvalue(TimeProfile(grid, vals), [mu]).lambda_bar
            lam_h = gaussian_eigenvalue(TimeProfile(grid, ch), [mu]).lambda_bar
            margin = float(lam - lam_h)
            min_margin = min(min_margin, margin)
            # the rearranged profile can only lower the value; distance far
            # from the symmetric class must produce a strict gap
            bad = margin < -1e-10 or (dist > 1e-3 and margin <= 1e-6)
            violations += int(bad)
            rows.append((idx, mu, float(lam), float(lam_h), margin, float(dist)))

    anchor_err = 0.0
    for mu in mus:
        lam = gaussian_eigenvalue(TimeProfile(grid, np.ones(N)), [mu]).lambda_bar
        anchor_err = max(anchor_err, abs(lam - np.sqrt(mu / 2.0)))

    with open(os.path.join(out_dir, "check.csv"), "w") as f:
        f.write("profile,mu,lambda,lambda_rearranged,margin,aligned_distance\n")
        for row in rows:
            f.write("%d,%.17g,%.17g,%.17g,%.17g,%.17g\n" % row)
    _write_json(os.path.join(out_dir, "summary.json"), {
        "profiles": count,
        "comparisons": len(rows),
        "min_margin": float(min_margin),
        "violations": violations,
        "constant_anchor_error": float(anchor_err),
        "config": effective,
    })
    if violations or anchor_err > 1e-8:
        raise RuntimeError(
            f"gaussian check failed: {violations} violations, "
            f"anchor error {anchor_err:.3e}")


_COMMANDS = {
    "solve": cmd_solve,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "gaussian-check": cmd_gaussian_check,
}


def _build_parser():
    p = argparse.ArgumentParser(prog="perispec",
                                description="periodic parabolic eigenproblem toolkit")
    p.add_argument("--threads", type=int, default=None,
                   help="exported to the BLAS thread environment; pools that "
                        "were already initialized keep their size")
    sub = p.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        q = sub.add_parser(name)
        q.add_argument("--config", required=True, help="path to the JSON config")
        q.add_argument("--out", required=True, help="artifact directory")
        q.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    try:
        with open(args.config) as f:
            cfg = json.load(f)
    except OSError as exc:
        print(json.dumps({"error": f"cannot read config: {exc}"}), file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(json.dumps({"error": f"config is not valid JSON: {exc}"}), file=sys.stderr)
        return 2
    if not isinstance(cfg, dict):
        print(json.dumps({"error": "config root must be an object"}), file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg["seed"] = args.seed
    os.makedirs(args.out, exist_ok=True)
    try:
        _COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
