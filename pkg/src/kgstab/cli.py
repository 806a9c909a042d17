"""Scenario configs, the analysis pipeline, and the command-line front end.

A scenario is a JSON file:

    {
      "dimension": 1, "p": 3.0, "m": 1.0, "omega": 0.9,
      "mode": "general",
      "potentials": {
        "V": [],
        "W": [{"type": "gaussian", "amplitude": 0.05, "center": [0.0], "width": 1.0}]
      },
      "epsilons": [0.1, 0.05, 0.025],
      "analyses": {"slope_numeric": true, "slope_asymptotic": true,
                   "spectrum": true, "dynamics": false},
      "dynamics": {"delta": 1e-3, "kind": "radial-bump", "seed": 0,
                   "T_over_epsilon": 100.0, "dt_factor": 0.2, "order": 2,
                   "record_every": 20, "tube_stay": 10.0, "tube_exit": 100.0},
      "tol": 1e-10,
      "out": "results"
    }

Potential terms are `gaussian` (amplitude, center, width) or `quadratic`
(matrix, center).  Epsilons are deduplicated and sorted descending so
each continuation re-marches from the limit state toward harder targets
last.  The pipeline per scenario: locate the concentration point, check
the standing assumptions, solve the limit state, then per epsilon run
the enabled analyses; failures inside one block are recorded in place of
its results and turn the exit status nonzero without aborting the rest.

Subcommands: analyze, evolve (dynamics only), sweep (requires a top
level "omegas" list), report (re-export a written report).  The physics
verdict never sets the exit status; only computational failure does.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import dynamics as dyn
from . import io as kio
from . import spectrum as spx
from . import stability as st
from .elliptic import Profile, continue_profile, solve_limit_ground_state
from .errors import KgError, SchemaError
from .grids import Grid
from .potentials import (
    EffectiveZ,
    GaussianTerm,
    PotentialPair,
    PotentialSpec,
    ProblemParams,
    QuadraticTerm,
    check_assumptions,
    find_critical_point,
    resolve_potentials,
)

ANALYSES = ("slope_numeric", "slope_asymptotic", "spectrum", "dynamics")


@dataclass(frozen=True)
class DynamicsOptions:
    delta: float = 1e-3
    kind: str = "radial-bump"
    seed: int = 0
    T_over_epsilon: float = 100.0
    dt_factor: float = 0.2
    order: int = 2
    record_every: int = 20
    tube_stay: float = 10.0
    tube_exit: float = 100.0
    grid: Grid | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    params: ProblemParams  # epsilon slot holds the first sweep value
    pair: PotentialPair
    epsilons: tuple
    analyses: tuple  # enabled analysis names, schema order
    grid: Grid | None
    dynamics: DynamicsOptions | None
    tol: float
    domega: float | None
    critical_guess: tuple
    out: str | None


# ---------------------------------------------------------------------------
# config parsing


def _expect(cond: bool, ptr: str, msg: str) -> None:
    if not cond:
        raise SchemaError(ptr, msg)


def _number(raw: dict, key: str, ptr: str, default=None, required: bool = False):
    if key not in raw:
        _expect(not required, f"{ptr}/{key}", "missing required field")
        return default
    val = raw[key]
    _expect(
        isinstance(val, (int, float)) and not isinstance(val, bool),
        f"{ptr}/{key}",
        "expected a number",
    )
    return float(val)


def _vector(val, dim: int, ptr: str) -> tuple:
    _expect(
        isinstance(val, list) and len(val) == dim,
        ptr,
        f"expected a length-{dim} array",
    )
    for i, x in enumerate(val):
        _expect(
            isinstance(x, (int, float)) and not isinstance(x, bool),
            f"{ptr}/{i}",
            "expected a number",
        )
    return tuple(float(x) for x in val)


def _parse_terms(raw, dim: int, ptr: str) -> tuple:
    if raw is None:
        return ()
    _expect(isinstance(raw, list), ptr, "expected an array of potential terms")
    terms = []
    for i, t in enumerate(raw):
        tp = f"{ptr}/{i}"
        _expect(isinstance(t, dict), tp, "expected a term object")
        kind = t.get("type")
        if kind == "gaussian":
            amp = _number(t, "amplitude", tp, required=True)
            width = _number(t, "width", tp, default=1.0)
            center = _vector(t.get("center", [0.0] * dim), dim, f"{tp}/center")
            _expect(width > 0.0, f"{tp}/width", "width must be positive")
            terms.append(GaussianTerm(amp, center, width))
        elif kind == "quadratic":
            m = t.get("matrix")
            _expect(isinstance(m, list) and len(m) == dim, f"{tp}/matrix", f"expected a {dim}x{dim} matrix")
            rows = tuple(_vector(r, dim, f"{tp}/matrix/{j}") for j, r in enumerate(m))
            center = _vector(t.get("center", [0.0] * dim), dim, f"{tp}/center")
            try:
                terms.append(QuadraticTerm(rows, center))
            except SchemaError as exc:
                raise SchemaError(f"{tp}/matrix", exc.reason) from None
        else:
            raise SchemaError(f"{tp}/type", "expected 'gaussian' or 'quadratic'")
    return tuple(terms)


def _parse_grid(raw, dim: int, ptr: str) -> Grid | None:
    if raw is None:
        return None
    _expect(isinstance(raw, dict), ptr, "expected a grid object")
    geometry = raw.get("geometry", "line" if dim == 1 else "box")
    extent = _number(raw, "extent", ptr, required=True)
    n = raw.get("n")
    _expect(isinstance(n, int) and not isinstance(n, bool), f"{ptr}/n", "expected an integer")
    try:
        return Grid(dim, geometry, extent, n)
    except SchemaError as exc:
        # Grid reports "/grid/<field>"; splice into this config's pointer
        tail = exc.path.removeprefix("/grid")
        raise SchemaError(f"{ptr}{tail}", exc.reason) from None


def parse_scenario_dict(raw: dict) -> ScenarioConfig:
    _expect(isinstance(raw, dict), "", "config root must be an object")
    dim = raw.get("dimension")
    _expect(isinstance(dim, int) and not isinstance(dim, bool), "/dimension", "expected an integer")
    p = _number(raw, "p", "", required=True)
    m = _number(raw, "m", "", required=True)
    omega = _number(raw, "omega", "", required=True)
    mode = raw.get("mode", "general")

    eps_raw = raw.get("epsilons")
    _expect(
        isinstance(eps_raw, list) and len(eps_raw) > 0,
        "/epsilons",
        "expected a nonempty array",
    )
    for i, e in enumerate(eps_raw):
        _expect(
            isinstance(e, (int, float)) and not isinstance(e, bool) and e >= 0.0,
            f"/epsilons/{i}",
            "expected a number >= 0",
        )
    epsilons = tuple(sorted({float(e) for e in eps_raw}, reverse=True))

    try:
        params = ProblemParams(
            dimension=dim, p=p, m=m, omega=omega, epsilon=epsilons[0], mode=mode
        )
    except SchemaError as exc:
        raise SchemaError(exc.path.removeprefix("/params"), exc.reason) from None

    pots = raw.get("potentials", {})
    _expect(isinstance(pots, dict), "/potentials", "expected an object")
    v_terms = _parse_terms(pots.get("V"), dim, "/potentials/V")
    w_terms = _parse_terms(pots.get("W"), dim, "/potentials/W")
    spec_v = PotentialSpec(dimension=dim, terms=v_terms) if v_terms else None
    spec_w = PotentialSpec(dimension=dim, terms=w_terms) if w_terms else None
    pair = resolve_potentials(params, spec_v, spec_w)

    analyses_raw = raw.get(
        "analyses",
        {"slope_numeric": True, "slope_asymptotic": True, "spectrum": True},
    )
    _expect(isinstance(analyses_raw, dict), "/analyses", "expected an object")
    for key in analyses_raw:
        _expect(key in ANALYSES, f"/analyses/{key}", f"unknown analysis (valid: {', '.join(ANALYSES)})")
    enabled = tuple(a for a in ANALYSES if analyses_raw.get(a, False))
    _expect(len(enabled) > 0, "/analyses", "at least one analysis must be enabled")
    if dim == 3:
        _expect(
            enabled == ("slope_asymptotic",),
            "/analyses",
            "dimension 3 supports only slope_asymptotic at desk scale",
        )
    if "dynamics" in enabled:
        _expect(dim <= 2, "/analyses/dynamics", "time evolution runs in dimension 1 or 2")

    dyn_opts = None
    if "dynamics" in enabled:
        draw = raw.get("dynamics", {})
        _expect(isinstance(draw, dict), "/dynamics", "expected an object")
        kind = draw.get("kind", "radial-bump")
        _expect(
            kind in ("radial-bump", "random-smooth", "none"),
            "/dynamics/kind",
            "expected radial-bump | random-smooth | none",
        )
        seed = draw.get("seed", 0)
        _expect(isinstance(seed, int) and not isinstance(seed, bool), "/dynamics/seed", "expected an integer")
        order = draw.get("order", 2)
        _expect(order in (2, 4), "/dynamics/order", "expected 2 or 4")
        rec = draw.get("record_every", 20)
        _expect(isinstance(rec, int) and rec > 0, "/dynamics/record_every", "expected a positive integer")
        dyn_opts = DynamicsOptions(
            delta=_number(draw, "delta", "/dynamics", default=1e-3),
            kind=kind,
            seed=seed,
            T_over_epsilon=_number(draw, "T_over_epsilon", "/dynamics", default=100.0),
            dt_factor=_number(draw, "dt_factor", "/dynamics", default=0.2),
            order=order,
            record_every=rec,
            tube_stay=_number(draw, "tube_stay", "/dynamics", default=10.0),
            tube_exit=_number(draw, "tube_exit", "/dynamics", default=100.0),
            grid=_parse_grid(draw.get("grid"), dim, "/dynamics/grid"),
        )

    guess = raw.get("critical_guess")
    critical_guess = (
        _vector(guess, dim, "/critical_guess") if guess is not None else (0.0,) * dim
    )
    tol = _number(raw, "tol", "", default=1e-10)
    domega = _number(raw, "domega", "", default=None)
    out = raw.get("out")
    _expect(out is None or isinstance(out, str), "/out", "expected a string path")

    return ScenarioConfig(
        params=params,
        pair=pair,
        epsilons=epsilons,
        analyses=enabled,
        grid=_parse_grid(raw.get("grid"), dim, "/grid"),
        dynamics=dyn_opts,
        tol=tol,
        domega=domega,
        critical_guess=critical_guess,
        out=out,
    )


def parse_scenario(path) -> ScenarioConfig:
    try:
        with open(path) as f:
            raw = json.load(f)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from None
    return parse_scenario_dict(raw)


def emit_config(config: ScenarioConfig) -> dict:
    """Canonical dict form; parse_scenario_dict(emit_config(c)) == c."""

    def term_dict(t):
        if isinstance(t, GaussianTerm):
            return {
                "type": "gaussian",
                "amplitude": t.amplitude,
                "center": list(t.center),
                "width": t.width,
            }
        return {
            "type": "quadratic",
            "matrix": [list(r) for r in t.matrix],
            "center": list(t.center),
        }

    def grid_dict(g):
        return None if g is None else {"geometry": g.geometry, "extent": g.extent, "n": g.n}

    out: dict = {
        "dimension": config.params.dimension,
        "p": config.params.p,
        "m": config.params.m,
        "omega": config.params.omega,
        "mode": config.params.mode,
        "potentials": {
            "V": [term_dict(t) for t in config.pair.spec_V.terms],
            "W": []
            if config.params.mode == "covariant"
            else [term_dict(t) for t in config.pair.spec_W.terms],
        },
        "epsilons": list(config.epsilons),
        "analyses": {a: a in config.analyses for a in ANALYSES},
        "critical_guess": list(config.critical_guess),
        "tol": config.tol,
    }
    if config.domega is not None:
        out["domega"] = config.domega
    if config.grid is not None:
        out["grid"] = grid_dict(config.grid)
    if config.dynamics is not None:
        d = config.dynamics
        out["dynamics"] = {
            "delta": d.delta,
            "kind": d.kind,
            "seed": d.seed,
            "T_over_epsilon": d.T_over_epsilon,
            "dt_factor": d.dt_factor,
            "order": d.order,
            "record_every": d.record_every,
            "tube_stay": d.tube_stay,
            "tube_exit": d.tube_exit,
        }
        if d.grid is not None:
            out["dynamics"]["grid"] = grid_dict(d.grid)
    if config.out is not None:
        out["out"] = config.out
    return out


# ---------------------------------------------------------------------------
# grid sizing heuristics (desk scale)


def _auto_limit_grid(dim: int, z0: float) -> Grid:
    root = np.sqrt(z0)
    if dim == 1:
        extent = 24.0 / root
        n = min(int(round(2.0 * extent / 0.01)) + 1, 24001)
        return Grid(1, "line", extent, n)
    extent = 28.0 / root
    n = min(int(round(extent / 0.01)) + 1, 4001)
    return Grid(dim, "radial", extent, n)


def _auto_box_grid(dim: int, z0: float) -> Grid:
    extent = 13.2 / np.sqrt(z0)
    return Grid(dim, "box", extent, 481)


def _auto_dynamics_grid(dim: int, z0: float, t_over_eps: float) -> Grid:
    root = np.sqrt(z0)
    extent = 20.0 / root + t_over_eps + 10.0
    h = 0.05 / root
    n = min(int(round(2.0 * extent / h)) + 1, 32001)
    if dim == 1:
        return Grid(1, "line", extent, n)
    return Grid(dim, "box", extent, min(n, 481))


# ---------------------------------------------------------------------------
# pipeline


def _profile_summary(profile: Profile) -> dict:
    return {
        "extent": profile.grid.extent,
        "n": profile.grid.n,
        "geometry": profile.grid.geometry,
        "residual": profile.residual,
        "mass": profile.mass(),
        "peak_location": list(profile.peak),
        "peak_value": float(np.max(profile.values)),
    }


def _error_entry(exc: Exception) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}


def _epsilon_block(
    config: ScenarioConfig,
    z: EffectiveZ,
    limit: Profile,
    box_limit: Profile | None,
    epsilon: float,
) -> dict:
    params = replace(config.params, epsilon=epsilon)
    pair = config.pair
    block: dict = {"epsilon": epsilon}
    want_slope = (
        "slope_numeric" in config.analyses or "slope_asymptotic" in config.analyses
    )
    want_spectrum = "spectrum" in config.analyses
    want_dynamics = "dynamics" in config.analyses

    profile = None
    if want_slope or want_spectrum:
        base = box_limit if box_limit is not None else limit
        try:
            if epsilon == 0.0:
                profile = base
            else:
                profile = continue_profile(
                    limit, params, pair, z, grid=base.grid, tol=config.tol
                )
            block["profile"] = _profile_summary(profile)
        except KgError as exc:
            block["profile"] = _error_entry(exc)

    slope_report = None
    if want_slope:
        if profile is None:
            block["slope"] = {"error": {"type": "SkippedError", "message": "no profile"}}
        else:
            try:
                slope_report = st.build_slope_report(
                    profile,
                    params,
                    pair,
                    z,
                    limit,
                    domega=config.domega,
                    tol=config.tol,
                    with_numeric="slope_numeric" in config.analyses and epsilon > 0.0,
                )
                block["slope"] = kio.to_jsonable(slope_report)
            except KgError as exc:
                block["slope"] = _error_entry(exc)

    if want_spectrum:
        if profile is None:
            block["spectrum"] = {"error": {"type": "SkippedError", "message": "no profile"}}
        else:
            try:
                spec_report = spx.build_spectrum_report(profile, params, pair, z, limit)
                if slope_report is None:
                    slope_report = st.build_slope_report(
                        profile, params, pair, z, limit, with_numeric=False
                    )
                spec_report = spx.gss_classify(spec_report, slope_report)
                block["spectrum"] = kio.to_jsonable(spec_report)
                block["gss_verdict"] = spec_report.gss
            except KgError as exc:
                block["spectrum"] = _error_entry(exc)

    if want_dynamics:
        try:
            block["dynamics"] = _dynamics_block(config, z, epsilon)
        except KgError as exc:
            block["dynamics"] = _error_entry(exc)

    return block


def _dynamics_block(config: ScenarioConfig, z: EffectiveZ, epsilon: float) -> dict:
    opts = config.dynamics or DynamicsOptions()
    params = replace(config.params, epsilon=epsilon)
    if epsilon <= 0.0:
        return {"error": {"type": "SkippedError", "message": "dynamics needs epsilon > 0"}}
    grid = opts.grid or _auto_dynamics_grid(
        params.dimension, z.z0, opts.T_over_epsilon
    )
    limit = solve_limit_ground_state(z.z0, params.p, grid, tol=config.tol)
    profile = continue_profile(limit, params, config.pair, z, grid=grid, tol=config.tol)
    phi_h1 = dyn.h1_norm(grid, profile.values, epsilon, params.dimension)
    pert = dyn.Perturbation(kind=opts.kind, delta=opts.delta, seed=opts.seed)
    state = dyn.init_perturbed_standing_wave(profile, params, config.pair, pert)
    dt = opts.dt_factor * epsilon * grid.h
    record = dyn.evolve(
        state,
        params,
        config.pair,
        dt,
        opts.T_over_epsilon * epsilon,
        record_every=opts.record_every,
        profile=profile,
        tube_exit=opts.tube_exit * opts.delta * phi_h1 if opts.delta > 0 else None,
        delta=opts.delta,
        order=opts.order,
    )
    stay_radius = opts.tube_stay * opts.delta * phi_h1
    out = {
        "verdict": record.verdict,
        "delta": opts.delta,
        "kind": opts.kind,
        "seed": opts.seed,
        "dt": dt,
        "steps": record.steps,
        "grid": {"extent": grid.extent, "n": grid.n},
        "profile_h1_norm": phi_h1,
        "max_distance": record.max_distance,
        "within_stable_band": bool(record.max_distance <= stay_radius)
        if opts.delta > 0
        else None,
        "exit_time": record.exit_time,
        "energy_drift": record.energy_drift,
        "charge_drift": record.charge_drift,
        "blow_up": record.blow_up,
        "boundary_touched": record.boundary_touched,
    }
    out["_trajectory"] = record  # stripped before serialization
    return out


def run_scenario(config: ScenarioConfig, threads: int = 1) -> tuple[dict, int]:
    """Full pipeline; returns (report, exit_code).

    Exit code 0 means every enabled analysis completed, whatever the
    physics verdict; assumption failures or block errors give 1.
    """
    params = config.params
    pair = config.pair
    scenario = emit_config(config)
    scenario.pop("out", None)  # delivery path, not scenario content
    report: dict = {"scenario": scenario}

    try:
        z = find_critical_point(params, pair, config.critical_guess)
    except KgError as exc:
        report["assumptions"] = _error_entry(exc)
        report["blocks"] = []
        return report, 1

    assumptions = check_assumptions(z)
    report["assumptions"] = {
        "critical_point": list(z.x0),
        "z0": z.z0,
        "grad_norm": z.grad_norm,
        "hessian_eigenvalues": list(z.hess_eigs),
        "hessian_negatives": z.hessian_negatives(),
        "laplacian_Z": z.laplacian_Z,
        "ok": assumptions.all_ok,
        "messages": list(assumptions.messages),
    }
    if not assumptions.all_ok:
        report["blocks"] = []
        return report, 1

    limit_grid = config.grid if (config.grid and config.grid.geometry != "box") else None
    if limit_grid is None:
        limit_grid = _auto_limit_grid(params.dimension, z.z0)
    limit = solve_limit_ground_state(z.z0, params.p, limit_grid, tol=config.tol)
    report["limit"] = _profile_summary(limit)

    box_limit = None
    if params.dimension == 2 and any(
        a in config.analyses for a in ("slope_numeric", "spectrum")
    ):
        box_grid = config.grid if (config.grid and config.grid.geometry == "box") else None
        if box_grid is None:
            box_grid = _auto_box_grid(params.dimension, z.z0)
        box_limit = continue_profile(
            limit, replace(params, epsilon=0.0), pair, z, grid=box_grid, tol=config.tol
        )

    def one(eps: float) -> dict:
        return _epsilon_block(config, z, limit, box_limit, eps)

    if threads > 1 and len(config.epsilons) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(one, config.epsilons))
    else:
        blocks = [one(e) for e in config.epsilons]

    trajectories = {}
    for block in blocks:
        dblock = block.get("dynamics")
        if isinstance(dblock, dict) and "_trajectory" in dblock:
            trajectories[block["epsilon"]] = dblock.pop("_trajectory")
    report["blocks"] = blocks

    slope_rows = []
    shift_rows = []
    for block in blocks:
        eps = block["epsilon"]
        sl = block.get("slope")
        if isinstance(sl, dict) and "error" not in sl and eps > 0:
            slope_rows.append(
                [eps, sl.get("slope_scaled"), sl.get("asymptotic_slope_scaled")]
            )
        sp = block.get("spectrum")
        if isinstance(sp, dict) and "error" not in sp and eps > 0:
            lam = sp["eigenvalues"]
            preds = sp["predicted_shifts"]
            row = [eps]
            for j in range(len(preds)):
                row.append(lam[1 + j] / eps**2 if 1 + j < len(lam) else None)
            row.extend(preds)
            shift_rows.append(row)
    report["convergence"] = {"slope_scaled": slope_rows, "shifts": shift_rows}

    verdicts = {
        str(b["epsilon"]): b.get("gss_verdict", "not-computed") for b in blocks
    }
    distinct = {v for v in verdicts.values() if v != "not-computed"}
    overall = distinct.pop() if len(distinct) == 1 else ("mixed" if distinct else "not-computed")
    report["verdict"] = {"by_epsilon": verdicts, "overall": overall}

    failed = not assumptions.all_ok
    for block in blocks:
        for key in ("profile", "slope", "spectrum", "dynamics"):
            entry = block.get(key)
            if isinstance(entry, dict) and "error" in entry:
                failed = True
    report["_trajectories"] = trajectories  # stripped before serialization
    return report, 1 if failed else 0


# ---------------------------------------------------------------------------
# front end


def _write_outputs(report: dict, out_dir: str, meta: dict) -> None:
    out = Path(out_dir)
    trajectories = report.pop("_trajectories", {})
    kio.write_report(report, out / "report.json", meta=meta)
    conv = report.get("convergence", {})
    if conv.get("slope_scaled"):
        kio.write_csv(
            out / "slope_convergence.csv",
            ["epsilon", "slope_scaled_numeric", "slope_scaled_asymptotic"],
            conv["slope_scaled"],
        )
    if conv.get("shifts"):
        width = max(len(r) for r in conv["shifts"])
        npred = (width - 1) // 2
        header = (
            ["epsilon"]
            + [f"lambda{j + 1}_over_eps2" for j in range(npred)]
            + [f"c{j + 1}" for j in range(npred)]
        )
        kio.write_csv(out / "shift_convergence.csv", header, conv["shifts"])
    for eps, rec in trajectories.items():
        kio.trajectory_to_csv(rec, out / f"trajectory_eps_{eps:g}.csv")


def _apply_overrides(config: ScenarioConfig, args) -> ScenarioConfig:
    if getattr(args, "tol", None) is not None:
        config = replace(config, tol=args.tol)
    if getattr(args, "seed", None) is not None and config.dynamics is not None:
        config = replace(config, dynamics=replace(config.dynamics, seed=args.seed))
    if getattr(args, "out", None) is not None:
        config = replace(config, out=args.out)
    return config


def _cmd_analyze(args) -> int:
    config = _apply_overrides(parse_scenario(args.config), args)
    t0 = time.perf_counter()
    report, code = run_scenario(config, threads=args.threads)
    meta = {"command": "analyze", "runtime_s": time.perf_counter() - t0}
    _write_outputs(report, config.out or "kgstab-out", meta)
    print(f"verdict: {report.get('verdict', {}).get('overall', 'n/a')}")
    return code


def _cmd_evolve(args) -> int:
    config = _apply_overrides(parse_scenario(args.config), args)
    if "dynamics" not in config.analyses:
        raise SchemaError("/analyses/dynamics", "evolve requires the dynamics analysis")
    config = replace(config, analyses=("dynamics",))
    t0 = time.perf_counter()
    report, code = run_scenario(config, threads=args.threads)
    meta = {"command": "evolve", "runtime_s": time.perf_counter() - t0}
    _write_outputs(report, config.out or "kgstab-out", meta)
    for block in report["blocks"]:
        d = block.get("dynamics", {})
        print(f"epsilon {block['epsilon']:g}: {d.get('verdict', d.get('error'))}")
    return code


def _cmd_sweep(args) -> int:
    with open(args.config) as f:
        raw = json.load(f)
    omegas = raw.pop("omegas", None)
    if not isinstance(omegas, list) or not omegas:
        raise SchemaError("/omegas", "sweep needs a nonempty omegas array")
    rows = []
    worst = 0
    out_dir = Path(args.out or raw.get("out") or "kgstab-out")
    for i, om in enumerate(omegas):
        if not isinstance(om, (int, float)) or isinstance(om, bool):
            raise SchemaError(f"/omegas/{i}", "expected a number")
        sub = dict(raw)
        sub["omega"] = float(om)
        config = _apply_overrides(parse_scenario_dict(sub), args)
        report, code = run_scenario(config, threads=args.threads)
        worst = max(worst, code)
        report.pop("_trajectories", None)
        kio.write_report(
            report, out_dir / f"report_omega_{om:g}.json", meta={"command": "sweep"}
        )
        for block in report["blocks"]:
            sl = block.get("slope", {})
            rows.append(
                [
                    om,
                    block["epsilon"],
                    sl.get("slope_scaled"),
                    sl.get("slope_sign"),
                    block.get("gss_verdict", "not-computed"),
                ]
            )
    kio.write_csv(
        out_dir / "sweep.csv",
        ["omega", "epsilon", "slope_scaled", "slope_sign", "gss_verdict"],
        rows,
    )
    print(f"sweep: {len(rows)} rows -> {out_dir / 'sweep.csv'}")
    return worst


def _cmd_report(args) -> int:
    report = kio.read_report(args.report)
    if args.format == "json":
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return 0
    out = Path(args.out or ".")
    conv = report.get("convergence", {})
    kio.write_csv(
        out / "slope_convergence.csv",
        ["epsilon", "slope_scaled_numeric", "slope_scaled_asymptotic"],
        conv.get("slope_scaled", []),
    )
    rows = conv.get("shifts", [])
    if rows:
        width = max(len(r) for r in rows)
        npred = (width - 1) // 2
        header = (
            ["epsilon"]
            + [f"lambda{j + 1}_over_eps2" for j in range(npred)]
            + [f"c{j + 1}" for j in range(npred)]
        )
        kio.write_csv(out / "shift_convergence.csv", header, rows)
    print(f"csv tables -> {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kgstab",
        description="stability analysis of semiclassical standing waves",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--tol", type=float, help="solver tolerance override")
        sp.add_argument("--threads", type=int, default=1, help="parallel epsilon blocks")
        sp.add_argument("--seed", type=int, help="perturbation seed override")

    pa = sub.add_parser("analyze", help="assumptions, slope, spectrum, verdict")
    pa.add_argument("config")
    common(pa)
    pa.set_defaults(func=_cmd_analyze)

    pe = sub.add_parser("evolve", help="dynamics runs only")
    pe.add_argument("config")
    common(pe)
    pe.set_defaults(func=_cmd_evolve)

    ps = sub.add_parser("sweep", help="analyze across an omegas list")
    ps.add_argument("config")
    common(ps)
    ps.set_defaults(func=_cmd_sweep)

    pr = sub.add_parser("report", help="re-export a written report")
    pr.add_argument("report")
    pr.add_argument("--format", choices=("json", "csv"), default="json")
    pr.add_argument("--out", help="output directory for csv")
    pr.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"config error at {exc.path or '/'}: {exc.reason}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except KgError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
