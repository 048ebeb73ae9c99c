"""Scenario configuration, validation gates, run orchestration, and output.

A scenario is a JSON document (or a bundled preset) declaring the graph,
the cost family, the gains, the algorithm variant, integration settings,
the initial-state rule, and diagnostic toggles.  Loading validates every
hypothesis the algorithms rely on and rejects violations with the named
hypothesis in the message.  Running a scenario integrates, attaches the
requested diagnostics, checks the runtime invariants, and emits
plot-ready CSV plus JSON reports.
"""

import csv
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis, presets
from .costs import (
    GlobalObjective,
    MinimizerResult,
    estimate_mf,
    minimizer_oracle,
    quadratic_family,
    quartic_family,
)
from .dynamics import (
    GainParams,
    SwarmState,
    Trajectory,
    equilibrium_residual,
    integrate,
    rhs_alternative,
    rhs_continuous,
    v_balance_violation,
)
from .events import (
    TriggerParams,
    default_eps0,
    make_trigger_law,
    simulate_event,
    varphi_all,
    zeno_report,
)
from .graph import NetworkGraph, build_graph, connected_components, is_connected, spectral

SCHEMA_VERSION = 1
OUT_DIR_ENV = "SOCOPT_OUT_DIR"
ALGORITHMS = ("continuous", "alternative", "event")

V_BALANCE_TOL = 1e-10
DISCIPLINE_TOL = 1e-9
CHI_FLOOR_TOL = 1e-9


class ConfigError(ValueError):
    """Scenario configuration that fails validation."""


@dataclass
class Diagnostics:
    lyapunov: bool = False
    constants: bool = False
    rate_fit: bool = False


@dataclass
class InitialSpec:
    """Either explicit state literals or a seeded uniform box."""

    x: np.ndarray | None = None
    y: np.ndarray | None = None
    v: np.ndarray | None = None
    box: tuple[float, float] | None = None
    seed: int | None = None


@dataclass
class Scenario:
    name: str
    graph: NetworkGraph
    obj: GlobalObjective
    gains: GainParams
    algorithm: str
    step: float
    horizon: float
    initial: InitialSpec
    diagnostics: Diagnostics
    trigger: TriggerParams | None = None
    eps0: float | None = None
    eps: float = 0.1
    threshold_denominator: str = "varphi"
    mbar_override: float | None = None
    config: dict = field(default_factory=dict)


def _require(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _build_costs(cost_cfg: dict) -> tuple[GlobalObjective, float | None]:
    kind = cost_cfg.get("kind")
    mbar_override = cost_cfg.get("lipschitz_override")
    if kind == "quadratic_shift":
        costs = quadratic_family(cost_cfg["matrices"], shifts=cost_cfg["shifts"])
    elif kind == "quadratic_linear":
        costs = quadratic_family(cost_cfg["matrices"], linear_terms=cost_cfg["linear_terms"])
    elif kind == "quartic":
        costs = quartic_family(cost_cfg["centers"])
        if mbar_override is not None:
            for c in costs:
                c.global_lipschitz = float(mbar_override)
    else:
        raise ConfigError(f"unknown cost kind {kind!r}")
    return GlobalObjective(costs=costs), (float(mbar_override) if mbar_override is not None else None)


def scenario_from_dict(cfg: dict) -> Scenario:
    """Validate a config dict and resolve it into a runnable scenario.

    Gates checked here, each rejected with the violated hypothesis named:
    schema version, gain positivity and theta < alpha*gamma, graph
    connectivity, event mode needing a global gradient-Lipschitz modulus
    per agent, balanced integral states for the primary algorithms, and
    trigger-parameter ranges.
    """
    version = cfg.get("schema_version")
    _require(version == SCHEMA_VERSION, f"schema_version {version!r} does not match supported {SCHEMA_VERSION}")

    gspec = cfg.get("graph", {})
    g = build_graph(gspec.get("edges", []), n=gspec.get("n"))
    if not is_connected(g):
        comps = connected_components(g)
        raise ConfigError(
            "connectivity hypothesis violated: graph is disconnected; components "
            + ", ".join("{" + ",".join(str(v + 1) for v in c) + "}" for c in comps)
        )

    obj, mbar_override = _build_costs(cfg.get("costs", {}))
    _require(obj.n == g.n, f"{obj.n} costs declared for a graph of {g.n} agents")

    gains = GainParams(**{k: float(v) for k, v in cfg.get("gains", {}).items()})

    algorithm = cfg.get("algorithm", "continuous")
    _require(algorithm in ALGORITHMS, f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")

    integ = cfg.get("integration", {})
    step = float(integ.get("step", 0.01))
    horizon = float(integ.get("horizon", 50.0))
    _require(step > 0, "integration step must be positive")
    _require(horizon >= step, "horizon must cover at least one step")

    init_cfg = cfg.get("initial", {})
    initial = InitialSpec()
    if "x" in init_cfg or "y" in init_cfg:
        _require("x" in init_cfg and "y" in init_cfg, "literal initial state needs both x and y")
        initial.x = np.asarray(init_cfg["x"], dtype=float)
        initial.y = np.asarray(init_cfg["y"], dtype=float)
        if "v" in init_cfg:
            initial.v = np.asarray(init_cfg["v"], dtype=float)
    else:
        box = init_cfg.get("box")
        _require(box is not None and len(box) == 2, "initial needs literals x/y or a box [lo, hi]")
        initial.box = (float(box[0]), float(box[1]))
        initial.seed = int(init_cfg.get("seed", presets.DEFAULT_SEED))

    if initial.v is not None and algorithm in ("continuous", "event"):
        drift = np.abs(initial.v.sum(axis=0)).max()
        _require(
            drift <= 1e-12,
            "balanced-start hypothesis violated: sum_i v_i(0) must be zero for the "
            f"{algorithm} algorithm (componentwise max |sum| = {drift:.3e}); only the "
            "alternative algorithm tolerates arbitrary v(0)",
        )

    diag_cfg = cfg.get("diagnostics", {})
    diagnostics = Diagnostics(
        lyapunov=bool(diag_cfg.get("lyapunov", False)),
        constants=bool(diag_cfg.get("constants", False)),
        rate_fit=bool(diag_cfg.get("rate_fit", False)),
    )

    trig_cfg = cfg.get("trigger", {})
    trigger = None
    eps0 = trig_cfg.get("eps0", cfg.get("eps0"))
    eps = float(trig_cfg.get("eps", cfg.get("eps", 0.1)))
    denom = trig_cfg.get("threshold_denominator", "varphi")
    if algorithm == "event":
        missing = [i + 1 for i, c in enumerate(obj.costs) if c.global_lipschitz is None]
        _require(
            not missing,
            "global gradient-Lipschitz hypothesis violated: event mode requires a "
            f"global modulus for every agent, missing for agent(s) {missing}; quartic "
            "costs need an explicit lipschitz_override",
        )
        if trig_cfg.get("preset") == "local-only":
            trigger = TriggerParams.local_only(g.n)
        elif any(k in trig_cfg for k in ("sigma", "delta", "phi_rate", "kappa", "chi0")):
            base = TriggerParams.defaults(g.n)
            fields = {}
            for name in ("sigma", "delta", "phi_rate", "kappa", "chi0"):
                val = trig_cfg.get(name, getattr(base, name))
                fields[name] = np.broadcast_to(np.atleast_1d(np.asarray(val, dtype=float)), (g.n,)).copy()
            trigger = TriggerParams(**fields)
        else:
            trigger = TriggerParams.defaults(g.n)

    return Scenario(
        name=str(cfg.get("name", "scenario")),
        graph=g,
        obj=obj,
        gains=gains,
        algorithm=algorithm,
        step=step,
        horizon=horizon,
        initial=initial,
        diagnostics=diagnostics,
        trigger=trigger,
        eps0=float(eps0) if eps0 is not None else None,
        eps=eps,
        threshold_denominator=str(denom),
        mbar_override=mbar_override,
        config=cfg,
    )


def load_scenario(path) -> Scenario:
    """Load and validate a scenario config file (JSON)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(cfg)


def load_preset(name: str) -> Scenario:
    return scenario_from_dict(presets.preset_config(name))


def make_initial(scenario: Scenario, seed: int | None = None) -> tuple[SwarmState, int | None]:
    """Materialize the initial state; returns (state, seed actually used)."""
    n, p = scenario.graph.n, scenario.obj.p
    init = scenario.initial
    if init.x is not None:
        x = init.x.reshape(n, p)
        y = init.y.reshape(n, p)
        v = init.v.reshape(n, p) if init.v is not None else np.zeros((n, p))
        return SwarmState(0.0, x, y, v), None
    used = seed if seed is not None else init.seed
    rng = np.random.default_rng(used)
    lo, hi = init.box
    x = rng.uniform(lo, hi, (n, p))
    y = rng.uniform(lo, hi, (n, p))
    return SwarmState(0.0, x, y, np.zeros((n, p))), used


@dataclass
class RunReport:
    name: str
    algorithm: str
    seed: int | None
    terminal_error: float | None
    terminal_error_to_solution_set: float | None
    consensus_residual: float
    gradient_sum_residual: float
    equilibrium_residuals: tuple[float, float, float]
    fitted_rate: float | None
    rate_bound: float | None
    checks: dict[str, bool]
    trigger_summary: dict | None
    constants: analysis.CertificateConstants | None
    runtime_s: float
    files: dict[str, str] = field(default_factory=dict)
    trajectory: Trajectory | None = None
    event_run: object | None = None
    minimizer: MinimizerResult | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def _solution_distance(x_agents: np.ndarray, mini: MinimizerResult) -> tuple[float, float]:
    """(max_i distance to x*, max_i distance to the whole solution set)."""
    d = x_agents - mini.x[None, :]
    to_point = float(np.linalg.norm(d, axis=1).max())
    if mini.unique or mini.null_basis is None:
        return to_point, to_point
    B = mini.null_basis
    d_set = d - (d @ B) @ B.T
    return to_point, float(np.linalg.norm(d_set, axis=1).max())


def _estimate_mf_for(scenario: Scenario, xstar: np.ndarray):
    """Exact for all-quadratic objectives, sampled otherwise."""
    if scenario.obj.all_quadratic():
        return estimate_mf(scenario.obj, xstar)
    rng = np.random.default_rng(0)
    samples = rng.uniform(-10.0, 10.0, (200, scenario.obj.p))
    return estimate_mf(scenario.obj, xstar, samples)


def _prepare_certificates(scenario: Scenario, state0: SwarmState):
    """Minimizer, equilibrium, Lyapunov context, and constants, as far as
    the scenario's data allows."""
    g, obj, gains = scenario.graph, scenario.obj, scenario.gains
    sd = spectral(g)
    mini = minimizer_oracle(obj)
    mf_est = _estimate_mf_for(scenario, mini.x)
    obj.restricted_convexity = mf_est.value if mf_est.satisfied else None
    eps0 = scenario.eps0 if scenario.eps0 is not None else default_eps0(gains)
    eq = analysis.equilibrium_point(obj, gains, mini.x)
    ctx = None
    consts = None
    phis = None
    if g.n > 1:
        ctx = analysis.LyapunovContext(g=g, sd=sd, obj=obj, gains=gains, eps0=eps0, eps=scenario.eps, eq=eq)
        if mf_est.satisfied:
            V1_0 = ctx.v1(state0)
            consts = analysis.certificate_continuous(
                g, sd, obj, gains, eps0, scenario.eps, V1_0, mini.x, mf_est.value, mf_est.exact
            )
            if scenario.algorithm == "event":
                consts = analysis.certificate_event(
                    g,
                    sd,
                    obj,
                    gains,
                    eps0,
                    scenario.eps,
                    scenario.trigger,
                    mf_est.value,
                    mf_est.exact,
                    Mbar_override=scenario.mbar_override,
                    base=consts,
                )
                phis = varphi_all(g, gains, eps0, consts.eps8)
            ctx.consts = consts
            ctx.varphi = phis
    return sd, mini, mf_est, eps0, eq, ctx, consts, phis


def certificate_constants(scenario: Scenario, seed: int | None = None) -> analysis.CertificateConstants | None:
    """Compute the certificate constants a scenario admits, without running it.

    Returns None when the scenario lacks the data (single agent, or no
    positive restricted strong convexity modulus).
    """
    state0, _ = make_initial(scenario, seed)
    *_, consts, _phis = _prepare_certificates(scenario, state0)
    return consts


def run(scenario: Scenario, out_dir=None, seed: int | None = None) -> RunReport:
    """Integrate a validated scenario and emit its reports.

    Returns a RunReport whose ``checks`` dict holds the runtime invariant
    results (balanced integral states; in event mode also the trigger
    discipline, chi positivity, and the chi decay floor).  Files are
    written under ``out_dir`` when given.
    """
    state0, used_seed = make_initial(scenario, seed)
    t_start = time.perf_counter()
    sd, mini, mf_est, eps0, eq, ctx, consts, phis = _prepare_certificates(scenario, state0)
    g, obj, gains = scenario.graph, scenario.obj, scenario.gains

    event_run = None
    if scenario.algorithm == "event":
        law = make_trigger_law(
            g,
            gains,
            scenario.trigger,
            eps0=eps0,
            eps8=consts.eps8 if consts is not None else None,
            denominator=scenario.threshold_denominator,
        )
        observers = ()
        if scenario.diagnostics.lyapunov and ctx is not None:
            observers = (lambda s, ts: ctx.sample(s, ts.chi),)
        event_run = simulate_event(state0, g, obj, gains, law, scenario.step, scenario.horizon, observers)
        traj = event_run.trajectory
    else:
        rhs_fn = rhs_continuous if scenario.algorithm == "continuous" else rhs_alternative
        rhs = lambda s: rhs_fn(s, g, obj, gains)
        observers = ()
        if scenario.diagnostics.lyapunov and ctx is not None:
            observers = (lambda s: ctx.sample(s),)
        traj = integrate(rhs, state0, scenario.step, scenario.horizon, observers)
    runtime = time.perf_counter() - t_start

    checks: dict[str, bool] = {}
    if scenario.algorithm == "alternative":
        drift = np.abs(traj.v.sum(axis=1) - traj.v[0].sum(axis=0)[None, :])
        checks["v_balance"] = bool((drift / (1.0 + traj.t)[:, None]).max() <= V_BALANCE_TOL)
    else:
        checks["v_balance"] = bool(v_balance_violation(traj) <= V_BALANCE_TOL)
    trigger_summary = None
    if event_run is not None:
        trigger_summary = zeno_report(event_run.trigger_state, scenario.horizon, scenario.step)
        checks["trigger_discipline"] = bool(event_run.discipline_margin <= DISCIPLINE_TOL)
        checks["chi_positive"] = bool(event_run.chi.min() > 0.0)
        checks["chi_floor"] = bool(event_run.chi_floor_margin >= -CHI_FLOOR_TOL)

    final = traj.final_state()
    terminal_error = terminal_error_set = None
    if mini is not None:
        terminal_error, terminal_error_set = _solution_distance(final.x, mini)
    kn = np.eye(g.n) - np.ones((g.n, g.n)) / g.n
    consensus_residual = float(np.linalg.norm(kn @ final.x))
    avg = final.x.mean(axis=0)
    gradient_sum_residual = float(np.linalg.norm(obj.sum_grad(avg)))
    eq_res = equilibrium_residual(final, g, obj, gains)

    fitted = None
    rate_bound = None
    if consts is not None:
        rate_bound = consts.rate_bound_event if scenario.algorithm == "event" else consts.rate_bound_continuous
    if scenario.diagnostics.rate_fit and mini is not None and mini.unique:
        try:
            fitted = analysis.fit_rate(traj, mini.x).rate
        except ValueError:
            fitted = None

    report = RunReport(
        name=scenario.name,
        algorithm=scenario.algorithm,
        seed=used_seed,
        terminal_error=terminal_error,
        terminal_error_to_solution_set=terminal_error_set,
        consensus_residual=consensus_residual,
        gradient_sum_residual=gradient_sum_residual,
        equilibrium_residuals=(eq_res.r_y, eq_res.r_grad, eq_res.r_consensus),
        fitted_rate=fitted,
        rate_bound=rate_bound,
        checks=checks,
        trigger_summary=trigger_summary,
        constants=consts,
        runtime_s=runtime,
        trajectory=traj,
        event_run=event_run,
        minimizer=mini,
    )
    if out_dir is not None:
        _emit(scenario, report, Path(out_dir))
    return report


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_trajectory_csv(path: Path, traj: Trajectory, chi: np.ndarray | None, seed: int | None):
    n, p = traj.x.shape[1], traj.x.shape[2]
    cols = ["t"]
    cols += [f"x_{i+1}_{k+1}" for i in range(n) for k in range(p)]
    cols += [f"y_{i+1}_{k+1}" for i in range(n) for k in range(p)]
    cols += [f"v_{i+1}_{k+1}" for i in range(n) for k in range(p)]
    if chi is not None:
        cols += [f"chi_{i+1}" for i in range(n)]
    extra_names = sorted(traj.extras)
    cols += extra_names
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if seed is not None:
            fh.write(f"# seed={seed}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for k in range(traj.samples):
            row = [_fmt(traj.t[k])]
            row += [_fmt(val) for val in traj.x[k].ravel()]
            row += [_fmt(val) for val in traj.y[k].ravel()]
            row += [_fmt(val) for val in traj.v[k].ravel()]
            if chi is not None:
                row += [_fmt(val) for val in chi[k]]
            row += [_fmt(traj.extras[name][k]) for name in extra_names]
            w.writerow(row)


def _write_events_csv(path: Path, event_run):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["agent", "k", "t", "chi_at_trigger", "error_norm_sq", "qhat"])
        for ev in event_run.trigger_state.events:
            w.writerow([ev.agent + 1, ev.index, _fmt(ev.t), _fmt(ev.chi), _fmt(ev.error_sq), _fmt(ev.qhat)])


def _emit(scenario: Scenario, report: RunReport, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    base = scenario.name
    chi = report.event_run.chi if report.event_run is not None else None

    traj_path = out_dir / f"{base}_trajectory.csv"
    _write_trajectory_csv(traj_path, report.trajectory, chi, report.seed)
    report.files["trajectory"] = str(traj_path)

    if report.constants is not None:
        const_path = out_dir / f"{base}_constants.json"
        const_path.write_text(json.dumps(report.constants.to_report(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        report.files["constants"] = str(const_path)

    if report.event_run is not None:
        ev_path = out_dir / f"{base}_events.csv"
        _write_events_csv(ev_path, report.event_run)
        report.files["events"] = str(ev_path)

    summary = {
        "name": report.name,
        "algorithm": report.algorithm,
        "seed": report.seed,
        "terminal_error": report.terminal_error,
        "terminal_error_to_solution_set": report.terminal_error_to_solution_set,
        "consensus_residual": report.consensus_residual,
        "gradient_sum_residual": report.gradient_sum_residual,
        "equilibrium_residuals": {
            "r_y": report.equilibrium_residuals[0],
            "r_grad": report.equilibrium_residuals[1],
            "r_consensus": report.equilibrium_residuals[2],
        },
        "fitted_rate": report.fitted_rate,
        "rate_bound": report.rate_bound,
        "checks": report.checks,
        "trigger_summary": report.trigger_summary,
        "runtime_s": report.runtime_s,
        "files": report.files,
    }
    summary_path = out_dir / f"{base}_summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    report.files["summary"] = str(summary_path)


def error_curve(report: RunReport) -> np.ndarray:
    """max_i distance of agent positions to the minimizer set, per sample."""
    traj, mini = report.trajectory, report.minimizer
    d = traj.x - mini.x[None, None, :]
    if not mini.unique and mini.null_basis is not None:
        B = mini.null_basis
        d = d - np.einsum("mnk,kj->mnj", d @ B, B.T)
    return np.linalg.norm(d, axis=2).max(axis=1)


def compare(scenarios: list[Scenario], out_path, seed: int | None = None) -> Path:
    """Run scenarios sharing (step, horizon) and merge their error curves
    into one CSV: a time column plus one error column per scenario."""
    if not scenarios:
        raise ConfigError("compare needs at least one scenario")
    steps = {s.step for s in scenarios}
    horizons = {s.horizon for s in scenarios}
    if len(steps) > 1 or len(horizons) > 1:
        raise ConfigError(
            f"compare requires a shared step and horizon; got steps {sorted(steps)}, horizons {sorted(horizons)}"
        )
    curves = []
    names = []
    t_axis = None
    for sc in scenarios:
        rep = run(sc, out_dir=None, seed=seed)
        curves.append(error_curve(rep))
        base = sc.name + ("" if sc.name not in names else f"_{len(names)}")
        names.append(base)
        t_axis = rep.trajectory.t
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"error_{name}" for name in names])
        for k in range(t_axis.shape[0]):
            w.writerow([_fmt(t_axis[k])] + [_fmt(c[k]) for c in curves])
    return out_path


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "out"))
