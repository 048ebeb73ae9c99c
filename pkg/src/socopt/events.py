"""Dynamic event-triggered communication.

Agents broadcast their position only when a per-agent rule fires; between
events neighbors integrate against the cached broadcast xhat_j.  Agent i
fires at the first sample where

    kappa_i * (||e_i||^2 - c_i * qhat_i) >= chi_i,

with e_i = xhat_i - x_i the staleness error, qhat_i the cached local
disagreement, c_i = (alpha*gamma*eps0 - theta)*beta*sigma_i / (4*phi_i)
for a per-agent threshold constant phi_i, and chi_i a positive internal
variable with its own dynamics

    dchi_i = -delta_i * (||e_i||^2 - c_i * qhat_i) - rate_i * chi_i.

The symbol used as threshold denominator is configurable: "varphi" uses
the derived per-agent threshold constant (the default); "rate" reuses the
chi decay rate.  The "local-only" preset sigma = delta = 0 needs neither
and no network-wide quantities at all.

Triggers are monitored at integration sample boundaries only, matching a
sampled implementation; the chi variables ride in the same 4th-order
stepper with the staleness error and disagreement frozen at their
start-of-step values (the error is discontinuous at triggers, so freezing
keeps the stages consistent).
"""

from dataclasses import dataclass, field

import numpy as np

from .costs import GlobalObjective
from .dynamics import (
    DIVERGENCE_LIMIT,
    AgentDerivatives,
    DivergenceError,
    GainParams,
    SwarmState,
    Trajectory,
)
from .graph import NetworkGraph


class TriggerConfigError(ValueError):
    """Trigger parameters outside their admissible ranges."""


@dataclass
class TriggerParams:
    """Per-agent design parameters of the triggering law.

    Admissible ranges: sigma in [0,1), rate > 0, delta in [0,1],
    kappa > (1-delta)/rate, chi0 > 0.  ``k_d`` = min_i(rate_i -
    (1-delta_i)/kappa_i) must come out positive.
    """

    sigma: np.ndarray
    delta: np.ndarray
    phi_rate: np.ndarray
    kappa: np.ndarray
    chi0: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("sigma", "delta", "phi_rate", "kappa", "chi0"):
            arrays[name] = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
        n = max(a.shape[0] for a in arrays.values())
        for name, a in arrays.items():
            if a.shape[0] == 1 and n > 1:
                a = np.full(n, a[0])
            if a.shape[0] != n:
                raise TriggerConfigError(f"{name} has length {a.shape[0]}, expected {n}")
            setattr(self, name, a)
        if np.any(self.sigma < 0) or np.any(self.sigma >= 1):
            raise TriggerConfigError("sigma must lie in [0, 1)")
        if np.any(self.phi_rate <= 0):
            raise TriggerConfigError("chi decay rate must be positive")
        if np.any(self.delta < 0) or np.any(self.delta > 1):
            raise TriggerConfigError("delta must lie in [0, 1]")
        if np.any(self.chi0 <= 0):
            raise TriggerConfigError("chi(0) must be positive")
        lo = (1.0 - self.delta) / self.phi_rate
        if np.any(self.kappa <= lo):
            raise TriggerConfigError(
                f"kappa must exceed (1-delta)/rate per agent; got kappa={self.kappa.tolist()}, "
                f"floor={lo.tolist()}"
            )

    @property
    def n(self) -> int:
        return self.sigma.shape[0]

    @property
    def k_d(self) -> float:
        return float(np.min(self.phi_rate - (1.0 - self.delta) / self.kappa))

    @classmethod
    def defaults(cls, n: int) -> "TriggerParams":
        """Mid-range parameters, strictly interior to every admissible range."""
        delta = np.full(n, 0.5)
        rate = np.full(n, 1.0)
        return cls(
            sigma=np.full(n, 0.5),
            delta=delta,
            phi_rate=rate,
            kappa=2.0 * (1.0 - delta) / rate + 1.0,
            chi0=np.full(n, 1.0),
        )

    @classmethod
    def local_only(cls, n: int, phi_rate: float = 1.0, kappa: float | None = None, chi0: float = 1.0) -> "TriggerParams":
        """sigma = delta = 0: the law needs no derived threshold constant
        and no network-wide quantities."""
        rate = np.full(n, float(phi_rate))
        if kappa is None:
            kappa_arr = 2.0 / rate + 1.0
        else:
            kappa_arr = np.full(n, float(kappa))
        return cls(sigma=np.zeros(n), delta=np.zeros(n), phi_rate=rate, kappa=kappa_arr, chi0=np.full(n, float(chi0)))


def default_eps0(gains: GainParams) -> float:
    """Midpoint of the admissible interval (theta/(alpha*gamma), 1)."""
    return 0.5 * (gains.theta / (gains.alpha * gains.gamma) + 1.0)


def varphi(i: int, g: NetworkGraph, gains: GainParams, eps0: float, eps8: float) -> float:
    """Per-agent threshold constant of the triggering law.

    varphi_i = (alpha*gamma*eps0 - theta)*beta/4 * L_ii
             + (alpha*gamma*eps0 - theta)*beta * L_ii
             + gamma^2*theta*eps0^2 / (4*eps8)
             + alpha^2*beta^2/(gamma*(1-eps0)) * (L_ii - sum_{j!=i} L_jj L_ij)
    """
    _validate_eps0(gains, eps0)
    if eps8 <= 0:
        raise TriggerConfigError(f"eps8 must be positive, got {eps8}")
    L = g.laplacian
    lii = float(L[i, i])
    cross = float(sum(L[j, j] * L[i, j] for j in range(g.n) if j != i))
    a, b, gm, th = gains.alpha, gains.beta, gains.gamma, gains.theta
    lead = (a * gm * eps0 - th) * b
    return (
        lead / 4.0 * lii
        + lead * lii
        + gm**2 * th * eps0**2 / (4.0 * eps8)
        + a**2 * b**2 / (gm * (1.0 - eps0)) * (lii - cross)
    )


def varphi_all(g: NetworkGraph, gains: GainParams, eps0: float, eps8: float) -> np.ndarray:
    return np.array([varphi(i, g, gains, eps0, eps8) for i in range(g.n)])


def _validate_eps0(gains: GainParams, eps0: float):
    lo = gains.theta / (gains.alpha * gains.gamma)
    if not (lo < eps0 < 1.0):
        raise TriggerConfigError(
            f"eps0 must lie in (theta/(alpha*gamma), 1) = ({lo:.6g}, 1); got {eps0}"
        )


@dataclass
class TriggerLaw:
    """Bound trigger parameters plus the precomputed threshold coefficients
    c_i = (alpha*gamma*eps0 - theta)*beta*sigma_i / (4*denom_i)."""

    params: TriggerParams
    eps0: float
    c: np.ndarray
    denominator: str
    varphi: np.ndarray | None = None


def make_trigger_law(
    g: NetworkGraph,
    gains: GainParams,
    params: TriggerParams,
    eps0: float | None = None,
    eps8: float | None = None,
    denominator: str = "varphi",
) -> TriggerLaw:
    """Resolve the threshold coefficients for a concrete graph and gains.

    ``eps8`` is only needed when sigma is nonzero somewhere and the
    denominator is "varphi" (it feeds the threshold constant).
    """
    if eps0 is None:
        eps0 = default_eps0(gains)
    _validate_eps0(gains, eps0)
    if params.n != g.n:
        raise TriggerConfigError(f"trigger parameters sized {params.n} for a graph of {g.n} agents")
    if denominator not in ("varphi", "rate"):
        raise TriggerConfigError(f"unknown threshold denominator {denominator!r}")
    lead = (gains.alpha * gains.gamma * eps0 - gains.theta) * gains.beta
    phis = None
    if np.all(params.sigma == 0.0):
        c = np.zeros(g.n)
    elif denominator == "rate":
        c = lead * params.sigma / (4.0 * params.phi_rate)
    else:
        if eps8 is None:
            raise TriggerConfigError("eps8 is required to derive the threshold constants")
        phis = varphi_all(g, gains, eps0, eps8)
        c = lead * params.sigma / (4.0 * phis)
    return TriggerLaw(params=params, eps0=eps0, c=c, denominator=denominator, varphi=phis)


@dataclass
class EventRecord:
    agent: int
    index: int  # per-agent event counter, starting at 1 for the t=0 broadcast
    t: float
    chi: float
    error_sq: float
    qhat: float


@dataclass
class TriggerState:
    """Broadcast caches and internal variables of one event-mode run."""

    xhat: np.ndarray  # (n, p) last-broadcast positions
    chi: np.ndarray  # (n,) internal variables
    last_event: np.ndarray  # (n,) timestamps
    counts: np.ndarray  # (n,) events so far
    events: list[EventRecord] = field(default_factory=list)

    @classmethod
    def initialize(cls, x0: np.ndarray, params: TriggerParams) -> "TriggerState":
        """Every agent broadcasts at t = 0 (the mandated first event)."""
        n = x0.shape[0]
        ts = cls(
            xhat=np.asarray(x0, dtype=float).copy(),
            chi=params.chi0.copy(),
            last_event=np.zeros(n),
            counts=np.ones(n, dtype=int),
        )
        for i in range(n):
            ts.events.append(EventRecord(agent=i, index=1, t=0.0, chi=float(ts.chi[i]), error_sq=0.0, qhat=0.0))
        return ts

    def error(self, x: np.ndarray) -> np.ndarray:
        """Staleness error e = xhat - x, shape (n, p)."""
        return self.xhat - x


def qhat(i: int, ts: TriggerState, g: NetworkGraph) -> float:
    """Cached local disagreement -1/2 sum_{j in N_i} L_ij ||xhat_j - xhat_i||^2.

    Off-diagonal Laplacian entries are nonpositive, so the value is
    nonnegative.  Reads only the caches of agent i and its neighbors.
    """
    xi = ts.xhat[i]
    q = 0.0
    for j in g.neighbors(i):
        d = ts.xhat[j] - xi
        q += -0.5 * float(g.laplacian[i, j]) * float(d @ d)
    return q


def trigger_margin(i: int, ts: TriggerState, g: NetworkGraph, law: TriggerLaw, x: np.ndarray) -> float:
    """kappa_i*(||e_i||^2 - c_i*qhat_i) - chi_i; the rule fires at >= 0."""
    e = ts.xhat[i] - x[i]
    lhs = float(law.params.kappa[i]) * (float(e @ e) - float(law.c[i]) * qhat(i, ts, g))
    return lhs - float(ts.chi[i])


def check_trigger(i: int, ts: TriggerState, g: NetworkGraph, law: TriggerLaw, x: np.ndarray, t: float) -> bool:
    """Evaluate the rule for agent i; on firing, broadcast and log.

    A broadcast copies the agent's current position into its cache,
    resetting the staleness error to zero.
    """
    e = ts.xhat[i] - x[i]
    err_sq = float(e @ e)
    qh = qhat(i, ts, g)
    fired = float(law.params.kappa[i]) * (err_sq - float(law.c[i]) * qh) >= float(ts.chi[i])
    if fired:
        ts.xhat[i] = x[i]
        ts.counts[i] += 1
        ts.last_event[i] = t
        ts.events.append(
            EventRecord(agent=i, index=int(ts.counts[i]), t=t, chi=float(ts.chi[i]), error_sq=err_sq, qhat=qh)
        )
    return fired


def chi_rhs(i: int, ts: TriggerState, g: NetworkGraph, law: TriggerLaw, x: np.ndarray) -> float:
    """dchi_i = -delta_i*(||e_i||^2 - c_i*qhat_i) - rate_i*chi_i."""
    e = ts.xhat[i] - x[i]
    bracket = float(e @ e) - float(law.c[i]) * qhat(i, ts, g)
    return -float(law.params.delta[i]) * bracket - float(law.params.phi_rate[i]) * float(ts.chi[i])


def rhs_event(
    state: SwarmState, ts: TriggerState, g: NetworkGraph, obj: GlobalObjective, gains: GainParams
) -> AgentDerivatives:
    """Continuous dynamics with the Laplacian terms fed by the caches."""
    grads = obj.grad_stack(state.x)
    if not np.all(np.isfinite(grads)):
        bad = sorted(set(np.nonzero(~np.isfinite(grads))[0].tolist()))
        raise ValueError(f"non-finite gradient for agent(s) {bad}")
    Lxhat = g.laplacian @ ts.xhat
    dy = -gains.gamma * state.y - gains.alpha * gains.beta * Lxhat - gains.theta * state.v - gains.alpha * grads
    return AgentDerivatives(dx=state.y, dy=dy, dv=gains.beta * Lxhat)


@dataclass
class EventRun:
    """Trajectory of an event-mode run plus everything the checks need."""

    trajectory: Trajectory
    trigger_state: TriggerState
    chi: np.ndarray  # (m, n) chi at each sample
    discipline_margin: float  # max over samples of kappa*(e^2 - c*qhat) - chi
    chi_floor_margin: float  # min over samples of chi - chi0*exp(-(rate+delta/kappa)*t)
    law: TriggerLaw


def _process_triggers(ts: TriggerState, g: NetworkGraph, law: TriggerLaw, x: np.ndarray, t: float) -> None:
    """Fire every agent whose rule holds at this sample.

    Decisions within a sweep are simultaneous against the current caches;
    because a broadcast changes the neighbors' disagreement, sweeps repeat
    until no rule holds.  An agent fires at most once per sample (after a
    broadcast its error is zero and the rule cannot hold again).
    """
    pending = True
    fired: set[int] = set()
    while pending:
        pending = False
        decisions = [i for i in range(g.n) if i not in fired and trigger_margin(i, ts, g, law, x) >= 0.0]
        for i in decisions:
            check_trigger(i, ts, g, law, x, t)
            fired.add(i)
            pending = True


def simulate_event(
    initial: SwarmState,
    g: NetworkGraph,
    obj: GlobalObjective,
    gains: GainParams,
    law: TriggerLaw,
    step: float,
    horizon: float,
    observers=(),
) -> EventRun:
    """Run the event-triggered algorithm with sample-boundary triggering.

    Every sample: integrate one step with caches fixed and the chi inputs
    frozen at their start-of-step values, then process triggers, then log.
    Processing triggers before logging keeps the rule inequality satisfied
    at every recorded sample.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    n_steps = int(round(horizon / step))
    state = initial.copy()
    ts = TriggerState.initialize(state.x, law.params)

    m = n_steps + 1
    t_arr = np.empty(m)
    xs = np.empty((m, state.n, state.p))
    ys = np.empty_like(xs)
    vs = np.empty_like(xs)
    chis = np.empty((m, state.n))
    extras: dict[str, list[float]] = {}

    decay = law.params.phi_rate + law.params.delta / law.params.kappa
    discipline = -np.inf
    floor_margin = np.inf

    def commit(k: int, s: SwarmState):
        nonlocal discipline, floor_margin
        t_arr[k] = s.t
        xs[k], ys[k], vs[k] = s.x, s.y, s.v
        chis[k] = ts.chi
        margins = [trigger_margin(i, ts, g, law, s.x) for i in range(g.n)]
        discipline = max(discipline, max(margins))
        floor = law.params.chi0 * np.exp(-decay * s.t)
        floor_margin = min(floor_margin, float(np.min(ts.chi - floor)))
        for obs in observers:
            cols = obs(s, ts)
            if cols:
                for name, val in cols.items():
                    extras.setdefault(name, []).append(float(val))

    commit(0, state)
    for k in range(n_steps):
        # inputs to the chi dynamics, frozen across the step
        err_sq = np.einsum("ij,ij->i", ts.xhat - state.x, ts.xhat - state.x)
        qh = np.array([qhat(i, ts, g) for i in range(g.n)])
        bracket = err_sq - law.c * qh

        def chi_dot(chi):
            return -law.params.delta * bracket - law.params.phi_rate * chi

        def swarm_dot(s: SwarmState) -> AgentDerivatives:
            return rhs_event(s, ts, g, obj, gains)

        h = step
        s0 = state
        k1 = swarm_dot(s0)
        c1 = chi_dot(ts.chi)
        s1 = SwarmState(s0.t + h / 2, s0.x + h / 2 * k1.dx, s0.y + h / 2 * k1.dy, s0.v + h / 2 * k1.dv)
        k2 = swarm_dot(s1)
        c2 = chi_dot(ts.chi + h / 2 * c1)
        s2 = SwarmState(s0.t + h / 2, s0.x + h / 2 * k2.dx, s0.y + h / 2 * k2.dy, s0.v + h / 2 * k2.dv)
        k3 = swarm_dot(s2)
        c3 = chi_dot(ts.chi + h / 2 * c2)
        s3 = SwarmState(s0.t + h, s0.x + h * k3.dx, s0.y + h * k3.dy, s0.v + h * k3.dv)
        k4 = swarm_dot(s3)
        c4 = chi_dot(ts.chi + h * c3)
        w = h / 6.0
        state = SwarmState(
            (k + 1) * step,
            s0.x + w * (k1.dx + 2 * k2.dx + 2 * k3.dx + k4.dx),
            s0.y + w * (k1.dy + 2 * k2.dy + 2 * k3.dy + k4.dy),
            s0.v + w * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv),
        )
        ts.chi = ts.chi + w * (c1 + 2 * c2 + 2 * c3 + c4)
        if not np.all(np.isfinite(state.x)) or state.norm() > DIVERGENCE_LIMIT:
            raise DivergenceError(state.t, s0)

        _process_triggers(ts, g, law, state.x, state.t)
        commit(k + 1, state)

    traj = Trajectory(t=t_arr, x=xs, y=ys, v=vs, extras={k2: np.asarray(v2) for k2, v2 in extras.items()})
    return EventRun(
        trajectory=traj,
        trigger_state=ts,
        chi=chis,
        discipline_margin=float(discipline),
        chi_floor_margin=float(floor_margin),
        law=law,
    )


def zeno_report(ts: TriggerState, horizon: float, step: float) -> dict:
    """Per-agent event statistics and the overall communication saving.

    ``min_gap`` for an agent with a single event is reported as the
    horizon.  ``saturated`` flags any agent that triggered at every
    sample, i.e. communicated continuously.
    """
    n = ts.counts.shape[0]
    samples_per_agent = int(round(horizon / step))
    per_agent = []
    for i in range(n):
        times = [ev.t for ev in ts.events if ev.agent == i]
        gaps = np.diff(times)
        per_agent.append(
            {
                "agent": i,
                "count": int(ts.counts[i]),
                "min_gap": float(gaps.min()) if gaps.size else float(horizon),
                "mean_gap": float(gaps.mean()) if gaps.size else float(horizon),
                "saturated": int(ts.counts[i]) >= samples_per_agent + 1,
            }
        )
    total = int(ts.counts.sum())
    total_samples = n * samples_per_agent
    return {
        "per_agent": per_agent,
        "total_triggers": total,
        "total_samples": total_samples,
        "trigger_ratio": total / total_samples,
        "reduction_ratio": 1.0 - total / total_samples,
    }
