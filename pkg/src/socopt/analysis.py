"""Convergence-rate certificates and Lyapunov diagnostics.

Every derived constant guaranteeing exponential convergence is computed
here, for the continuous-communication algorithm (eps1..eps4, m1, the
invariant ball D and its curvature bound M(D)) and for the
event-triggered one (m2, eps5..eps10, k_d).  The constants feed three
families of runtime diagnostics: the Lyapunov values W1..W4 / V1..V3
logged along trajectories, exponential decay envelopes, and an empirical
rate fit compared against the certified bound eps3/(2*eps4) or
eps9/(2*eps10).
"""

from dataclasses import dataclass, field

import numpy as np

from .costs import GlobalObjective, curvature_on_set
from .dynamics import GainParams, SwarmState, Trajectory
from .events import TriggerParams
from .graph import NetworkGraph, SpectralData


class ConstantsError(ValueError):
    """Inputs outside the admissible ranges of the certificate formulas."""


def _validate_design(gains: GainParams, eps0: float, eps: float):
    lo = gains.theta / (gains.alpha * gains.gamma)
    if not (lo < eps0 < 1.0):
        raise ConstantsError(f"eps0 must lie in ({lo:.6g}, 1); got {eps0}")
    if eps <= 0:
        raise ConstantsError(f"eps must be positive, got {eps}")


@dataclass
class CertificateConstants:
    """Derived certificate constants, with the free design parameters that
    produced them.  Fields are None until the corresponding computation
    has run (the event-side constants need global curvature data)."""

    eps0: float
    eps: float
    mf: float
    mf_exact: bool = True

    # continuous-communication certificate
    m1: float | None = None
    M_D: float | None = None
    D_radius: float | None = None
    V1_at_0: float | None = None
    eps1: float | None = None
    eps2: float | None = None
    eps3: float | None = None
    eps4: float | None = None
    eps_tilde1: float | None = None
    iota1: float | None = None
    rate_bound_continuous: float | None = None

    # event-triggered certificate
    Mbar: float | None = None
    m2: float | None = None
    eps5: float | None = None
    eps6: float | None = None
    eps7: float | None = None
    eps8: float | None = None
    eps9: float | None = None
    eps10: float | None = None
    eps_tilde2: float | None = None
    iota2: float | None = None
    k_d: float | None = None
    rate_bound_event: float | None = None

    def to_report(self) -> dict:
        """One entry per symbol: value plus the formula it came from."""
        formulas = {
            "eps0": "free design parameter in (theta/(alpha*gamma), 1)",
            "eps": "free design parameter > 0",
            "mf": "restricted strong convexity modulus of the summed objective"
            + ("" if self.mf_exact else " (sampled lower estimate, not certified)"),
            "m1": "min(mf/2, rho2*mf^2*alpha*gamma*eps0 / (2*(alpha*gamma*eps0-theta)*(mf^2+16*M_D^2)))",
            "M_D": "max over agents of the gradient-Lipschitz bound on the ball D",
            "D_radius": "sqrt(2*V1(0) / (gamma^2*eps0*(1-sqrt(eps0)))); radius of the invariant ball D around x*",
            "V1_at_0": "V1 evaluated at the initial state",
            "eps1": "min(gamma*(1-eps0), alpha*gamma*eps0*m1)",
            "eps2": "max(gamma/alpha + gamma^2/theta + theta/alpha^2, alpha^2*M_D^2/theta)",
            "eps3": "min(eps1, eps*theta/2)",
            "eps4": "max(1 + eps*eps2/eps1 + eps/alpha, "
            "(1+eps*eps2/eps1)*(gamma^2*eps0 + alpha*beta*rho + alpha*M_D/2) + eps*M_D/2, "
            "(1+eps*eps2/eps1)*theta*gamma*eps0/(beta*rho2) + eps*alpha)",
            "eps_tilde1": "(1+eps*eps2/eps1)*gamma^2*eps0*(1-eps0)/2",
            "iota1": "mf/(4*M_D)",
            "rate_bound_continuous": "eps3/(2*eps4)",
            "Mbar": "max over agents of the global gradient-Lipschitz modulus",
            "m2": "min(mf/2, 4*rho2*mf^2*alpha / ((alpha*gamma*eps0-theta)*beta*(mf^2+16*Mbar^2)))",
            "eps5": "min(gamma*(1-eps0)/2, m2*alpha)",
            "eps6": "max(gamma/alpha + gamma^2/theta + theta/alpha^2, alpha^2*Mbar^2/theta)",
            "eps7": "1 + eps*eps6/eps5",
            "eps8": "eps/(4*eps7)",
            "eps9": "min(eps5, eps*theta/4, k_d)",
            "eps10": "max(eps7 + eps/alpha, "
            "eps7*(gamma^2*eps0 + alpha*beta*rho + alpha*Mbar/2) + eps*Mbar/2, "
            "eps7*theta*gamma*eps0/(beta*rho2) + eps*alpha/rho2)",
            "eps_tilde2": "eps7*gamma^2*eps0*(1-eps0)/2",
            "iota2": "mf/(4*Mbar)",
            "k_d": "min over agents of (rate - (1-delta)/kappa)",
            "rate_bound_event": "eps9/(2*eps10)",
        }
        out = {}
        for name, formula in formulas.items():
            val = getattr(self, name)
            if val is not None:
                out[name] = {"value": float(val), "formula": formula}
        return out


@dataclass(frozen=True)
class EquilibriumPoint:
    """The optimal consensus equilibrium: xbar = 1 kron x*, and the
    integral states vbar_i = -(alpha/theta) grad f_i(x*) that balance the
    per-agent gradients (they sum to zero because x* is optimal)."""

    xstar: np.ndarray  # (p,)
    xbar: np.ndarray  # (n, p)
    vbar: np.ndarray  # (n, p)


def equilibrium_point(obj: GlobalObjective, gains: GainParams, xstar: np.ndarray) -> EquilibriumPoint:
    xstar = np.asarray(xstar, dtype=float)
    xbar = np.tile(xstar, (obj.n, 1))
    vbar = np.stack([-(gains.alpha / gains.theta) * c.grad(xstar) for c in obj.costs])
    return EquilibriumPoint(xstar=xstar, xbar=xbar, vbar=vbar)


def w1_value(obj: GlobalObjective, x: np.ndarray, eq: EquilibriumPoint) -> float:
    """W1(x) = f(x) - grad f(xbar)^T x - f(xbar), stacked over agents.

    Convex with minimum value 0 at consensus on x*.
    """
    total = 0.0
    for i, c in enumerate(obj.costs):
        gi = c.grad(eq.xstar)
        total += c.f(x[i]) - float(gi @ x[i]) - (c.f(eq.xstar) - float(gi @ eq.xstar))
    return total


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum(a * b))


@dataclass
class LyapunovContext:
    """Everything needed to evaluate the Lyapunov family along a run."""

    g: NetworkGraph
    sd: SpectralData
    obj: GlobalObjective
    gains: GainParams
    eps0: float
    eps: float
    eq: EquilibriumPoint
    consts: CertificateConstants | None = None
    varphi: np.ndarray | None = None
    _pinv: np.ndarray = field(init=False)

    def __post_init__(self):
        _validate_design(self.gains, self.eps0, self.eps)
        self._pinv = self.sd.weighted_projector(-1.0)  # R diag(1/lambda) R^T

    def w2(self, state: SwarmState) -> float:
        gn = self.gains
        dx = state.x - self.eq.xbar
        dv = state.v - self.eq.vbar
        Lx = self.g.laplacian @ state.x
        return (
            0.5 * _dot(state.y, state.y)
            + 0.5 * gn.gamma**2 * self.eps0 * _dot(dx, dx)
            + gn.gamma * self.eps0 * _dot(dx, state.y)
            + gn.theta * gn.gamma * self.eps0 / (2.0 * gn.beta) * _dot(dv, self._pinv @ dv)
            + gn.theta * _dot(dv, self.sd.kn @ state.x)
            + 0.5 * gn.alpha * gn.beta * _dot(state.x, Lx)
        )

    def w3(self, state: SwarmState) -> float:
        gn = self.gains
        dv = state.v - self.eq.vbar
        kn_dv = self.sd.kn @ dv
        return (
            self.eps / (2.0 * gn.alpha) * _dot(state.y, state.y)
            + self.eps * _dot(dv, self.sd.kn @ state.y)
            + 0.5 * self.eps * gn.alpha * _dot(dv, kn_dv)
            + self.eps * w1_value(self.obj, state.x, self.eq)
        )

    def v1(self, state: SwarmState) -> float:
        return self.gains.alpha * w1_value(self.obj, state.x, self.eq) + self.w2(state)

    def v2(self, state: SwarmState) -> float:
        c = self.consts
        if c is None or c.eps1 is None or c.eps2 is None:
            raise ConstantsError("V2 needs the continuous-side constants (eps1, eps2)")
        return (1.0 + self.eps * c.eps2 / c.eps1) * self.v1(state) + self.w3(state)

    def w4(self, state: SwarmState) -> float:
        c = self.consts
        if c is None or c.eps7 is None:
            raise ConstantsError("W4 needs the event-side constants (eps7)")
        return c.eps7 * self.v1(state) + self.w3(state)

    def v3(self, state: SwarmState, chi: np.ndarray) -> float:
        if self.varphi is None:
            raise ConstantsError("V3 needs the per-agent threshold constants")
        c = self.consts
        return self.w4(state) + c.eps7 * float(np.sum(self.varphi * chi))

    def sample(self, state: SwarmState, chi: np.ndarray | None = None) -> dict[str, float]:
        """Columns for trajectory logging; includes what is computable."""
        out = {"W1": w1_value(self.obj, state.x, self.eq), "W2": self.w2(state), "W3": self.w3(state)}
        out["V1"] = self.gains.alpha * out["W1"] + out["W2"]
        c = self.consts
        if c is not None and c.eps1 is not None and c.eps2 is not None:
            out["V2"] = (1.0 + self.eps * c.eps2 / c.eps1) * out["V1"] + out["W3"]
        if c is not None and c.eps7 is not None:
            out["W4"] = c.eps7 * out["V1"] + out["W3"]
            if chi is not None and self.varphi is not None:
                out["V3"] = out["W4"] + c.eps7 * float(np.sum(self.varphi * chi))
        return out


def lyapunov_V1(state: SwarmState, ctx: LyapunovContext) -> float:
    """V1 = alpha*W1 + W2; nonincreasing along continuous-mode runs."""
    return ctx.v1(state)


def lyapunov_V3(state: SwarmState, chi: np.ndarray, ctx: LyapunovContext) -> float:
    """V3 = W4 + eps7 * sum_i varphi_i chi_i for event-mode runs."""
    return ctx.v3(state, chi)


def certificate_continuous(
    g: NetworkGraph,
    sd: SpectralData,
    obj: GlobalObjective,
    gains: GainParams,
    eps0: float,
    eps: float,
    V1_at_0: float,
    xstar: np.ndarray,
    mf: float,
    mf_exact: bool = True,
) -> CertificateConstants:
    """Constants certifying exponential convergence of the continuous run.

    The invariant ball D is determined by the initial Lyapunov value:
    every agent trajectory stays inside
    ||a - x*||^2 <= 2*V1(0) / (gamma^2*eps0*(1-sqrt(eps0))), so the
    curvature bound M(D) is evaluated on exactly that ball.  For
    quadratics M is radius-independent and the pass structure collapses.
    """
    _validate_design(gains, eps0, eps)
    if sd.rho2 is None:
        raise ConstantsError("certificate needs at least two agents (no positive Laplacian eigenvalue)")
    if mf <= 0:
        raise ConstantsError(f"restricted strong convexity modulus must be positive, got {mf}")
    if V1_at_0 < 0:
        raise ConstantsError(f"V1(0) must be nonnegative, got {V1_at_0}")
    a, b, gm, th = gains.alpha, gains.beta, gains.gamma, gains.theta
    rho, rho2 = sd.rho, sd.rho2

    D_radius = float(np.sqrt(2.0 * V1_at_0 / (gm**2 * eps0 * (1.0 - np.sqrt(eps0)))))
    M_D = max(curvature_on_set(c, D_radius, xstar) for c in obj.costs)

    lead = a * gm * eps0 - th  # positive by the eps0 range check
    m1 = min(mf / 2.0, rho2 * mf**2 * a * gm * eps0 / (2.0 * lead * (mf**2 + 16.0 * M_D**2)))
    eps1 = min(gm * (1.0 - eps0), a * gm * eps0 * m1)
    eps2 = max(gm / a + gm**2 / th + th / a**2, a**2 * M_D**2 / th)
    eps3 = min(eps1, eps * th / 2.0)
    grow = 1.0 + eps * eps2 / eps1
    eps4 = max(
        grow + eps / a,
        grow * (gm**2 * eps0 + a * b * rho + a * M_D / 2.0) + eps * M_D / 2.0,
        grow * th * gm * eps0 / (b * rho2) + eps * a,
    )
    return CertificateConstants(
        eps0=eps0,
        eps=eps,
        mf=mf,
        mf_exact=mf_exact,
        m1=m1,
        M_D=M_D,
        D_radius=D_radius,
        V1_at_0=V1_at_0,
        eps1=eps1,
        eps2=eps2,
        eps3=eps3,
        eps4=eps4,
        eps_tilde1=grow * gm**2 * eps0 * (1.0 - eps0) / 2.0,
        iota1=mf / (4.0 * M_D),
        rate_bound_continuous=eps3 / (2.0 * eps4),
    )


def certificate_event(
    g: NetworkGraph,
    sd: SpectralData,
    obj: GlobalObjective,
    gains: GainParams,
    eps0: float,
    eps: float,
    trigger_params: TriggerParams,
    mf: float,
    mf_exact: bool = True,
    Mbar_override: float | None = None,
    base: CertificateConstants | None = None,
) -> CertificateConstants:
    """Constants certifying the event-triggered run, appended to ``base``.

    Requires a global gradient-Lipschitz modulus for every agent (or an
    explicit override) and trigger parameters with k_d > 0.
    """
    _validate_design(gains, eps0, eps)
    if sd.rho2 is None:
        raise ConstantsError("certificate needs at least two agents (no positive Laplacian eigenvalue)")
    if mf <= 0:
        raise ConstantsError(f"restricted strong convexity modulus must be positive, got {mf}")
    if Mbar_override is not None:
        Mbar = float(Mbar_override)
    else:
        missing = [i for i, c in enumerate(obj.costs) if c.global_lipschitz is None]
        if missing:
            raise ConstantsError(
                f"agents {missing} have no global gradient-Lipschitz modulus; "
                "event-triggered certification needs one per agent"
            )
        Mbar = max(c.global_lipschitz for c in obj.costs)
    k_d = trigger_params.k_d
    if k_d <= 0:
        raise ConstantsError(f"k_d = min(rate - (1-delta)/kappa) must be positive, got {k_d}")

    a, b, gm, th = gains.alpha, gains.beta, gains.gamma, gains.theta
    rho, rho2 = sd.rho, sd.rho2
    lead = a * gm * eps0 - th

    m2 = min(mf / 2.0, 4.0 * rho2 * mf**2 * a / (lead * b * (mf**2 + 16.0 * Mbar**2)))
    eps5 = min(gm * (1.0 - eps0) / 2.0, m2 * a)
    eps6 = max(gm / a + gm**2 / th + th / a**2, a**2 * Mbar**2 / th)
    eps7 = 1.0 + eps * eps6 / eps5
    eps8 = eps / (4.0 * eps7)
    eps9 = min(eps5, eps * th / 4.0, k_d)
    eps10 = max(
        eps7 + eps / a,
        eps7 * (gm**2 * eps0 + a * b * rho + a * Mbar / 2.0) + eps * Mbar / 2.0,
        eps7 * th * gm * eps0 / (b * rho2) + eps * a / rho2,
    )
    out = base if base is not None else CertificateConstants(eps0=eps0, eps=eps, mf=mf, mf_exact=mf_exact)
    out.Mbar = Mbar
    out.m2 = m2
    out.eps5 = eps5
    out.eps6 = eps6
    out.eps7 = eps7
    out.eps8 = eps8
    out.eps9 = eps9
    out.eps10 = eps10
    out.eps_tilde2 = eps7 * gm**2 * eps0 * (1.0 - eps0) / 2.0
    out.iota2 = mf / (4.0 * Mbar)
    out.k_d = k_d
    out.rate_bound_event = eps9 / (2.0 * eps10)
    return out


@dataclass
class RateFit:
    """Least-squares exponential decay rate of the distance to consensus
    on the optimum, fitted on a window of the trajectory."""

    rate: float
    t_lo: float
    t_hi: float
    samples_used: int
    truncated: bool


def fit_rate(
    traj: Trajectory,
    xstar: np.ndarray,
    window: tuple[float, float] = (0.2, 0.8),
    noise_floor: float = 1e-13,
) -> RateFit:
    """Fit -log||x(t) - xbar|| by least squares over a trajectory window.

    The default window keeps the middle 60% of the horizon, skipping the
    transient and the tail.  Samples at or below the floating-point noise
    floor truncate the window (flagged in the result).
    """
    xbar = np.tile(np.asarray(xstar, dtype=float), (traj.x.shape[1], 1))
    errs = np.linalg.norm(traj.x - xbar[None, :, :], axis=(1, 2))
    T = traj.t[-1]
    lo, hi = window
    mask = (traj.t >= lo * T) & (traj.t <= hi * T)
    truncated = False
    above = errs > noise_floor
    if not np.all(above[mask]):
        truncated = True
        mask = mask & above
    t_sel = traj.t[mask]
    e_sel = errs[mask]
    if t_sel.size < 2:
        raise ValueError("rate window has fewer than two usable samples")
    slope, _ = np.polyfit(t_sel, -np.log(e_sel), 1)
    return RateFit(
        rate=float(slope),
        t_lo=float(t_sel[0]),
        t_hi=float(t_sel[-1]),
        samples_used=int(t_sel.size),
        truncated=truncated,
    )


@dataclass
class CombinedConvexityReport:
    margin: float
    m: float
    iota: float
    ok: bool


def check_combined_convexity(
    obj: GlobalObjective,
    xstar: np.ndarray,
    g: NetworkGraph,
    sd: SpectralData,
    r_coeff: float,
    samples,
    mf: float,
    Mbar: float,
) -> CombinedConvexityReport:
    """Sample the combined convexity/disagreement inequality.

    For stacked states x, checks
    (grad f(x) - grad f(x*))^T (x - x*) + r * x^T (L kron I) x
    >= m ||x - x*||^2 with m = min(mf - 2*Mbar*iota, rho2/(2r(1+1/iota^2)))
    and iota = mf/(4*Mbar).  A negative margin beyond tolerance flags
    inconsistent curvature data.
    """
    if r_coeff <= 0:
        raise ConstantsError(f"r must be positive, got {r_coeff}")
    iota = mf / (4.0 * Mbar)
    m = min(mf - 2.0 * Mbar * iota, sd.rho2 / (2.0 * r_coeff * (1.0 + 1.0 / iota**2)))
    xbar = np.tile(np.asarray(xstar, dtype=float), (obj.n, 1))
    grad_star = obj.grad_stack(xbar)
    worst = np.inf
    for x in samples:
        x = np.asarray(x, dtype=float).reshape(obj.n, obj.p)
        d = x - xbar
        lhs = _dot(obj.grad_stack(x) - grad_star, d) + r_coeff * _dot(x, g.laplacian @ x)
        worst = min(worst, lhs - m * _dot(d, d))
    return CombinedConvexityReport(margin=float(worst), m=float(m), iota=float(iota), ok=worst >= -1e-9)


def envelope_excess(t: np.ndarray, values: np.ndarray, rate: float) -> float:
    """Max of values(t) - values(0)*exp(-rate*t); <= tol certifies the
    exponential decay envelope."""
    return float(np.max(values - values[0] * np.exp(-rate * np.asarray(t))))


def monotonicity_excess(values: np.ndarray) -> float:
    """Largest per-step increase of a sampled scalar signal."""
    d = np.diff(np.asarray(values))
    return float(d.max()) if d.size else 0.0
