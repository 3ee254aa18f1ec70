"""Lumped winding-filament muscle mechanics.

Each virtual muscle is a one-state mechanical chain spanning the imposed
muscle-tendon path length ``l_mtu``:

    tendon spring (k_ss, slack length l_t_slack)
        -- in series with --
    titin spring (k_ts(a), rest length l_ts_rest)
        -- in series with --
    contractile element (CE) in parallel with a damper (c_ce)

Both springs are tension-only.  The titin stiffness rises linearly with
activation, k_ts(a) = k_ts_passive + a * k_ts_active, which is what makes
this chain behave differently from a classic Hill arrangement.  The CE
produces a * f_max scaled by a Gaussian force-length factor, and the damper
turns the CE node into a first-order state: the contractile-element length
``l_ce`` is the only integrated quantity.

All functions are pure and accept either floats or broadcastable numpy
arrays (parameter fields included), so a swarm of parameter sets can be
advanced in lock-step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

G_STANDARD = 9.80665  # standard gravity, m/s^2

# Share of the reference muscle-tendon length assigned to each element when
# rest lengths are derived from geometry rather than given explicitly.
TENDON_LENGTH_FRACTION = 0.50
TITIN_LENGTH_FRACTION = 0.10
CE_LENGTH_FRACTION = 0.40

# Default stiffness scale per side; titin stiffnesses are ratios of k_ss.
DEFAULT_K_SS = {"anterior": 1.0e5, "posterior": 2.0e5}  # N/m
K_TS_PASSIVE_RATIO = 0.05
K_TS_ACTIVE_RATIO = 0.45
DEFAULT_C_CE = 1.0e3  # N*s/m
DEFAULT_FL_WIDTH = 0.45


class IntegrationError(RuntimeError):
    """Integrator produced a non-finite or non-physical state."""


class NoEquilibriumError(RuntimeError):
    """No sign change of the CE force balance inside the search bracket."""


def _check(cond: np.ndarray | bool, msg: str) -> None:
    if not bool(np.all(cond)):
        raise ValueError(msg)


@dataclass(frozen=True)
class WfmParams:
    """Mechanical constants of one virtual muscle.

    Fields may be scalars or broadcastable arrays (one entry per muscle,
    trial, or particle); validation applies elementwise.
    """

    k_ss: float           # tendon (series) stiffness, N/m
    k_ts_passive: float   # titin stiffness at zero activation, N/m
    k_ts_active: float    # titin stiffness added at full activation, N/m
    c_ce: float           # damper in parallel with the CE, N*s/m
    f_max: float          # peak CE force at full activation, N
    l_t_slack: float      # tendon slack length, m
    l_ts_rest: float      # titin rest length, m
    l_ce_opt: float       # CE optimal length, m
    fl_width: float = DEFAULT_FL_WIDTH  # force-length bell width, relative

    def __post_init__(self) -> None:
        _check(np.asarray(self.k_ss) >= 0, "k_ss must be >= 0")
        _check(np.asarray(self.k_ts_passive) >= 0, "k_ts_passive must be >= 0")
        _check(np.asarray(self.k_ts_active) >= 0, "k_ts_active must be >= 0")
        _check(np.asarray(self.c_ce) > 0, "c_ce must be > 0")
        _check(np.asarray(self.f_max) > 0, "f_max must be > 0")
        _check(np.asarray(self.l_t_slack) > 0, "l_t_slack must be > 0")
        _check(np.asarray(self.l_ts_rest) > 0, "l_ts_rest must be > 0")
        _check(np.asarray(self.l_ce_opt) > 0, "l_ce_opt must be > 0")
        _check(np.asarray(self.fl_width) > 0, "fl_width must be > 0")
        _check(np.asarray(self.k_ts_passive) + np.asarray(self.k_ts_active) > 0,
               "k_ts_passive + k_ts_active must be > 0")


@dataclass(frozen=True)
class MuscleState:
    """The single integrated state of one muscle: CE length at time t."""

    l_ce: float  # m
    t: float     # s

    def __post_init__(self) -> None:
        _check(np.asarray(self.l_ce) > 0, "l_ce must be > 0")


@dataclass(frozen=True)
class MuscleOutputs:
    """Derived quantities of the chain at one instant."""

    l_ts: float    # titin length, m
    l_t: float     # tendon length, m
    force: float   # chain tension, N (>= 0)
    taut: bool     # True when the tendon-titin chain carries tension


def titin_stiffness(a, p: WfmParams):
    """Activation-dependent titin stiffness k_ts(a), N/m."""
    _check((np.asarray(a) >= 0) & (np.asarray(a) <= 1), "activation must be in [0, 1]")
    return p.k_ts_passive + a * p.k_ts_active


def force_length_scale(l_ce, p: WfmParams):
    """Gaussian CE force-length factor, 1 at l_ce_opt, in (0, 1]."""
    _check(np.asarray(l_ce) > 0, "l_ce must be > 0")
    z = (l_ce - p.l_ce_opt) / (p.fl_width * p.l_ce_opt)
    return np.exp(-z * z)


def _signed_chain_force(l_mtu, l_ce, a, p: WfmParams):
    """Tendon-titin force on the taut branch, sign kept (may be < 0)."""
    k_ts = p.k_ts_passive + a * p.k_ts_active
    stretch = l_mtu - l_ce - p.l_t_slack
    l_ts = (p.k_ss * stretch + k_ts * p.l_ts_rest) / (p.k_ss + k_ts)
    return p.k_ss * (stretch - l_ts)


def chain_force(l_mtu, l_ce, a, p: WfmParams):
    """Tension carried by the tendon-titin chain, clamped at zero (slack)."""
    _check(np.asarray(l_mtu) > 0, "l_mtu must be > 0")
    _check(np.asarray(l_ce) > 0, "l_ce must be > 0")
    _check((np.asarray(a) >= 0) & (np.asarray(a) <= 1), "activation must be in [0, 1]")
    return np.maximum(_signed_chain_force(l_mtu, l_ce, a, p), 0.0)


def solve_internal_balance(l_mtu: float, l_ce: float, a: float, p: WfmParams) -> MuscleOutputs:
    """Static force balance of the two series springs at a given CE length.

    Solves k_ss * (l_t - l_t_slack) = k_ts(a) * (l_ts - l_ts_rest) with
    l_t + l_ts = l_mtu - l_ce.  If the taut solution would push (force < 0)
    the chain is slack: zero force, titin at rest length.
    """
    _check(l_mtu > 0, "l_mtu must be > 0")
    _check(l_ce > 0, "l_ce must be > 0")
    _check(0 <= a <= 1, "activation must be in [0, 1]")
    k_ts = titin_stiffness(a, p)
    denom = p.k_ss + k_ts
    if denom == 0:
        raise ValueError("degenerate parameters: k_ss + k_ts(a) = 0")
    stretch = l_mtu - l_ce - p.l_t_slack
    l_ts = (p.k_ss * stretch + k_ts * p.l_ts_rest) / denom
    force = p.k_ss * (stretch - l_ts)
    if force < 0:
        return MuscleOutputs(l_ts=float(p.l_ts_rest),
                             l_t=float(l_mtu - l_ce - p.l_ts_rest),
                             force=0.0, taut=False)
    return MuscleOutputs(l_ts=float(l_ts), l_t=float(l_mtu - l_ce - l_ts),
                         force=float(force), taut=True)


def _dlce_dt(l_mtu, l_ce, a, p: WfmParams):
    """CE length rate: (chain tension - active CE force) / c_ce.

    No input validation; shared hot path for the integrator.
    """
    k_ts = p.k_ts_passive + a * p.k_ts_active
    stretch = l_mtu - l_ce - p.l_t_slack
    l_ts = (p.k_ss * stretch + k_ts * p.l_ts_rest) / (p.k_ss + k_ts)
    force = np.maximum(p.k_ss * (stretch - l_ts), 0.0)
    z = (l_ce - p.l_ce_opt) / (p.fl_width * p.l_ce_opt)
    active = a * p.f_max * np.exp(-z * z)
    return (force - active) / p.c_ce


def ce_velocity(l_mtu, l_ce, a, p: WfmParams):
    """dl_ce/dt in m/s; positive means the CE is lengthening."""
    _check(np.asarray(l_mtu) > 0, "l_mtu must be > 0")
    _check(np.asarray(l_ce) > 0, "l_ce must be > 0")
    _check((np.asarray(a) >= 0) & (np.asarray(a) <= 1), "activation must be in [0, 1]")
    if not bool(np.all(np.asarray(p.c_ce) > 0)):
        raise ValueError("degenerate parameters: c_ce must be > 0")
    return _dlce_dt(l_mtu, l_ce, a, p)


def rk4_advance(l_ce, dt, lmtu_stages, a_stages, p: WfmParams):
    """One classical 4th-order step of the CE length ODE.

    ``lmtu_stages`` and ``a_stages`` hold the input values at the step start,
    midpoint, and end (t, t + dt/2, t + dt).  Broadcasts over arrays.
    """
    lm0, lmh, lm1 = lmtu_stages
    a0, ah, a1 = a_stages
    k1 = _dlce_dt(lm0, l_ce, a0, p)
    k2 = _dlce_dt(lmh, l_ce + 0.5 * dt * k1, ah, p)
    k3 = _dlce_dt(lmh, l_ce + 0.5 * dt * k2, ah, p)
    k4 = _dlce_dt(lm1, l_ce + dt * k3, a1, p)
    return l_ce + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0


def step_muscle(s: MuscleState, l_mtu_of_t, a_of_t, dt: float, p: WfmParams) -> MuscleState:
    """Advance the muscle state by one fixed RK4 step of size dt."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    t = s.t
    lm = (l_mtu_of_t(t), l_mtu_of_t(t + 0.5 * dt), l_mtu_of_t(t + dt))
    aa = (a_of_t(t), a_of_t(t + 0.5 * dt), a_of_t(t + dt))
    _check(all(v > 0 for v in lm), "l_mtu must be > 0 over the step")
    _check(all(0 <= v <= 1 for v in aa), "activation must be in [0, 1] over the step")
    l_new = float(rk4_advance(s.l_ce, dt, lm, aa, p))
    if not np.isfinite(l_new) or l_new <= 0:
        raise IntegrationError(f"non-finite or non-positive CE length at t = {t + dt!r}")
    return MuscleState(l_ce=l_new, t=t + dt)


def equilibrium_ce_length(l_mtu, a, p: WfmParams, *, scan_points: int = 64,
                          bisect_iters: int = 120):
    """CE length at which dl_ce/dt = 0 for constant inputs.

    Scans (0, l_mtu] for the first sign change of the residual
    (signed chain force minus active CE force) and bisects it down.
    With zero activation and a chain too short to ever go taut there is no
    sign change but every slack CE length is an equilibrium; the CE rest
    length l_ce_opt is returned for that case.
    """
    _check(np.asarray(l_mtu) > 0, "l_mtu must be > 0")
    _check((np.asarray(a) >= 0) & (np.asarray(a) <= 1), "activation must be in [0, 1]")

    def g(l_ce):
        z = (l_ce - p.l_ce_opt) / (p.fl_width * p.l_ce_opt)
        return _signed_chain_force(l_mtu, l_ce, a, p) - a * p.f_max * np.exp(-z * z)

    l_mtu_b, a_b = np.asarray(l_mtu, dtype=float), np.asarray(a, dtype=float)
    shape = np.broadcast_shapes(l_mtu_b.shape, a_b.shape,
                                *(np.asarray(getattr(p, f)).shape for f in
                                  ("k_ss", "k_ts_passive", "k_ts_active", "f_max",
                                   "l_t_slack", "l_ts_rest", "l_ce_opt", "fl_width")))
    scalar = shape == ()
    lo = np.broadcast_to(1e-9 * l_mtu_b, shape).astype(float)
    hi = np.broadcast_to(l_mtu_b, shape).astype(float)

    frac = np.linspace(0.0, 1.0, scan_points + 1).reshape((-1,) + (1,) * len(shape))
    ls = lo + (hi - lo) * frac
    gs = g(ls)
    change = np.sign(gs[:-1]) * np.sign(gs[1:]) <= 0
    has_root = change.any(axis=0)

    no_root = ~has_root
    if bool(np.any(no_root & np.broadcast_to(a_b > 0, shape))):
        raise NoEquilibriumError(
            "no sign change of the force balance in (0, l_mtu]; "
            "the CE has no rest point under this activation")

    first = np.argmax(change, axis=0)
    lo_b = np.take_along_axis(ls, first[None], axis=0)[0]
    hi_b = np.take_along_axis(ls, first[None] + 1, axis=0)[0]
    g_lo = np.take_along_axis(gs, first[None], axis=0)[0]

    for _ in range(bisect_iters):
        mid = 0.5 * (lo_b + hi_b)
        gm = g(mid)
        same_side = (np.sign(gm) == np.sign(g_lo)) & (gm != 0)
        lo_b = np.where(same_side, mid, lo_b)
        g_lo = np.where(same_side, gm, g_lo)
        hi_b = np.where(same_side, hi_b, mid)

    root = 0.5 * (lo_b + hi_b)
    root = np.where(no_root, np.broadcast_to(np.asarray(p.l_ce_opt, dtype=float), shape), root)
    return float(root) if scalar else root


def f_max_from_mass(body_mass: float) -> float:
    """Peak muscle force from body mass: five times body weight, in N."""
    if not body_mass > 0:
        raise ValueError("body_mass must be > 0")
    return 5.0 * body_mass * G_STANDARD


def rest_lengths(l_mtu_ref: float) -> tuple[float, float, float]:
    """Split a reference path length into (l_t_slack, l_ts_rest, l_ce_opt).

    The chain is exactly at rest (zero force, CE at optimum) when the
    muscle-tendon length equals l_mtu_ref.
    """
    _check(np.asarray(l_mtu_ref) > 0, "l_mtu_ref must be > 0")
    return (TENDON_LENGTH_FRACTION * l_mtu_ref,
            TITIN_LENGTH_FRACTION * l_mtu_ref,
            CE_LENGTH_FRACTION * l_mtu_ref)


def default_params(side: str, l_mtu_ref: float,
                   f_max: float | None = None) -> WfmParams:
    """Order-of-magnitude defaults for one side, rest-calibrated at l_mtu_ref."""
    if side not in DEFAULT_K_SS:
        raise ValueError(f"side must be 'anterior' or 'posterior', got {side!r}")
    k_ss = DEFAULT_K_SS[side]
    l_t, l_ts, l_ce = rest_lengths(l_mtu_ref)
    return WfmParams(
        k_ss=k_ss,
        k_ts_passive=K_TS_PASSIVE_RATIO * k_ss,
        k_ts_active=K_TS_ACTIVE_RATIO * k_ss,
        c_ce=DEFAULT_C_CE,
        f_max=f_max if f_max is not None else f_max_from_mass(70.0),
        l_t_slack=l_t,
        l_ts_rest=l_ts,
        l_ce_opt=l_ce,
    )
