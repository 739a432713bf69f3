"""Bicharacteristic flow for the conic wave geometry, in b-coordinates.

Two parametrizations of the same curves: the singular system blows up at
r = 0 and strikes the origin in finite parameter time when the angular
momentum vanishes, while the rescaled system (the singular field times r^2)
extends smoothly over r = 0, where striking flows slow down and stall at the
radial point (r, xi) = (0, 0). The propagating variable xi_hat = xi/tau
vanishes there instead of flipping sign, which is the behavior these tools
exist to demonstrate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

R_FLOOR = 1e-12             # below this the singular field is unusable
ORIGIN_RADIUS = 1e-6        # striking threshold for integrate_flow
_MAX_SUBSTEPS = 1 << 16     # per macro step, before StepUnderflow
_RATE_TARGET = 0.25         # max fractional change per substep


class GeodesicError(Exception):
    pass


class OriginSingularity(GeodesicError):
    """The singular system was evaluated at (numerically) zero radius."""


class StepUnderflow(GeodesicError):
    pass


class OriginReached(GeodesicError):
    """Informative termination: the flow hit the origin threshold.

    Carries the partial trajectory in the `trajectory` attribute.
    """

    def __init__(self, message, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class FlowState:
    t: float
    r: float
    theta: tuple
    tau: float
    xi: float
    zeta: tuple

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        object.__setattr__(self, "zeta", tuple(float(x) for x in self.zeta))
        if len(self.theta) != len(self.zeta):
            raise ValueError("theta and zeta must have equal dimension")
        vals = (self.t, self.r, self.tau, self.xi) + self.theta + self.zeta
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("flow state must be finite")

    @property
    def xi_hat(self) -> float:
        return self.xi / self.tau


@dataclass(frozen=True)
class SphereMetric:
    """Inverse metric k^{ij}(theta) and its angle derivatives on a chart.

    dk_inv returns the array d[l, i, j] = d k^{ij} / d theta_l.
    """
    dim: int
    k_inv: Callable[[tuple], np.ndarray]
    dk_inv: Callable[[tuple], np.ndarray]
    name: str = "custom"


def circle() -> SphereMetric:
    """Round S^1: one angle, k = 1, no curvature terms."""
    one = np.ones((1, 1))
    zero = np.zeros((1, 1, 1))
    return SphereMetric(dim=1, k_inv=lambda th: one, dk_inv=lambda th: zero,
                        name="circle")


def sphere_chart() -> SphereMetric:
    """Round S^2 in polar angles (phi, psi), valid away from the poles."""

    def k_inv(th):
        phi = th[0]
        s = math.sin(phi)
        return np.array([[1.0, 0.0], [0.0, 1.0 / (s * s)]])

    def dk_inv(th):
        phi = th[0]
        s, c = math.sin(phi), math.cos(phi)
        d = np.zeros((2, 2, 2))
        d[0, 1, 1] = -2.0 * c / s ** 3
        return d

    return SphereMetric(dim=2, k_inv=k_inv, dk_inv=dk_inv, name="sphere")


def zeta_norm_sq(state: FlowState, g: SphereMetric) -> float:
    z = np.asarray(state.zeta)
    return float(z @ g.k_inv(state.theta) @ z)


def characteristic_value(state: FlowState, g: SphereMetric) -> float:
    """sigma = tau^2 - (xi^2 + |zeta|_k^2)/r^2, conserved by the singular flow."""
    return state.tau ** 2 - (state.xi ** 2 + zeta_norm_sq(state, g)) / state.r ** 2


def _momentum_terms(state: FlowState, g: SphereMetric):
    z = np.asarray(state.zeta)
    kz = g.k_inv(state.theta) @ z
    zkz = float(z @ kz)
    dk = g.dk_inv(state.theta)
    # component l of (d_theta_l k^{ij}) zeta_i zeta_j
    dz = np.einsum("lij,i,j->l", dk, z, z)
    return kz, zkz, dz


def hamilton_rhs(state: FlowState, g: SphereMetric) -> FlowState:
    """Singular-system derivative: t' = tau, r' = -xi/r,
    theta' = k zeta/(2 r^2), tau' = 0, xi' = -(xi^2 + |zeta|^2)/r^2,
    zeta_l' = -(d_theta_l k^{ij}) zeta_i zeta_j/(4 r^2).

    The zeta pairing is the one that conserves sigma together with the
    displayed theta' (so the two momentum equations come from the same
    Hamiltonian pairing).
    """
    if state.r <= R_FLOOR:
        raise OriginSingularity(f"r={state.r!r} at or below floor {R_FLOOR}")
    kz, zkz, dz = _momentum_terms(state, g)
    r2 = state.r ** 2
    return FlowState(
        t=state.tau,
        r=-state.xi / state.r,
        theta=tuple(kz / (2.0 * r2)),
        tau=0.0,
        xi=-(state.xi ** 2 + zkz) / r2,
        zeta=tuple(-dz / (4.0 * r2)),
    )


def rescaled_rhs(state: FlowState, g: SphereMetric) -> FlowState:
    """The singular field multiplied by r^2, smooth across r = 0:
    t' = r^2 tau, r' = -r xi, theta' = k zeta/2, tau' = 0,
    xi' = -(xi^2 + |zeta|^2), zeta_l' = -(d_theta_l k^{ij}) zeta_i zeta_j/4.
    """
    kz, zkz, dz = _momentum_terms(state, g)
    return FlowState(
        t=state.r ** 2 * state.tau,
        r=-state.r * state.xi,
        theta=tuple(kz / 2.0),
        tau=0.0,
        xi=-(state.xi ** 2 + zkz),
        zeta=tuple(-dz / 4.0),
    )


@dataclass(frozen=True)
class Trajectory:
    states: tuple
    s_values: np.ndarray
    sigma_values: np.ndarray    # conserved-quantity log (singular-system sigma)
    system: str


def _pack(state: FlowState) -> np.ndarray:
    return np.array((state.t, state.r) + state.theta + (state.tau, state.xi)
                    + state.zeta)


def _unpack(y: np.ndarray, d: int) -> FlowState:
    return FlowState(t=float(y[0]), r=float(y[1]), theta=tuple(y[2:2 + d]),
                     tau=float(y[2 + d]), xi=float(y[3 + d]),
                     zeta=tuple(y[4 + d:4 + 2 * d]))


def _rk4(f, y, h, d):
    k1 = _pack(f(_unpack(y, d)))
    k2 = _pack(f(_unpack(y + 0.5 * h * k1, d)))
    k3 = _pack(f(_unpack(y + 0.5 * h * k2, d)))
    k4 = _pack(f(_unpack(y + h * k3, d)))
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_flow(s0: FlowState, g: SphereMetric, s_span: float, step: float,
                   system: str = "full") -> Trajectory:
    """Fixed-grid RK4 trace of either system over [0, s_span].

    Macro steps land on multiples of `step`; inside each, the step is halved
    while the momentum rate |xi'| would move xi by more than a quarter of its
    scale, and (singular system) clamped so no stage can jump across r = 0.
    Raises OriginReached once r drops below 1e-6 while still moving inward
    on the singular system, with the partial trajectory attached;
    StepUnderflow if halving cannot tame the local rate within the substep
    budget.
    """
    if system == "full":
        rhs = lambda st: hamilton_rhs(st, g)
    elif system == "rescaled":
        rhs = lambda st: rescaled_rhs(st, g)
    else:
        raise ValueError(f"unknown system {system!r}")
    if step <= 0 or s_span <= 0:
        raise ValueError("step and s_span must be > 0")

    d = g.dim
    y = _pack(s0)
    s = 0.0
    states = [s0]
    ss = [0.0]
    sigmas = [characteristic_value(s0, g)]

    def record(state):
        if s <= ss[-1]:
            return
        states.append(state)
        ss.append(s)
        sigmas.append(characteristic_value(state, g) if state.r > R_FLOOR
                      else float("nan"))

    def finish(reason=None):
        traj = Trajectory(states=tuple(states), s_values=np.array(ss),
                          sigma_values=np.array(sigmas), system=system)
        if reason is not None:
            raise OriginReached(reason, traj)
        return traj

    n_macro = int(math.ceil(s_span / step))
    for k in range(n_macro):
        target = min(s_span, (k + 1) * step)
        substeps = 0
        while s < target - 1e-15 * s_span:
            state = _unpack(y, d)
            if system == "full" and state.r < ORIGIN_RADIUS and state.xi > 0:
                record(state)
                return finish(f"r={state.r:.3e} below origin threshold")
            v = rhs(state)
            h = target - s
            rate = abs(v.xi) / (1.0 + abs(state.xi))
            if rate * h > _RATE_TARGET:
                h = _RATE_TARGET / rate
            if system == "full" and v.r < 0.0:
                # never let a stage cross the origin
                h = min(h, 0.5 * state.r / (-v.r))
            if h <= 0 or substeps >= _MAX_SUBSTEPS:
                raise StepUnderflow(
                    f"needed more than {_MAX_SUBSTEPS} substeps at s={s:.6g}")
            try:
                with np.errstate(over="ignore", invalid="ignore"):
                    y = _rk4(rhs, y, h, d)
            except ValueError as exc:
                raise StepUnderflow(
                    f"flow diverged at s={s:.6g} (finite-parameter "
                    f"blow-up): {exc}") from exc
            if not np.all(np.isfinite(y)):
                raise StepUnderflow(f"flow diverged at s={s:.6g}")
            s += h
            substeps += 1
        record(_unpack(y, d))
    return finish()


def trace_through_origin(s0: FlowState, g: SphereMetric, s_span: float,
                         step: float) -> Trajectory:
    """Singular-system trace of a zero-angular-momentum striking flow,
    continued through the origin by its mirror image.

    When the inbound leg stops at r_stop, the flow covers the remaining
    2 r_stop / tau of parameter in the gap (radial speed is tau on a
    characteristic striking flow), so the outbound leg restarts at the
    mirrored state (r_stop, -xi) with s and t advanced accordingly.
    """
    if any(abs(z) > 1e-12 for z in s0.zeta):
        raise ValueError("origin passage requires zero angular momentum")
    if s0.tau <= 0:
        raise ValueError("convention: tau > 0 along traced flows")

    states = []
    ss = []
    sigmas = []
    s_off = 0.0
    t_off = 0.0
    cur = s0
    remaining = s_span
    while remaining > 0:
        try:
            leg = integrate_flow(cur, g, remaining, step, system="full")
        except OriginReached as e:
            leg = e.trajectory
            struck = True
        else:
            struck = False
        for st, sv, sg in zip(leg.states, leg.s_values, leg.sigma_values):
            states.append(FlowState(t=st.t + t_off, r=st.r, theta=st.theta,
                                    tau=st.tau, xi=st.xi, zeta=st.zeta))
            ss.append(sv + s_off)
            sigmas.append(sg)
        if not struck:
            break
        last = leg.states[-1]
        gap = 2.0 * last.r / last.tau
        s_off += leg.s_values[-1] + gap
        t_off += gap * last.tau
        remaining = s_span - s_off
        if remaining <= 0:
            break
        cur = FlowState(t=last.t, r=last.r, theta=last.theta, tau=last.tau,
                        xi=-last.xi, zeta=last.zeta)
    return Trajectory(states=tuple(states), s_values=np.array(ss),
                      sigma_values=np.array(sigmas), system="full+bridge")


def xi_hat_profile(trajectory: Trajectory) -> np.ndarray:
    """Array of rows (s, xi/tau) along the trajectory."""
    out = np.empty((len(trajectory.states), 2))
    for i, (s, st) in enumerate(zip(trajectory.s_values, trajectory.states)):
        out[i, 0] = s
        out[i, 1] = st.xi / st.tau
    return out


def sec_envelope_bound(state: FlowState, g: SphereMetric) -> float:
    """Lower bound for r along the rescaled flow with nonzero angular
    momentum: the secant closed form has amplitude
    r |zeta|_k / sqrt(|zeta|_k^2 + xi^2)."""
    zz = zeta_norm_sq(state, g)
    if zz <= 0:
        raise ValueError("bound requires nonzero angular momentum")
    return state.r * math.sqrt(zz / (zz + state.xi ** 2))
