"""Hybrid dynamics of a tractor towing a trailer on an inextensible cable.

The tractor is an omnidirectional double integrator driven by planar and
angular acceleration.  The trailer is a front-axle bicycle whose reference
point is the cable attachment.  The cable switches the coupled system between
two regimes:

* slack - zero cable force, frozen steering, the trailer coasts against
  Coulomb friction;
* taut - the cable holds exactly its maximum length, the steering aligns
  with the cable, and the trailer speed follows the tractor velocity
  component along the cable.

All step functions are pure: they take a state, return a new state, and keep
no mutable module state, so identical inputs always produce bit-identical
outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi

# Cable-length tolerance for mode membership checks [m].
EPS_TAUT = 1e-6
# How close to the cable limit a taut step expects to start [m].
EPS_REACH = 1e-3


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = a % TWO_PI
    if a > math.pi:
        a -= TWO_PI
    return a


def sgn(v: float) -> float:
    """Sign with sgn(0) = 0."""
    if v > 0.0:
        return 1.0
    if v < 0.0:
        return -1.0
    return 0.0


class TautInfeasible(Exception):
    """A taut step cannot satisfy the cable alignment constraints.

    Carries an optional trajectory ``index`` when raised from ``rollout``.
    """

    def __init__(self, reason: str, index: int | None = None):
        super().__init__(reason if index is None else f"step {index}: {reason}")
        self.reason = reason
        self.index = index


@dataclass(frozen=True)
class SystemParams:
    """Physical and discretization parameters of the coupled system."""

    phi_max: float = math.pi / 2  # steering limit [rad]
    trailer_wheelbase: float = 0.5  # front-axle to rear-axle distance [m]
    cable_len_max: float = 0.8  # taut cable length [m]
    cable_len_min: float = 0.2  # minimum admissible separation [m]
    safe_sep: float = 0.55  # nominal safe tractor-trailer separation [m]
    friction: float = 0.03  # Coulomb friction coefficient
    trailer_mass: float = 5.0  # [kg]
    grav: float = 9.81  # [m/s^2]
    accel_max: float = 1.0  # tractor planar acceleration bound [m/s^2]
    ang_accel_max: float = 1.5  # tractor angular acceleration bound [rad/s^2]
    speed_max: float = 1.0  # tractor speed / trailer speed bound [m/s]
    ang_speed_max: float = 1.5  # tractor angular speed bound [rad/s]
    expansion_period: float = 0.5  # search expansion duration [s]
    accel_step: float = 0.25  # primitive acceleration magnitude step [m/s^2]
    accel_angle_step: float = math.pi / 12  # primitive direction step [rad]
    grid_xy: float = 0.20  # duplicate-pruning grid resolution, positions [m]
    grid_heading: float = math.pi / 12  # duplicate-pruning resolution, heading [rad]
    dt: float = 0.1  # integration step [s]
    vel_ellipse_x: float = 1.0  # body-frame velocity ellipse semi-axis, forward [m/s]
    vel_ellipse_y: float = 0.5  # body-frame velocity ellipse semi-axis, lateral [m/s]

    def __post_init__(self) -> None:
        if not (0.0 < self.phi_max <= math.pi / 2):
            raise ValueError("phi_max must lie in (0, pi/2]")
        if not (0.0 < self.cable_len_min < self.cable_len_max):
            raise ValueError("need 0 < cable_len_min < cable_len_max")
        if not (0.0 < self.safe_sep < self.cable_len_max + self.trailer_wheelbase):
            raise ValueError("safe_sep out of range")
        if self.trailer_wheelbase <= 0.0 or self.trailer_mass <= 0.0:
            raise ValueError("wheelbase and mass must be positive")
        if self.friction < 0.0 or self.grav <= 0.0:
            raise ValueError("bad friction/gravity")
        if min(self.accel_max, self.ang_accel_max, self.speed_max,
               self.ang_speed_max) <= 0.0:
            raise ValueError("bounds must be positive")
        if self.dt <= 0.0 or self.expansion_period <= 0.0:
            raise ValueError("dt and expansion_period must be positive")
        n = self.expansion_period / self.dt
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ValueError("expansion_period must be a positive multiple of dt")
        if min(self.accel_step, self.accel_angle_step, self.grid_xy,
               self.grid_heading) <= 0.0:
            raise ValueError("discretization steps must be positive")
        if self.vel_ellipse_x <= 0.0 or self.vel_ellipse_y <= 0.0:
            raise ValueError("velocity ellipse semi-axes must be positive")

    @property
    def mu_g(self) -> float:
        """Friction deceleration mu * g [m/s^2]."""
        return self.friction * self.grav

    @property
    def steps_per_expansion(self) -> int:
        return round(self.expansion_period / self.dt)


@dataclass(frozen=True)
class TractorState:
    """Tractor pose and velocity (world frame)."""

    x: float
    y: float
    theta: float
    vx: float
    vy: float
    omega: float

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


@dataclass(frozen=True)
class TrailerState:
    """Trailer pose, forward speed, steering angle and cable force."""

    x: float
    y: float
    theta: float
    speed: float
    steering: float
    force: float


@dataclass(frozen=True)
class ControlInput:
    """Tractor acceleration command: planar (ax, ay) and angular gr."""

    ax: float
    ay: float
    gr: float = 0.0


@dataclass(frozen=True)
class HybridState:
    """Full system state; mode 0 = slack cable, mode 1 = taut cable.

    The mode flag records how the state was *reached*: states produced by a
    taut step carry mode 1, everything else mode 0.
    """

    tractor: TractorState
    trailer: TrailerState
    mode: int


@dataclass(frozen=True)
class CableKinematics:
    """Derived cable quantities for one state.

    ``angular_rate`` is diagnostic only; no step function consumes it.
    """

    length: float
    angle: float
    angular_rate: float
    tractor_speed: float
    tractor_course: float


def cable_length(x: HybridState) -> float:
    return math.hypot(x.tractor.x - x.trailer.x, x.tractor.y - x.trailer.y)


def cable_kinematics(x: HybridState) -> CableKinematics:
    """Cable length, bearing and swing rate for a hybrid state.

    Conventions: the cable bearing points from trailer to tractor; the
    tractor course is 0 when the tractor is at rest; the swing rate is 0 for
    a degenerate zero-length cable.
    """
    dx = x.tractor.x - x.trailer.x
    dy = x.tractor.y - x.trailer.y
    length = math.hypot(dx, dy)
    angle = math.atan2(dy, dx)
    v_r = math.hypot(x.tractor.vx, x.tractor.vy)
    course = math.atan2(x.tractor.vy, x.tractor.vx) if v_r > 0.0 else 0.0
    if length > 0.0:
        rate = v_r * math.sin(course - angle) / length
    else:
        rate = 0.0
    return CableKinematics(length, angle, rate, v_r, course)


def step_tractor(s: TractorState, u: ControlInput, dt: float) -> TractorState:
    """Explicit-Euler double-integrator step (position uses the old velocity)."""
    return TractorState(
        s.x + s.vx * dt,
        s.y + s.vy * dt,
        wrap_angle(s.theta + s.omega * dt),
        s.vx + u.ax * dt,
        s.vy + u.ay * dt,
        s.omega + u.gr * dt,
    )


def step_trailer(s: TrailerState, force: float, dt: float,
                 p: SystemParams) -> TrailerState:
    """Bicycle step under a given cable force.

    The reference point moves along heading + steering; the speed update is
    force/mass minus Coulomb friction, clamped so that friction alone never
    drives the speed through zero within one step.
    """
    hd = s.theta + s.steering
    x = s.x + s.speed * math.cos(hd) * dt
    y = s.y + s.speed * math.sin(hd) * dt
    theta = wrap_angle(s.theta + s.speed * math.sin(s.steering)
                       / p.trailer_wheelbase * dt)
    v = s.speed + (force / p.trailer_mass - p.mu_g * sgn(s.speed)) * dt
    if force == 0.0 and s.speed != 0.0 and sgn(v) != sgn(s.speed):
        v = 0.0
    return TrailerState(x, y, theta, v, s.steering, force)


def step_slack(x: HybridState, u: ControlInput, dt: float,
               p: SystemParams) -> HybridState:
    """One slack step: zero force, steering frozen, trailer coasts."""
    return HybridState(
        step_tractor(x.tractor, u, dt),
        step_trailer(x.trailer, 0.0, dt, p),
        0,
    )


def step_taut(x: HybridState, u: ControlInput, dt: float,
              p: SystemParams) -> HybridState:
    """One taut step: the cable is held at exactly its maximum length.

    Sequence: advance the tractor; project the new tractor velocity onto the
    old cable direction to get the trailer speed (never negative - the cable
    cannot push); advance the trailer along the old cable bearing with the
    realigned steering; re-project the trailer radially so the separation is
    exactly the cable length; recover steering and force.

    Raises TautInfeasible when the resulting steering exceeds its limit or
    the tractor velocity points against the new cable direction.
    """
    tr = step_tractor(x.tractor, u, dt)
    tl = x.trailer

    dx0 = x.tractor.x - tl.x
    dy0 = x.tractor.y - tl.y
    l0 = math.hypot(dx0, dy0)
    if l0 < 1e-12:
        raise TautInfeasible("degenerate cable geometry")
    cx = dx0 / l0
    cy = dy0 / l0

    v2 = tr.vx * cx + tr.vy * cy
    if v2 < 0.0:
        v2 = 0.0

    # sin of (cable bearing - trailer heading), without forming either angle
    sin_d = (dy0 * math.cos(tl.theta) - dx0 * math.sin(tl.theta)) / l0
    xt = tl.x + v2 * cx * dt
    yt = tl.y + v2 * cy * dt
    theta2 = wrap_angle(tl.theta + v2 * sin_d / p.trailer_wheelbase * dt)

    rho = math.hypot(xt - tr.x, yt - tr.y)
    if rho < 1e-12:
        raise TautInfeasible("trailer collapsed onto tractor")
    L = p.cable_len_max
    x2 = tr.x + L * (xt - tr.x) / rho
    y2 = tr.y + L * (yt - tr.y) / rho

    angle2 = math.atan2(tr.y - y2, tr.x - x2)
    steer2 = wrap_angle(angle2 - theta2)
    if abs(steer2) > p.phi_max:
        raise TautInfeasible("steering limit exceeded")
    if math.cos(angle2) * tr.vx + math.sin(angle2) * tr.vy < 0.0:
        raise TautInfeasible("tractor velocity opposes cable")

    force2 = p.trailer_mass * ((v2 - tl.speed) / dt + p.mu_g * sgn(tl.speed))
    return HybridState(
        tr,
        TrailerState(x2, y2, theta2, v2, steer2, force2),
        1,
    )


@dataclass
class Trajectory:
    """A state sequence with the inputs and per-step modes that produced it.

    ``states`` has one more entry than ``inputs``; ``modes[k]`` is the regime
    of the step from ``states[k]`` to ``states[k+1]`` and equals
    ``states[k+1].mode``.
    """

    states: list[HybridState]
    inputs: list[ControlInput]
    modes: list[int]
    dt: float

    def __post_init__(self) -> None:
        if len(self.states) != len(self.inputs) + 1:
            raise ValueError("need exactly one more state than inputs")
        if len(self.modes) != len(self.inputs):
            raise ValueError("need one mode per input")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")

    @property
    def n_steps(self) -> int:
        return len(self.inputs)

    def times(self) -> list[float]:
        return [k * self.dt for k in range(len(self.states))]

    def mode_transitions(self) -> list[tuple[int, int, int]]:
        """(step index, mode before, mode after) for every mode change."""
        out = []
        for k in range(1, len(self.modes)):
            if self.modes[k] != self.modes[k - 1]:
                out.append((k, self.modes[k - 1], self.modes[k]))
        return out


def rollout(x0: HybridState, inputs: list[ControlInput], modes: list[int],
            dt: float, p: SystemParams) -> Trajectory:
    """Integrate a given input sequence under a given mode sequence."""
    if len(inputs) != len(modes):
        raise ValueError("inputs and modes must have equal length")
    states = [x0]
    x = x0
    for k, (u, m) in enumerate(zip(inputs, modes)):
        try:
            x = step_taut(x, u, dt, p) if m else step_slack(x, u, dt, p)
        except TautInfeasible as e:
            raise TautInfeasible(e.reason, index=k) from e
        states.append(x)
    return Trajectory(states, list(inputs), list(modes), dt)
