"""Best-first trajectory search over the hybrid towing dynamics.

Expansion applies one acceleration primitive to the tractor for a fixed
period and rolls the coupled system forward step by step.  Each inner step
is tried slack first; when the slack result would stretch the cable past
its limit, the step is redone in taut mode from the same pre-state, so
mode switches fall out of the rollout instead of being search decisions.
Nodes are deduplicated on a six-dimensional grid over both body positions,
trailer heading and cable mode.  Termination is by an analytic goal shot:
a Dubins path for the trailer, tracked by the tractor through the same
hybrid rollout, accepted only when it ends inside the goal tolerance and
passes every feasibility check.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from cabletow.geometry import (
    Bounds,
    DistanceField,
    OutOfBounds,
    Polygon,
    build_distance_field,
    dubins_shortest_path,
    min_turning_radius,
    point_in_polygon,
    point_polygon_distance,
    polygons_collide,
    system_polygons,
    BodyFootprint,
)
from cabletow.model import (
    EPS_TAUT,
    ControlInput,
    HybridState,
    SystemParams,
    TautInfeasible,
    Trajectory,
    TrailerState,
    cable_length,
    step_slack,
    step_taut,
    wrap_angle,
)

TWO_PI = 2.0 * math.pi


class NoSolution(Exception):
    """The open set emptied without reaching the goal."""


class SearchTimeout(Exception):
    """The expansion budget ran out before the goal was reached."""


@dataclass(frozen=True)
class Workspace:
    """World bounds plus static obstacle polygons."""

    bounds: Bounds
    obstacles: tuple[Polygon, ...] = ()


@dataclass(frozen=True)
class CostWeights:
    """Edge and heuristic cost weights.

    lambda_l and lambda_r weigh trailer and tractor path length, lambda_t
    weighs elapsed time, and lambda_a blends displacement against heading
    change inside each path-length term.
    """

    lambda_l: float = 1.0
    lambda_r: float = 0.5
    lambda_t: float = 0.5
    lambda_a: float = 0.7

    def __post_init__(self) -> None:
        if min(self.lambda_l, self.lambda_r, self.lambda_t, self.lambda_a) < 0:
            raise ValueError("weights must be non-negative")
        if not (0.0 <= self.lambda_a <= 1.0):
            raise ValueError("lambda_a must lie in [0, 1]")
        if self.lambda_l == self.lambda_r == self.lambda_t == 0.0:
            raise ValueError("at least one weight must be positive")


@dataclass(frozen=True)
class PlanOptions:
    mode_policy: str = "hybrid"  # or "taut_only"
    node_budget: int = 2_000_000
    goal_pos_tol: float = 0.10
    goal_heading_tol: float = 0.10
    goal_speed_tol: float = 0.05

    def __post_init__(self) -> None:
        if self.mode_policy not in ("hybrid", "taut_only"):
            raise ValueError(f"unknown mode policy {self.mode_policy!r}")
        if self.node_budget < 1:
            raise ValueError("node budget must be positive")


@dataclass
class PlanStats:
    """Counters and cost breakdown filled in by plan()."""

    pops: int = 0
    pushes: int = 0
    expansions: int = 0
    pruned_closed: int = 0
    pruned_cost: int = 0
    infeasible: int = 0
    shot_attempts: int = 0
    g_cost: float = 0.0
    trailer_path_len: float = 0.0
    tractor_path_len: float = 0.0
    duration: float = 0.0
    mode_switches: int = 0


@dataclass
class SearchNode:
    """One expansion: the states it appended and the costs so far."""

    seq: list[HybridState]
    modes: list[int]
    parent: "SearchNode | None"
    prim: ControlInput | None
    g: float = 0.0
    h: float = 0.0
    f: float = 0.0

    @property
    def terminal(self) -> HybridState:
        return self.seq[-1]


def primitive_set(p: SystemParams) -> tuple[ControlInput, ...]:
    """Acceleration primitives: the zero input plus a polar grid.

    Magnitudes step by accel_step up to accel_max; directions step by
    accel_angle_step around the full circle.  Heading control is left out:
    the tractor is omnidirectional, so its orientation is not needed to
    steer the cable.
    """
    n_mag = round(p.accel_max / p.accel_step)
    n_ang = round(TWO_PI / p.accel_angle_step)
    prims = [ControlInput(0.0, 0.0, 0.0)]
    for i in range(1, n_mag + 1):
        a = i * p.accel_step
        for j in range(1, n_ang + 1):
            th = j * p.accel_angle_step
            prims.append(ControlInput(a * math.cos(th), a * math.sin(th), 0.0))
    return tuple(prims)


def grid_key(x: HybridState, p: SystemParams) -> tuple[int, int, int, int, int, int]:
    """Duplicate-pruning cell: both positions, trailer heading, cable mode."""
    return (
        math.floor(x.tractor.x / p.grid_xy),
        math.floor(x.tractor.y / p.grid_xy),
        math.floor(x.trailer.x / p.grid_xy),
        math.floor(x.trailer.y / p.grid_xy),
        int((x.trailer.theta % TWO_PI) / p.grid_heading),
        x.mode,
    )


def _step_auto(x: HybridState, u: ControlInput, dt: float,
               p: SystemParams) -> HybridState:
    """Slack step, redone taut from the same pre-state if it would overstretch."""
    y = step_slack(x, u, dt, p)
    if cable_length(y) > p.cable_len_max:
        y = step_taut(x, u, dt, p)
    return y


def expand(node: SearchNode, prim: ControlInput, p: SystemParams,
           taut_only: bool = False) -> SearchNode:
    """Roll one primitive through a full expansion period.

    Raises TautInfeasible when any inner step cannot keep the cable
    constraints; the caller prunes that branch.
    """
    x = node.terminal
    seq: list[HybridState] = []
    modes: list[int] = []
    for _ in range(p.steps_per_expansion):
        if taut_only:
            x = step_taut(x, prim, p.dt, p)
        else:
            x = _step_auto(x, prim, p.dt, p)
        seq.append(x)
        modes.append(x.mode)
    return SearchNode(seq, modes, node, prim)


def _path_term(prev: HybridState, cur: HybridState, trailer: bool,
               lam_a: float) -> float:
    if trailer:
        dth = abs(wrap_angle(cur.trailer.theta - prev.trailer.theta))
        dxy = math.hypot(cur.trailer.x - prev.trailer.x,
                         cur.trailer.y - prev.trailer.y)
    else:
        dth = abs(wrap_angle(cur.tractor.theta - prev.tractor.theta))
        dxy = math.hypot(cur.tractor.x - prev.tractor.x,
                         cur.tractor.y - prev.tractor.y)
    return (1.0 - lam_a) * dth + lam_a * dxy


def edge_cost(node: SearchNode, w: CostWeights, dt: float) -> float:
    """Weighted path lengths over the node's appended steps plus time."""
    prev = node.parent.terminal if node.parent is not None else node.seq[0]
    l_l = 0.0
    l_r = 0.0
    for cur in node.seq if node.parent is not None else node.seq[1:]:
        l_l += _path_term(prev, cur, True, w.lambda_a)
        l_r += _path_term(prev, cur, False, w.lambda_a)
        prev = cur
    n_steps = len(node.modes)
    return w.lambda_l * l_l + w.lambda_r * l_r + w.lambda_t * n_steps * dt


def heuristic(x: HybridState, goal: TrailerState, df: DistanceField,
              p: SystemParams, w: CostWeights) -> float:
    """Trailer cost-to-go: max of grid distance and Dubins length.

    The grid lookup is offset by the field's value at the goal position so
    the heuristic vanishes exactly at the goal; both arms are scaled to
    match the displacement part of the trailer path-length cost.
    """
    h_a = df.value_at(x.trailer.x, x.trailer.y) - df.value_at(*df.goal)
    if h_a < 0.0:
        h_a = 0.0
    h_d = dubins_shortest_path(
        (x.trailer.x, x.trailer.y, x.trailer.theta),
        (goal.x, goal.y, goal.theta), min_turning_radius(p)).length
    return w.lambda_l * w.lambda_a * max(h_a, h_d)


# ---------------------------------------------------------------------------
# feasibility


class WorldGeometry:
    """Precomputed obstacle arrays for fast per-state collision checks.

    Equivalent in verdict to checking system_polygons against every
    obstacle with the reference geometry routines, minus the cable 2-gon's
    duplicate reversed edge.
    """

    def __init__(self, world: Workspace, fp: BodyFootprint, p: SystemParams):
        self.world = world
        self.fp = fp
        self._tr_local = np.array(fp.tractor.vertices)
        self._tl_local = np.array(fp.trailer.vertices)
        self._r_body = max(
            float(np.max(np.hypot(self._tr_local[:, 0], self._tr_local[:, 1]))),
            float(np.max(np.hypot(self._tl_local[:, 0], self._tl_local[:, 1]))),
        )
        self._obs = []
        for poly in world.obstacles:
            v = np.array(poly.vertices)
            e1 = v
            e2 = np.roll(v, -1, axis=0)
            bbox = (float(v[:, 0].min()), float(v[:, 1].min()),
                    float(v[:, 0].max()), float(v[:, 1].max()))
            self._obs.append((poly, e1, e2, bbox))

    def state_clear(self, x: HybridState) -> bool:
        """True when no system polygon touches any obstacle."""
        if not self._obs:
            return True
        xr, yr = x.tractor.x, x.tractor.y
        xl, yl = x.trailer.x, x.trailer.y
        cx, cy = 0.5 * (xr + xl), 0.5 * (yr + yl)
        radius = 0.5 * math.hypot(xr - xl, yr - yl) + self._r_body

        cr, sr = math.cos(x.tractor.theta), math.sin(x.tractor.theta)
        cl, sl = math.cos(x.trailer.theta), math.sin(x.trailer.theta)
        tr = np.empty((4, 2))
        tr[:, 0] = xr + cr * self._tr_local[:, 0] - sr * self._tr_local[:, 1]
        tr[:, 1] = yr + sr * self._tr_local[:, 0] + cr * self._tr_local[:, 1]
        tl = np.empty((4, 2))
        tl[:, 0] = xl + cl * self._tl_local[:, 0] - sl * self._tl_local[:, 1]
        tl[:, 1] = yl + sl * self._tl_local[:, 0] + cl * self._tl_local[:, 1]

        p1 = np.vstack([tr, tl, [[xr, yr]]])
        p2 = np.vstack([np.roll(tr, -1, axis=0), np.roll(tl, -1, axis=0),
                        [[xl, yl]]])
        a = p1 - p2          # (9, 2)
        psum = p1 + p2

        for poly, e1, e2, bbox in self._obs:
            if (cx + radius < bbox[0] or cx - radius > bbox[2]
                    or cy + radius < bbox[1] or cy - radius > bbox[3]):
                continue
            b = e1 - e2      # (E, 2)
            det = b[:, None, 1] * a[None, :, 0] - b[:, None, 0] * a[None, :, 1]
            ok = np.abs(det) >= 1e-12
            r = (e1 + e2)[:, None, :] - psum[None, :, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                ts = 0.5 + 0.5 * (b[:, None, 1] * r[:, :, 0]
                                  - b[:, None, 0] * r[:, :, 1]) / det
                to = 0.5 + 0.5 * (a[None, :, 1] * r[:, :, 0]
                                  - a[None, :, 0] * r[:, :, 1]) / det
            hit = ok & (ts >= 0.0) & (ts <= 1.0) & (to >= 0.0) & (to <= 1.0)
            if bool(hit.any()):
                return False
            # no edge crossing: containment can still hide one body in the
            # other, so test one representative point each way
            if point_in_polygon((xr, yr), poly) or point_in_polygon((xl, yl), poly):
                return False
            v0 = (float(e1[0, 0]), float(e1[0, 1]))
            if _point_in_rect(v0, tr) or _point_in_rect(v0, tl):
                return False
        return True


def _point_in_rect(pt: tuple[float, float], quad: np.ndarray) -> bool:
    """Point inside a convex quad given as a 4x2 CCW vertex array."""
    x, y = pt
    for i in range(4):
        x1, y1 = quad[i]
        x2, y2 = quad[(i + 1) % 4]
        if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) < 0.0:
            return False
    return True


def state_clear_reference(x: HybridState, world: Workspace, fp: BodyFootprint,
                          p: SystemParams) -> bool:
    """Reference collision predicate used by tests to audit WorldGeometry."""
    polys = system_polygons(x, fp, p)
    for sp in polys:
        for obs in world.obstacles:
            if polygons_collide(sp, obs):
                return False
    for obs in world.obstacles:
        if point_in_polygon((x.tractor.x, x.tractor.y), obs):
            return False
        if point_in_polygon((x.trailer.x, x.trailer.y), obs):
            return False
        for sp in polys[:2]:
            if point_in_polygon(obs.vertices[0], sp):
                return False
    return True


def state_feasible(x: HybridState, world: Workspace, fp: BodyFootprint,
                   p: SystemParams, geom: WorldGeometry | None = None) -> bool:
    """All per-state checks: cable bounds, state bounds, workspace, collision."""
    l_c = cable_length(x)
    if l_c < p.cable_len_min or l_c > p.cable_len_max + EPS_TAUT:
        return False
    if x.tractor.speed > p.speed_max + 1e-9:
        return False
    if abs(x.tractor.omega) > p.ang_speed_max + 1e-9:
        return False
    if not (-1e-12 <= x.trailer.speed <= p.speed_max + 1e-9):
        return False
    if abs(x.trailer.steering) > p.phi_max + 1e-9:
        return False
    if not world.bounds.contains(x.tractor.x, x.tractor.y):
        return False
    if not world.bounds.contains(x.trailer.x, x.trailer.y):
        return False
    if polygons_collide(
            fp.tractor.transformed(x.tractor.x, x.tractor.y, x.tractor.theta),
            fp.trailer.transformed(x.trailer.x, x.trailer.y, x.trailer.theta)):
        return False
    if geom is not None:
        return geom.state_clear(x)
    return state_clear_reference(x, world, fp, p)


def _transition_ok(prev: HybridState, cur: HybridState, mode: int,
                   p: SystemParams) -> bool:
    """Trailer acceleration bound over one step.

    Slack steps are friction-only and always inside the bound.  Taut steps
    limit the speed change to [-mu*g, a_max] per unit time, except right
    after a slack phase where the cable snaps taut and only the sign of the
    jerk is constrained.
    """
    if mode != 1:
        return True
    accel = (cur.trailer.speed - prev.trailer.speed) / p.dt
    if prev.mode == 0:
        return accel >= -1e-9
    return -p.mu_g - 1e-9 <= accel <= p.accel_max + 1e-9


def segment_feasible(prev: HybridState, states: list[HybridState],
                     modes: list[int], world: Workspace, fp: BodyFootprint,
                     p: SystemParams,
                     geom: WorldGeometry | None = None) -> bool:
    """Feasibility of a run of new states appended after an accepted state."""
    for cur, mode in zip(states, modes):
        if not _transition_ok(prev, cur, mode, p):
            return False
        if not state_feasible(cur, world, fp, p, geom):
            return False
        prev = cur
    return True


def feasible(node: SearchNode, world: Workspace, fp: BodyFootprint,
             p: SystemParams, geom: WorldGeometry | None = None) -> bool:
    if node.parent is None:
        return state_feasible(node.seq[0], world, fp, p, geom)
    return segment_feasible(node.parent.terminal, node.seq, node.modes,
                            world, fp, p, geom)


# ---------------------------------------------------------------------------
# goal shot


def _within_goal(x: HybridState, goal: TrailerState, o: PlanOptions) -> bool:
    return (math.hypot(x.trailer.x - goal.x, x.trailer.y - goal.y) <= o.goal_pos_tol
            and abs(wrap_angle(x.trailer.theta - goal.theta)) <= o.goal_heading_tol
            and abs(x.trailer.speed) <= o.goal_speed_tol
            and x.tractor.speed <= o.goal_speed_tol)


def _stop_distance(v: float, mu_g_dt: float, dt: float) -> float:
    """Distance covered by a maximal friction-deceleration cascade from v."""
    d = 0.0
    while v > 0.0:
        d += v * dt
        v -= mu_g_dt
    return d


def _speed_profile(v0: float, path_len: float, p: SystemParams) -> list[float] | None:
    """Per-state speeds covering exactly path_len on the dt lattice.

    Speeds rise by at most accel_max*dt and fall by at most mu*g*dt per
    step (a towed trailer cannot brake harder than friction), hold the
    speed cap, and end at zero having advanced exactly path_len with each
    step moving at the step's starting speed.  One off-lattice speed is
    spliced into the final deceleration run to absorb the distance
    remainder.  Returns None when v0 cannot be stopped within path_len.
    """
    dt = p.dt
    mgd = p.mu_g * dt
    if _stop_distance(v0, mgd, dt) > path_len + 1e-12:
        return None

    speeds = [v0]
    s = 0.0
    w = v0
    while True:
        w_acc = min(w + p.accel_max * dt, p.speed_max)
        if s + w * dt + _stop_distance(w_acc, mgd, dt) <= path_len + 1e-12:
            s += w * dt
            w = w_acc
            speeds.append(w)
            continue
        if w > 0.0 and s + w * dt + _stop_distance(w, mgd, dt) <= path_len + 1e-12:
            s += w * dt
            speeds.append(w)
            continue
        break

    remaining = path_len - s
    if w > 0.0:
        extra = (remaining - _stop_distance(w, mgd, dt)) / dt
        tail = []
        v = w - mgd
        while v > 0.0:
            tail.append(v)
            v -= mgd
        if extra > 1e-15:
            tail.append(extra)
            tail.sort(reverse=True)
        speeds.extend(tail)
    elif remaining > 1e-15:
        # from rest: a single short surge whose own cascade lands exactly
        k = 1
        while dt * mgd * k * (k + 1) / 2.0 < remaining:
            k += 1
        w_star = (remaining / dt + mgd * k * (k - 1) / 2.0) / k
        if w_star > min(p.accel_max * dt, p.speed_max) + 1e-12:
            return None
        v = w_star
        while v > 0.0:
            speeds.append(v)
            v -= mgd
    speeds.append(0.0)
    return speeds


def reach_goal(x: HybridState, goal: TrailerState, world: Workspace,
               fp: BodyFootprint, p: SystemParams,
               options: PlanOptions | None = None,
               geom: WorldGeometry | None = None) -> Trajectory | None:
    """Analytic goal connection: Dubins reference tracked through the model.

    The trailer reference runs along the shortest Dubins path under a
    stop-at-goal speed profile; the tractor chases the path point one cable
    length ahead of the reference.  The whole shot is integrated with the
    ordinary hybrid stepping rule, then accepted only if it lands inside
    the goal tolerance and every state passes the feasibility checks.
    """
    o = options or PlanOptions()
    if _within_goal(x, goal, o):
        return Trajectory([x], [], [], p.dt)

    start_pose = (x.trailer.x, x.trailer.y, x.trailer.theta)
    goal_pose = (goal.x, goal.y, goal.theta)
    path = dubins_shortest_path(start_pose, goal_pose, min_turning_radius(p))
    speeds = _speed_profile(x.trailer.speed, path.length, p)
    if speeds is None:
        return None

    # dense polyline for chord lookups, extended straight past the goal
    ds = 0.02
    ext = p.cable_len_max + 0.5
    arcs = [i * ds for i in range(int(path.length / ds) + 1)] + [path.length]
    pts = [path.pose_at(s)[:2] for s in arcs]
    ge = path.pose_at(path.length)
    n_ext = int(ext / ds) + 1
    pts += [(ge[0] + (i + 1) * ds * math.cos(ge[2]),
             ge[1] + (i + 1) * ds * math.sin(ge[2])) for i in range(n_ext)]
    L = p.cable_len_max

    def chord_target(ref: tuple[float, float], lo: int) -> tuple[tuple[float, float], int]:
        """Continuous point one cable length ahead of ref along the polyline."""
        i = max(lo, 1)
        while i < len(pts) - 1 and math.hypot(pts[i][0] - ref[0],
                                              pts[i][1] - ref[1]) < L:
            i += 1
        d0 = math.hypot(pts[i - 1][0] - ref[0], pts[i - 1][1] - ref[1])
        d1 = math.hypot(pts[i][0] - ref[0], pts[i][1] - ref[1])
        f = 0.0 if d1 <= d0 else min(1.0, max(0.0, (L - d0) / (d1 - d0)))
        return ((pts[i - 1][0] + f * (pts[i][0] - pts[i - 1][0]),
                 pts[i - 1][1] + f * (pts[i][1] - pts[i - 1][1])), i)

    n_settle = 3
    states = [x]
    inputs: list[ControlInput] = []
    modes: list[int] = []
    cur = x
    ptr = 1
    s = 0.0
    for j in range(len(speeds) - 1 + n_settle):
        if j < len(speeds) - 1:
            s_next = s + speeds[j] * p.dt
            ref = path.pose_at(min(s_next, path.length))[:2]
            target, ptr = chord_target(ref, ptr)
            v_des = ((target[0] - cur.tractor.x) / p.dt,
                     (target[1] - cur.tractor.y) / p.dt)
            v_mag = math.hypot(*v_des)
            if v_mag > p.speed_max:
                v_des = (v_des[0] * p.speed_max / v_mag,
                         v_des[1] * p.speed_max / v_mag)
            s = s_next
        else:
            v_des = (0.0, 0.0)
        ax = (v_des[0] - cur.tractor.vx) / p.dt
        ay = (v_des[1] - cur.tractor.vy) / p.dt
        mag = math.hypot(ax, ay)
        if mag > p.accel_max:
            ax *= p.accel_max / mag
            ay *= p.accel_max / mag
        u = ControlInput(ax, ay, 0.0)
        try:
            cur = _step_auto(cur, u, p.dt, p)
        except TautInfeasible:
            return None
        states.append(cur)
        inputs.append(u)
        modes.append(cur.mode)

    if not _within_goal(states[-1], goal, o):
        return None
    if not segment_feasible(x, states[1:], modes, world, fp, p, geom):
        return None
    return Trajectory(states, inputs, modes, p.dt)


# ---------------------------------------------------------------------------
# main loop


def _chain_nodes(node: SearchNode) -> list[SearchNode]:
    chain = []
    while node is not None:
        chain.append(node)
        node = node.parent
    chain.reverse()
    return chain


def _assemble(goal_node: SearchNode, shot: Trajectory, p: SystemParams,
              w: CostWeights, stats: PlanStats | None) -> Trajectory:
    states = [_chain_nodes(goal_node)[0].seq[0]]
    inputs: list[ControlInput] = []
    modes: list[int] = []
    for node in _chain_nodes(goal_node):
        if node.parent is None:
            continue
        states.extend(node.seq)
        inputs.extend([node.prim] * len(node.modes))
        modes.extend(node.modes)
    states.extend(shot.states[1:])
    inputs.extend(shot.inputs)
    modes.extend(shot.modes)
    traj = Trajectory(states, inputs, modes, p.dt)
    if stats is not None:
        l_l = sum(_path_term(a, b, True, w.lambda_a)
                  for a, b in zip(states, states[1:]))
        l_r = sum(_path_term(a, b, False, w.lambda_a)
                  for a, b in zip(states, states[1:]))
        stats.trailer_path_len = sum(
            math.hypot(b.trailer.x - a.trailer.x, b.trailer.y - a.trailer.y)
            for a, b in zip(states, states[1:]))
        stats.tractor_path_len = sum(
            math.hypot(b.tractor.x - a.tractor.x, b.tractor.y - a.tractor.y)
            for a, b in zip(states, states[1:]))
        stats.duration = len(modes) * p.dt
        stats.g_cost = (w.lambda_l * l_l + w.lambda_r * l_r
                        + w.lambda_t * stats.duration)
        stats.mode_switches = sum(1 for a, b in zip(modes, modes[1:]) if a != b)
    return traj


def plan(start: HybridState, goal: TrailerState, world: Workspace,
         fp: BodyFootprint, p: SystemParams,
         w: CostWeights | None = None,
         options: PlanOptions | None = None,
         stats: PlanStats | None = None) -> Trajectory:
    """Search from start until a goal shot lands; see the module docstring.

    Raises NoSolution when every reachable grid cell has been expanded and
    SearchTimeout when the node budget runs out first.
    """
    w = w or CostWeights()
    options = options or PlanOptions()
    geom = WorldGeometry(world, fp, p)
    if not state_feasible(start, world, fp, p, geom):
        raise ValueError("start state is infeasible")

    df = build_distance_field(
        list(world.obstacles), world.bounds, (goal.x, goal.y), p.grid_xy,
        inflation=fp.trailer_clearance_radius())
    prims = primitive_set(p)
    taut_only = options.mode_policy == "taut_only"

    root = SearchNode([start], [], None, None)
    root.h = heuristic(start, goal, df, p, w)
    root.f = root.h
    counter = itertools.count()
    open_heap: list[tuple[float, float, int, SearchNode]] = [
        (root.f, root.h, next(counter), root)]
    best_g = {grid_key(start, p): 0.0}
    closed: set[tuple] = set()
    pops = 0

    while open_heap:
        _, _, _, node = heapq.heappop(open_heap)
        key = grid_key(node.terminal, p)
        if key in closed:
            continue
        closed.add(key)

        if stats is not None:
            stats.shot_attempts += 1
        shot = reach_goal(node.terminal, goal, world, fp, p, options, geom)
        if shot is not None:
            return _assemble(node, shot, p, w, stats)

        pops += 1
        if stats is not None:
            stats.pops = pops
        if pops > options.node_budget:
            raise SearchTimeout(f"node budget {options.node_budget} exhausted")

        for prim in prims:
            try:
                child = expand(node, prim, p, taut_only=taut_only)
            except TautInfeasible:
                continue
            if stats is not None:
                stats.expansions += 1
            ckey = grid_key(child.terminal, p)
            if ckey in closed:
                if stats is not None:
                    stats.pruned_closed += 1
                continue
            child_g = node.g + edge_cost(child, w, p.dt)
            if best_g.get(ckey, math.inf) <= child_g:
                if stats is not None:
                    stats.pruned_cost += 1
                continue
            if not feasible(child, world, fp, p, geom):
                if stats is not None:
                    stats.infeasible += 1
                continue
            try:
                child_h = heuristic(child.terminal, goal, df, p, w)
            except OutOfBounds:
                continue
            child.g = child_g
            child.h = child_h
            child.f = child_g + child_h
            best_g[ckey] = child_g
            heapq.heappush(open_heap, (child.f, child.h, next(counter), child))
            if stats is not None:
                stats.pushes += 1

    raise NoSolution("open set exhausted without reaching the goal")
