"""Polygon geometry, edge-intersection collision tests, Dubins curves and
the goal distance field.

Collision between convex or non-convex polygons is decided edge-by-edge: two
bodies collide when some edge of one crosses some edge of the other.  The
crossing test is written in a parametric form that stays smooth in the pose
variables, which is what the trajectory optimizer differentiates through.
Full containment produces no edge crossing, so a point-in-polygon parity
check backs up the edge test wherever whole-body swallowing is possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from cabletow.model import HybridState, SystemParams, wrap_angle

PARALLEL_EPS = 1e-12
PARALLEL_SENTINEL = 1e6


class DegenerateEdge(Exception):
    """An edge with (numerically) coincident endpoints."""


class GoalBlocked(Exception):
    """The goal cell of a distance field is occupied."""


class OutOfBounds(Exception):
    """A query point lies outside the field's bounding rectangle."""


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned workspace rectangle."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self) -> None:
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("empty bounds rectangle")

    def contains(self, x: float, y: float) -> bool:
        return self.xmin <= x <= self.xmax and self.ymin <= y <= self.ymax

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin


@dataclass(frozen=True)
class Polygon:
    """Closed polygon as an ordered vertex tuple; 2 vertices make a segment."""

    vertices: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        if len(self.vertices) < 2:
            raise ValueError("polygon needs at least 2 vertices")
        object.__setattr__(self, "vertices",
                           tuple((float(x), float(y)) for x, y in self.vertices))
        for (x, y) in self.vertices:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError("non-finite vertex coordinate")
        n = len(self.vertices)
        for i in range(n):
            a = self.vertices[i]
            b = self.vertices[(i + 1) % n]
            if a == b:
                raise ValueError("repeated consecutive vertices")

    def edges(self) -> list[tuple[tuple[float, float], tuple[float, float]]]:
        """Edge list under the uniform wrap-around rule; a segment yields the
        same chord twice (once per direction)."""
        n = len(self.vertices)
        return [(self.vertices[i], self.vertices[(i + 1) % n]) for i in range(n)]

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(tuple((x + dx, y + dy) for x, y in self.vertices))

    def transformed(self, x: float, y: float, theta: float) -> "Polygon":
        """Rigid-body pose applied to local-frame vertices."""
        c, s = math.cos(theta), math.sin(theta)
        return Polygon(tuple((x + c * px - s * py, y + s * px + c * py)
                             for px, py in self.vertices))


def rectangle(xmin: float, ymin: float, xmax: float, ymax: float) -> Polygon:
    """Axis-aligned rectangle, counter-clockwise."""
    return Polygon(((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)))


@dataclass(frozen=True)
class EdgePair:
    """One system edge against one obstacle edge."""

    p1s: tuple[float, float]
    p2s: tuple[float, float]
    p1o: tuple[float, float]
    p2o: tuple[float, float]


@dataclass(frozen=True)
class IntersectionParams:
    """Convex-combination parameters of the infinite-line crossing point.

    The point on each line is theta*P1 + (1-theta)*P2; both parameters are
    +inf for (near-)parallel lines.
    """

    theta_s: float
    theta_o: float

    @property
    def parallel(self) -> bool:
        return math.isinf(self.theta_s)


def intersection_params(e: EdgePair) -> IntersectionParams:
    """Solve for the crossing point of the two carrier lines.

    Writing the point as theta_s*P1s + (1-theta_s)*P2s = theta_o*P1o +
    (1-theta_o)*P2o gives a 2x2 linear system in the two parameters.
    """
    ax = e.p1s[0] - e.p2s[0]
    ay = e.p1s[1] - e.p2s[1]
    bx = e.p1o[0] - e.p2o[0]
    by = e.p1o[1] - e.p2o[1]
    if math.hypot(ax, ay) < PARALLEL_EPS or math.hypot(bx, by) < PARALLEL_EPS:
        raise DegenerateEdge("zero-length edge")
    det = by * ax - bx * ay
    if abs(det) < PARALLEL_EPS:
        return IntersectionParams(math.inf, math.inf)
    rx = e.p1o[0] + e.p2o[0] - e.p1s[0] - e.p2s[0]
    ry = e.p1o[1] + e.p2o[1] - e.p1s[1] - e.p2s[1]
    # Cramer's rule on  [ax -bx; ay -by] [ts-0.5, to-0.5]' = 0.5*[rx, ry]'
    ts = 0.5 + 0.5 * (by * rx - bx * ry) / det
    to = 0.5 + 0.5 * (ay * rx - ax * ry) / det
    return IntersectionParams(ts, to)


def collision_residual(e: EdgePair) -> float:
    """Smooth circular clearance residual; >= 0 certifies no crossing.

    The crossing point lies inside both segments exactly when both
    parameters are in (0, 1), i.e. inside the unit box centered at
    (0.5, 0.5).  Keeping (ts-0.5)^2 + (to-0.5)^2 >= 0.5 excludes that box
    through its circumscribed circle, a conservative and smooth substitute
    for the box itself.
    """
    ip = intersection_params(e)
    if ip.parallel:
        return PARALLEL_SENTINEL
    return (ip.theta_s - 0.5) ** 2 + (ip.theta_o - 0.5) ** 2 - 0.5


def collision_residual_inf(e: EdgePair) -> float:
    """Box-norm clearance residual; tight but non-smooth at corners."""
    ip = intersection_params(e)
    if ip.parallel:
        return PARALLEL_SENTINEL
    return max(abs(ip.theta_s - 0.5), abs(ip.theta_o - 0.5)) - 0.5


def segments_intersect(e: EdgePair) -> bool:
    """Classical orientation-based proper-crossing test (reference oracle)."""

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1 = orient(e.p1o, e.p2o, e.p1s)
    d2 = orient(e.p1o, e.p2o, e.p2s)
    d3 = orient(e.p1s, e.p2s, e.p1o)
    d4 = orient(e.p1s, e.p2s, e.p2o)
    return d1 * d2 < 0 and d3 * d4 < 0


def polygons_collide(a: Polygon, b: Polygon) -> bool:
    """True when some edge of a crosses some edge of b (parameters in [0,1])."""
    for p1s, p2s in a.edges():
        for p1o, p2o in b.edges():
            try:
                ip = intersection_params(EdgePair(p1s, p2s, p1o, p2o))
            except DegenerateEdge:
                continue
            if ip.parallel:
                continue
            if 0.0 <= ip.theta_s <= 1.0 and 0.0 <= ip.theta_o <= 1.0:
                return True
    return False


def point_in_polygon(pt: tuple[float, float], poly: Polygon) -> bool:
    """Ray-crossing parity test; boundary points count as inside."""
    x, y = pt
    verts = poly.vertices
    n = len(verts)
    if n < 3:
        return False
    inside = False
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        # boundary check: point on the closed segment
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        if abs(cross) < 1e-12:
            if min(x1, x2) - 1e-12 <= x <= max(x1, x2) + 1e-12 and \
               min(y1, y2) - 1e-12 <= y <= max(y1, y2) + 1e-12:
                return True
        if (y1 > y) != (y2 > y):
            x_at = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_at:
                inside = not inside
    return inside


def point_segment_distance(pt: tuple[float, float], a: tuple[float, float],
                           b: tuple[float, float]) -> float:
    px, py = pt
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    d2 = dx * dx + dy * dy
    if d2 == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / d2
    t = min(1.0, max(0.0, t))
    return math.hypot(px - ax - t * dx, py - ay - t * dy)


def point_polygon_distance(pt: tuple[float, float], poly: Polygon) -> float:
    """Distance to the polygon region: 0 inside, boundary distance outside."""
    if len(poly.vertices) >= 3 and point_in_polygon(pt, poly):
        return 0.0
    return min(point_segment_distance(pt, a, b) for a, b in poly.edges())


# ---------------------------------------------------------------------------
# body footprints


@dataclass(frozen=True)
class BodyFootprint:
    """Local-frame body polygons with cable anchor offsets.

    Both anchors default to the local origin: the cable attaches at the
    tractor's center and at the trailer's front axle, so the cable segment in
    world frame simply joins the two pose points.
    """

    tractor: Polygon = field(default_factory=lambda: rectangle(-0.30, -0.15, 0.30, 0.15))
    trailer: Polygon = field(default_factory=lambda: rectangle(-0.50, -0.20, 0.05, 0.20))
    tractor_anchor: tuple[float, float] = (0.0, 0.0)
    trailer_anchor: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        for anchor, poly, name in ((self.tractor_anchor, self.tractor, "tractor"),
                                   (self.trailer_anchor, self.trailer, "trailer")):
            if len(poly.vertices) >= 3 and not point_in_polygon(anchor, poly):
                raise ValueError(f"{name} anchor outside its footprint")

    def trailer_clearance_radius(self) -> float:
        """Largest disk about the trailer anchor inside the trailer polygon."""
        ax, ay = self.trailer_anchor
        return min(point_segment_distance((ax, ay), a, b)
                   for a, b in self.trailer.edges())


def system_polygons(x: HybridState, fp: BodyFootprint,
                    p: SystemParams) -> list[Polygon]:
    """World-frame collision polygons: tractor body, trailer body, cable chord.

    The cable is checked as the straight segment between the two anchors in
    both modes; for a slack cable this is conservative.
    """
    tr = fp.tractor.transformed(x.tractor.x, x.tractor.y, x.tractor.theta)
    tl = fp.trailer.transformed(x.trailer.x, x.trailer.y, x.trailer.theta)
    ct, st = math.cos(x.tractor.theta), math.sin(x.tractor.theta)
    ax_r = x.tractor.x + ct * fp.tractor_anchor[0] - st * fp.tractor_anchor[1]
    ay_r = x.tractor.y + st * fp.tractor_anchor[0] + ct * fp.tractor_anchor[1]
    cl, sl = math.cos(x.trailer.theta), math.sin(x.trailer.theta)
    ax_l = x.trailer.x + cl * fp.trailer_anchor[0] - sl * fp.trailer_anchor[1]
    ay_l = x.trailer.y + sl * fp.trailer_anchor[0] + cl * fp.trailer_anchor[1]
    cable = Polygon(((ax_r, ay_r), (ax_l, ay_l)))
    return [tr, tl, cable]


# ---------------------------------------------------------------------------
# Dubins curves
#
# Only the three R-leading word classes are solved directly; the L-leading
# ones follow from the mirror symmetry (alpha, beta) -> (-alpha, -beta) with
# all turn directions flipped.


def _mod2pi(a: float) -> float:
    a = a % (2.0 * math.pi)
    return a + 2.0 * math.pi if a < 0.0 else a


def _rsr(alpha: float, beta: float, d: float):
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    psq = 2.0 + d * d - 2.0 * math.cos(alpha - beta) + 2.0 * d * (sb - sa)
    if psq < 0.0:
        return None
    theta = math.atan2(ca - cb, d - sa + sb)
    t = _mod2pi(alpha - theta)
    q = _mod2pi(theta - beta)
    return t, math.sqrt(psq), q


def _rsl(alpha: float, beta: float, d: float):
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    psq = d * d - 2.0 + 2.0 * math.cos(alpha - beta) - 2.0 * d * (sa + sb)
    if psq < 0.0:
        return None
    p = math.sqrt(psq)
    theta = math.atan2(ca + cb, d - sa - sb) - math.atan2(2.0, p)
    t = _mod2pi(alpha - theta)
    q = _mod2pi(beta - theta)
    return t, p, q


def _rlr(alpha: float, beta: float, d: float):
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    tmp = (6.0 - d * d + 2.0 * math.cos(alpha - beta) + 2.0 * d * (sa - sb)) / 8.0
    if abs(tmp) > 1.0:
        return None
    p = _mod2pi(2.0 * math.pi - math.acos(tmp))
    t = _mod2pi(alpha - math.atan2(ca - cb, d - sa + sb) + p / 2.0)
    q = _mod2pi(alpha - beta - t + p)
    return t, p, q


_WORDS = (
    ("RSR", _rsr, False),
    ("RSL", _rsl, False),
    ("RLR", _rlr, False),
    ("LSL", _rsr, True),
    ("LSR", _rsl, True),
    ("LRL", _rlr, True),
)


@dataclass(frozen=True)
class DubinsPath:
    """A solved Dubins connection: word, start pose, per-segment lengths [m]."""

    word: str
    start: tuple[float, float, float]
    seg_lengths: tuple[float, float, float]
    radius: float

    @property
    def length(self) -> float:
        return sum(self.seg_lengths)

    def pose_at(self, s: float) -> tuple[float, float, float]:
        """Pose after arc length s from the start (s clamped to [0, length])."""
        s = min(max(s, 0.0), self.length)
        x, y, th = self.start
        for kind, seg in zip(self.word, self.seg_lengths):
            take = min(s, seg)
            x, y, th = _advance(x, y, th, kind, take, self.radius)
            s -= take
            if s <= 0.0:
                break
        return x, y, wrap_angle(th)

    def sample(self, ds: float) -> list[tuple[float, float, float]]:
        """Poses every ds meters plus the exact endpoint."""
        if ds <= 0.0:
            raise ValueError("ds must be positive")
        out = []
        s = 0.0
        while s < self.length:
            out.append(self.pose_at(s))
            s += ds
        out.append(self.pose_at(self.length))
        return out


def _advance(x: float, y: float, th: float, kind: str, s: float,
             r: float) -> tuple[float, float, float]:
    if s == 0.0:
        return x, y, th
    if kind == "S":
        return x + s * math.cos(th), y + s * math.sin(th), th
    phi = s / r
    if kind == "L":
        return (x - r * math.sin(th) + r * math.sin(th + phi),
                y + r * math.cos(th) - r * math.cos(th + phi),
                th + phi)
    return (x + r * math.sin(th) - r * math.sin(th - phi),
            y - r * math.cos(th) + r * math.cos(th - phi),
            th - phi)


def dubins_shortest_path(start: tuple[float, float, float],
                         goal: tuple[float, float, float],
                         r_min: float) -> DubinsPath:
    """Shortest path among all six word classes."""
    if r_min <= 0.0:
        raise ValueError("r_min must be positive")
    dx = goal[0] - start[0]
    dy = goal[1] - start[1]
    d = math.hypot(dx, dy) / r_min
    phi = math.atan2(dy, dx) if (dx != 0.0 or dy != 0.0) else 0.0
    alpha = _mod2pi(start[2] - phi)
    beta = _mod2pi(goal[2] - phi)

    best = None
    for word, solver, mirrored in _WORDS:
        res = solver(-alpha, -beta, d) if mirrored else solver(alpha, beta, d)
        if res is None:
            continue
        total = sum(res)
        if best is None or total < best[1]:
            best = (word, total, res)
    if best is None:
        raise RuntimeError("no Dubins word feasible (cannot happen for d >= 0)")
    word, _, (t, p, q) = best
    return DubinsPath(word, start, (t * r_min, p * r_min, q * r_min), r_min)


def dubins_length(start: tuple[float, float, float],
                  goal: tuple[float, float, float], r_min: float) -> float:
    return dubins_shortest_path(start, goal, r_min).length


def dubins_interpolate(start: tuple[float, float, float],
                       goal: tuple[float, float, float],
                       r_min: float, ds: float) -> list[tuple[float, float, float]]:
    return dubins_shortest_path(start, goal, r_min).sample(ds)


def min_turning_radius(p: SystemParams) -> float:
    """Kinematic turning radius of the taut-towed trailer at full steering."""
    return math.hypot(p.trailer_wheelbase + p.cable_len_max * math.cos(p.phi_max),
                      p.cable_len_max * math.sin(p.phi_max))


# ---------------------------------------------------------------------------
# goal distance field


@dataclass
class DistanceField:
    """Grid of shortest obstacle-avoiding path lengths to a goal point.

    Built once per scenario and shared read-only.  Lookup interpolates
    bilinearly between cell centers, dropping occupied (infinite) corners
    and renormalizing the remaining weights.
    """

    bounds: Bounds
    resolution: float
    goal: tuple[float, float]
    nx: int
    ny: int
    cost: list[float]  # row-major [iy * nx + ix], math.inf for occupied
    occupied: list[bool]

    def _center(self, ix: int, iy: int) -> tuple[float, float]:
        return (self.bounds.xmin + (ix + 0.5) * self.resolution,
                self.bounds.ymin + (iy + 0.5) * self.resolution)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        ix = int((x - self.bounds.xmin) / self.resolution)
        iy = int((y - self.bounds.ymin) / self.resolution)
        return (min(max(ix, 0), self.nx - 1), min(max(iy, 0), self.ny - 1))

    def value_at(self, x: float, y: float) -> float:
        """Interpolated cost-to-go; inf when all surrounding cells are blocked."""
        if not self.bounds.contains(x, y):
            raise OutOfBounds(f"({x:.3f}, {y:.3f}) outside field bounds")
        u = (x - self.bounds.xmin) / self.resolution - 0.5
        v = (y - self.bounds.ymin) / self.resolution - 0.5
        i0 = min(max(int(math.floor(u)), 0), max(self.nx - 2, 0))
        j0 = min(max(int(math.floor(v)), 0), max(self.ny - 2, 0))
        fu = min(max(u - i0, 0.0), 1.0)
        fv = min(max(v - j0, 0.0), 1.0)
        i1 = min(i0 + 1, self.nx - 1)
        j1 = min(j0 + 1, self.ny - 1)
        corners = (
            (self.cost[j0 * self.nx + i0], (1 - fu) * (1 - fv)),
            (self.cost[j0 * self.nx + i1], fu * (1 - fv)),
            (self.cost[j1 * self.nx + i0], (1 - fu) * fv),
            (self.cost[j1 * self.nx + i1], fu * fv),
        )
        total_w = 0.0
        acc = 0.0
        for c, w in corners:
            if math.isfinite(c) and w > 0.0:
                acc += c * w
                total_w += w
        if total_w <= 0.0:
            return math.inf
        return acc / total_w

    def to_csv(self, path: str) -> None:
        with open(path, "w") as f:
            for iy in range(self.ny - 1, -1, -1):
                row = (self.cost[iy * self.nx + ix] for ix in range(self.nx))
                f.write(",".join("inf" if math.isinf(c) else f"{c:.6f}"
                                 for c in row) + "\n")


def build_distance_field(obstacles: list[Polygon], bounds: Bounds,
                         goal: tuple[float, float], resolution: float,
                         inflation: float = 0.0) -> DistanceField:
    """8-connected Dijkstra cost-to-go from the goal over inflated free space."""
    import heapq

    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    nx = max(1, round(bounds.width / resolution))
    ny = max(1, round(bounds.height / resolution))

    occupied = [False] * (nx * ny)
    for iy in range(ny):
        cy = bounds.ymin + (iy + 0.5) * resolution
        for ix in range(nx):
            cx = bounds.xmin + (ix + 0.5) * resolution
            for obs in obstacles:
                if point_polygon_distance((cx, cy), obs) <= inflation:
                    occupied[iy * nx + ix] = True
                    break

    gx = min(max(int((goal[0] - bounds.xmin) / resolution), 0), nx - 1)
    gy = min(max(int((goal[1] - bounds.ymin) / resolution), 0), ny - 1)
    if occupied[gy * nx + gx]:
        raise GoalBlocked("goal cell is occupied after inflation")

    cost = [math.inf] * (nx * ny)
    cost[gy * nx + gx] = 0.0
    heap = [(0.0, gx, gy)]
    diag = math.sqrt(2.0) * resolution
    while heap:
        c, ix, iy = heapq.heappop(heap)
        if c > cost[iy * nx + ix]:
            continue
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                jx, jy = ix + dx, iy + dy
                if not (0 <= jx < nx and 0 <= jy < ny):
                    continue
                idx = jy * nx + jx
                if occupied[idx]:
                    continue
                step = diag if dx != 0 and dy != 0 else resolution
                nc = c + step
                if nc < cost[idx]:
                    cost[idx] = nc
                    heapq.heappush(heap, (nc, jx, jy))

    return DistanceField(bounds, resolution, (float(goal[0]), float(goal[1])),
                         nx, ny, cost, occupied)
