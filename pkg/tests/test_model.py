import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cabletow.model import (
    EPS_TAUT,
    ControlInput,
    HybridState,
    SystemParams,
    TautInfeasible,
    TractorState,
    TrailerState,
    Trajectory,
    cable_kinematics,
    cable_length,
    rollout,
    sgn,
    step_slack,
    step_taut,
    step_tractor,
    step_trailer,
    wrap_angle,
)

P = SystemParams()
DT = P.dt


def make_state(tx, ty, tvx=0.0, tvy=0.0, lx=0.0, ly=0.0, lth=0.0,
               lv=0.0, ld=0.0, mode=0):
    return HybridState(
        TractorState(tx, ty, 0.0, tvx, tvy, 0.0),
        TrailerState(lx, ly, lth, lv, ld, 0.0),
        mode,
    )


def test_wrap_angle_half_open_interval():
    assert wrap_angle(math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(0.0) == 0.0
    assert wrap_angle(2 * math.pi) == pytest.approx(0.0, abs=1e-15)


@given(st.floats(-50.0, 50.0))
def test_wrap_angle_range_and_equivalence(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi + 1e-15
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


def test_sgn_zero_convention():
    assert sgn(0.0) == 0.0
    assert sgn(2.5) == 1.0
    assert sgn(-0.1) == -1.0


def test_params_defaults():
    assert P.mu_g == pytest.approx(0.2943)
    assert P.steps_per_expansion == 5
    assert P.cable_len_max == 0.8
    assert P.phi_max == pytest.approx(math.pi / 2)


def test_params_rejects_bad_values():
    with pytest.raises(ValueError):
        SystemParams(cable_len_min=0.9)
    with pytest.raises(ValueError):
        SystemParams(dt=0.3)  # not a divisor of the expansion period
    with pytest.raises(ValueError):
        SystemParams(trailer_mass=0.0)


def test_step_tractor_constant_velocity():
    s = TractorState(0, 0, 0, 1, 0, 0)
    r = step_tractor(s, ControlInput(0, 0, 0), DT)
    assert (r.x, r.y, r.theta) == (0.1, 0.0, 0.0)
    assert (r.vx, r.vy, r.omega) == (1.0, 0.0, 0.0)


def test_step_tractor_accel_from_rest():
    s = TractorState(0, 0, 0, 0, 0, 0)
    r = step_tractor(s, ControlInput(1, 0, 0.5), DT)
    assert (r.x, r.y, r.theta) == (0.0, 0.0, 0.0)
    assert r.vx == pytest.approx(0.1)
    assert r.omega == pytest.approx(0.05)


def test_step_tractor_general():
    s = TractorState(1, 2, 0.3, 0.5, -0.2, 0.1)
    r = step_tractor(s, ControlInput(0.2, 0.2, 0), DT)
    assert r.x == pytest.approx(1.05)
    assert r.y == pytest.approx(1.98)
    assert r.theta == pytest.approx(0.31)
    assert r.vx == pytest.approx(0.52)
    assert r.vy == pytest.approx(-0.18)
    assert r.omega == pytest.approx(0.1)


def test_step_trailer_friction_decay():
    s = TrailerState(0, 0, 0, 1.0, 0.0, 0.0)
    r = step_trailer(s, 0.0, DT, P)
    assert (r.x, r.y, r.theta) == (0.1, 0.0, 0.0)
    assert r.speed == pytest.approx(0.97057)


def test_step_trailer_rest_stays_at_rest():
    s = TrailerState(0.3, -0.2, 1.1, 0.0, 0.4, 0.0)
    r = step_trailer(s, 0.0, DT, P)
    assert r == TrailerState(0.3, -0.2, 1.1, 0.0, 0.4, 0.0)


def test_step_trailer_full_steering():
    s = TrailerState(0, 0, 0, 1.0, math.pi / 2, 0.0)
    r = step_trailer(s, 0.0, DT, P)
    assert r.x == pytest.approx(0.0, abs=1e-15)
    assert r.y == pytest.approx(0.1)
    assert r.theta == pytest.approx(0.2)


def test_step_trailer_friction_clamp():
    s = TrailerState(0, 0, 0, 0.02, 0.0, 0.0)
    r = step_trailer(s, 0.0, DT, P)
    assert r.speed == 0.0


def test_step_trailer_no_clamp_under_force():
    # the clamp applies only to pure coasting; with force the sign may flip
    s = TrailerState(0, 0, 0, 0.01, 0.0, 0.0)
    r = step_trailer(s, -5.0, DT, P)
    assert r.speed < 0.0


def test_friction_stop_step_count():
    s = TrailerState(0, 0, 0, 1.0, 0.0, 0.0)
    n = 0
    while s.speed > 0.0:
        s = step_trailer(s, 0.0, DT, P)
        n += 1
        assert n < 100
    assert s.speed == 0.0
    assert n == 34
    assert n == math.ceil(1.0 / (P.mu_g * DT))


@given(st.floats(0.0, 1.0), st.integers(1, 40))
def test_friction_monotone_dissipation(v0, steps):
    s = TrailerState(0, 0, 0, v0, 0.0, 0.0)
    prev = v0
    for _ in range(steps):
        s = step_trailer(s, 0.0, DT, P)
        assert s.speed <= prev
        assert s.speed >= 0.0
        prev = s.speed
    bound = math.ceil(v0 / (P.mu_g * DT)) if v0 > 0 else 0
    if steps >= bound:
        assert s.speed == 0.0


def test_cable_kinematics_perpendicular():
    x = make_state(1, 0, 0, 1)
    ck = cable_kinematics(x)
    assert ck.length == pytest.approx(1.0)
    assert ck.angle == pytest.approx(0.0)
    assert ck.tractor_speed == pytest.approx(1.0)
    assert ck.tractor_course == pytest.approx(math.pi / 2)
    assert ck.angular_rate == pytest.approx(1.0)


def test_cable_kinematics_stationary():
    x = make_state(0.8, 0)
    ck = cable_kinematics(x)
    assert ck.length == pytest.approx(0.8)
    assert ck.angular_rate == 0.0
    assert ck.tractor_course == 0.0


def test_cable_kinematics_diagonal():
    x = make_state(0.4, 0.4, 1, 0)
    ck = cable_kinematics(x)
    assert ck.length == pytest.approx(math.sqrt(0.32))
    assert ck.angle == pytest.approx(math.pi / 4)
    assert ck.angular_rate == pytest.approx(-1.25)


def test_cable_kinematics_degenerate_length():
    x = make_state(0, 0, 1, 0)
    ck = cable_kinematics(x)
    assert ck.length == 0.0
    assert ck.angular_rate == 0.0


def test_step_slack_fixed_point():
    x = make_state(0.5, 0.2, lx=0.0, ly=0.0)
    r = step_slack(x, ControlInput(0, 0, 0), DT, P)
    assert r.tractor == x.tractor
    assert r.trailer == x.trailer
    assert r.mode == 0


def test_step_slack_cable_grows():
    x = make_state(0, 0, 1, 0, lx=-0.5)
    r = step_slack(x, ControlInput(0, 0, 0), DT, P)
    assert r.tractor.x == pytest.approx(0.1)
    assert r.trailer.x == pytest.approx(-0.5)
    assert cable_length(x) == pytest.approx(0.5)
    assert cable_length(r) == pytest.approx(0.6)


@given(
    st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(-3.0, 3.0),
    st.floats(0.0, 1.0), st.floats(-1.5, 1.5),
)
def test_step_slack_freezes_steering(vx, vy, th, v, d):
    x = HybridState(
        TractorState(0, 0, 0, vx, vy, 0),
        TrailerState(0.1, -0.3, th, v, d, 0.0),
        0,
    )
    r = step_slack(x, ControlInput(0.3, -0.2, 0.1), DT, P)
    assert r.trailer.steering == d
    assert r.trailer.force == 0.0
    assert r.mode == 0


def test_step_taut_straight_towing():
    x = make_state(0.8, 0, 1, 0, lv=1.0, mode=1)
    r = step_taut(x, ControlInput(0, 0, 0), DT, P)
    assert r.tractor.x == pytest.approx(0.9)
    assert r.trailer.x == pytest.approx(0.1)
    assert r.trailer.y == pytest.approx(0.0, abs=1e-12)
    assert r.trailer.theta == pytest.approx(0.0, abs=1e-12)
    assert r.trailer.speed == pytest.approx(1.0)
    assert r.trailer.force == pytest.approx(P.trailer_mass * P.mu_g)
    assert cable_length(r) == pytest.approx(0.8, abs=1e-9)
    assert r.mode == 1


def test_step_taut_perpendicular_velocity():
    x = make_state(0.8, 0, 0, 1, lv=1.0, mode=1)
    r = step_taut(x, ControlInput(0, 0, 0), DT, P)
    assert r.trailer.speed == 0.0
    assert cable_length(r) == pytest.approx(0.8, abs=1e-9)


def test_step_taut_opposing_velocity():
    x = make_state(0.8, 0, -1, 0, lv=1.0, mode=1)
    with pytest.raises(TautInfeasible):
        step_taut(x, ControlInput(0, 0, 0), DT, P)


def test_step_taut_steering_limit():
    # trailer heading reversed: required steering would be ~pi
    x = make_state(0.8, 0, 1, 0, lth=math.pi, lv=0.0, mode=1)
    with pytest.raises(TautInfeasible):
        step_taut(x, ControlInput(0, 0, 0), DT, P)


def taut_states():
    return st.tuples(
        st.floats(-math.pi, math.pi),  # cable bearing
        st.floats(-0.9, 0.9),          # steering offset within limits
        st.floats(-1.0, 1.0),          # tractor vx
        st.floats(-1.0, 1.0),          # tractor vy
        st.floats(0.0, 1.0),           # trailer speed
    ).map(lambda t: HybridState(
        TractorState(P.cable_len_max * math.cos(t[0]),
                     P.cable_len_max * math.sin(t[0]),
                     0.0, t[2], t[3], 0.0),
        TrailerState(0.0, 0.0, wrap_angle(t[0] - t[1]), t[4], t[1], 0.0),
        1,
    ))


@given(taut_states(), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
@settings(max_examples=200)
def test_step_taut_invariants(x, ax, ay):
    try:
        r = step_taut(x, ControlInput(ax, ay, 0.0), DT, P)
    except TautInfeasible:
        assume(False)
        return
    # cable held at exactly its limit
    assert abs(cable_length(r) - P.cable_len_max) <= 1e-9
    # steering aligned with the cable: cross(e(theta+delta), displacement) ~ 0
    hd = r.trailer.theta + r.trailer.steering
    dx = r.tractor.x - r.trailer.x
    dy = r.tractor.y - r.trailer.y
    assert abs(math.cos(hd) * dy - math.sin(hd) * dx) <= 1e-9
    # the cable never pushes
    assert r.trailer.speed >= 0.0
    assert abs(r.trailer.steering) <= P.phi_max
    assert r.mode == 1


@given(taut_states())
def test_step_taut_deterministic(x):
    u = ControlInput(0.3, -0.1, 0.2)
    try:
        a = step_taut(x, u, DT, P)
    except TautInfeasible:
        assume(False)
        return
    b = step_taut(x, u, DT, P)
    assert a == b


def test_rollout_empty():
    x = make_state(0.5, 0)
    tr = rollout(x, [], [], DT, P)
    assert tr.states == [x]
    assert tr.n_steps == 0


def test_rollout_at_rest_constant():
    x = make_state(0.5, 0)
    tr = rollout(x, [ControlInput(0, 0, 0)] * 10, [0] * 10, DT, P)
    assert all(s == x or (s.tractor == x.tractor and s.trailer == x.trailer)
               for s in tr.states)


def test_rollout_reports_failing_index():
    x = make_state(0.8, 0, -1, 0, mode=1)
    with pytest.raises(TautInfeasible) as exc:
        rollout(x, [ControlInput(0, 0, 0)] * 3, [0, 0, 1], DT, P)
    assert exc.value.index == 2


def test_rollout_mode_flags_match_states():
    x = make_state(0.8, 0, 1, 0, lv=1.0)
    tr = rollout(x, [ControlInput(0, 0, 0)] * 4, [1, 1, 0, 0], DT, P)
    for k, m in enumerate(tr.modes):
        assert tr.states[k + 1].mode == m


def test_trajectory_shape_validation():
    x = make_state(0.5, 0)
    with pytest.raises(ValueError):
        Trajectory([x], [ControlInput(0, 0, 0)], [0], DT)
    with pytest.raises(ValueError):
        Trajectory([x, x], [ControlInput(0, 0, 0)], [], DT)


def test_trajectory_mode_transitions():
    x = make_state(0.5, 0)
    tr = rollout(x, [ControlInput(0, 0, 0)] * 4, [0] * 4, DT, P)
    tr.modes = [0, 1, 1, 0]
    assert tr.mode_transitions() == [(1, 0, 1), (3, 1, 0)]


def test_times_grid():
    x = make_state(0.5, 0)
    tr = rollout(x, [ControlInput(0, 0, 0)] * 3, [0] * 3, DT, P)
    assert tr.times() == pytest.approx([0.0, 0.1, 0.2, 0.3])
