import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from koopbots.dynamics import Workspace, make_state, pairwise_distances
from koopbots.utility import (
    UtilityWeights,
    phi1,
    phi2,
    phi3,
    phi4,
    phi5,
    phi6,
    preferred_speed,
    scalar_utility,
    utility_vector,
)

WS = Workspace()
TARGETS = np.array([(-4.5, 0.0), (3.0, 4.0), (3.0, -4.0)])
X_START = make_state([(-7, 3), (0, 7), (7, -4)])


def oracle(X, targets, R_w=11.0, R_r=2.0):
    """Six formulas per robot, written with math only."""
    out = []
    for i in range(3):
        x, y = X[2 * i], X[2 * i + 1]
        vx, vy = X[6 + 2 * i], X[7 + 2 * i]
        rx, ry = x - targets[i][0], y - targets[i][1]
        nr, nv = math.sqrt(rx * rx + ry * ry), math.sqrt(vx * vx + vy * vy)
        f1 = 0.0 if nr < 1e-9 or nv < 1e-9 else (rx * vx + ry * vy) / (nr * nv)
        vs = 4.0 / (1.0 + math.exp(-10.0 * (nr - 0.2)))
        f2 = 1.0 - math.exp(-(((nv - vs) / (0.8 * vs)) ** 2))
        f3 = math.exp(-((nr / 4) ** 2)) * math.exp(-((nr / 6) ** 2))
        f4 = math.exp(-((nr / 0.05) ** 2)) * math.exp(-((nv / 0.05) ** 2))
        dw = R_w - math.sqrt(x * x + y * y) - R_r
        f5 = math.log(1 + 6 * math.exp(-40 * dw))
        dp = min(
            math.sqrt((x - X[2 * j]) ** 2 + (y - X[2 * j + 1]) ** 2) - 2 * R_r for j in range(3) if j != i
        )
        f6 = math.log(1 + 10 * math.exp(-20 * dp))
        out += [f1, f2, f3, f4, f5, f6]
    return np.array(out)


def check_phi2_bound(X, z):
    # strictly below 1 unless exp(-t) is below double resolution (flush allowed)
    for i in range(3):
        nr = math.hypot(X[2 * i] - TARGETS[i][0], X[2 * i + 1] - TARGETS[i][1])
        nv = math.hypot(X[6 + 2 * i], X[7 + 2 * i])
        vs = preferred_speed(nr)
        t = ((nv - vs) / (0.8 * vs)) ** 2
        assert 0 <= z[i, 1] <= 1
        if t < 36:
            assert z[i, 1] < 1


def state_with(r, v, i=0):
    """Robot ``i`` at offset ``r`` from its target with velocity ``v``; others parked far away."""
    pos = [(-4.5, 0.0), (3.0, 4.0), (3.0, -4.0)]
    vel = [(0, 0)] * 3
    pos[i] = (TARGETS[i][0] + r[0], TARGETS[i][1] + r[1])
    vel[i] = v
    return make_state(pos, vel)


def test_phi1_parallel():
    assert phi1(state_with((1, 1), (2, 2)), 0, TARGETS) == pytest.approx(1.0)


def test_phi1_zero_velocity():
    assert phi1(state_with((1, 1), (0, 0)), 0, TARGETS) == 0.0


def test_phi1_antiparallel():
    assert phi1(state_with((1, 0), (-1, 0)), 0, TARGETS) == pytest.approx(-1.0)


def test_phi2_at_preferred_speed():
    r = (0.3, 0.4)
    vs = preferred_speed(0.5)
    assert phi2(state_with(r, (vs, 0)), 0, TARGETS) == pytest.approx(0.0, abs=1e-15)


def test_preferred_speed_midpoint():
    assert preferred_speed(0.2) == 2.0


def test_phi2_far_and_still():
    # v* cancels out when v = 0: 1 - exp(-(1/0.8)^2)
    got = phi2(state_with((3, 4), (0, 0)), 0, TARGETS)
    assert got == pytest.approx(1 - math.exp(-1.5625), rel=1e-14)


def test_phi3_values():
    assert phi3(state_with((0, 0), (0, 0)), 0, TARGETS) == 1.0
    assert phi3(state_with((4, 0), (0, 0)), 0, TARGETS) == pytest.approx(math.exp(-1) * math.exp(-4 / 9), rel=1e-14)
    vals = [phi3(state_with((d, 0), (0, 0)), 0, TARGETS) for d in (1, 2, 4, 8, 16)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_phi4_values():
    assert phi4(state_with((0, 0), (0, 0)), 0, TARGETS) == 1.0
    assert phi4(state_with((0.05, 0), (0, 0)), 0, TARGETS) == pytest.approx(math.exp(-1), rel=1e-12)
    assert phi4(state_with((1, 0), (0, 0)), 0, TARGETS) < 1e-150


def test_phi5_values():
    at_wall = make_state([(9, 0), (-3, 0), (0, 5)])
    assert phi5(at_wall, 0, WS) == pytest.approx(math.log(7), rel=1e-14)
    centred = make_state([(0, 0), (-6, 0), (6, 0)])
    assert phi5(centred, 0, WS) == pytest.approx(0.0, abs=1e-150)


def test_phi6_values():
    touching = make_state([(0, 0), (4, 0), (-6, 6)])
    assert phi6(touching, 0, WS) == pytest.approx(math.log(11), rel=1e-14)
    assert phi6(touching, 0, WS) == phi6(touching, 1, WS)
    apart = make_state([(0, 0), (7, 0), (-7, 0)])
    assert phi6(apart, 0, WS) <= math.log1p(10 * math.exp(-60))


def test_vector_matches_oracle_at_phase1_start():
    np.testing.assert_allclose(utility_vector(X_START, TARGETS, WS), oracle(X_START, TARGETS), rtol=0, atol=1e-12)


def test_vector_matches_scalar_functions():
    rng = np.random.default_rng(3)
    X = np.concatenate([rng.uniform(-5, 5, 6), rng.normal(0, 2, 6)])
    z = utility_vector(X, TARGETS, WS)
    fns = (
        lambda i: phi1(X, i, TARGETS),
        lambda i: phi2(X, i, TARGETS),
        lambda i: phi3(X, i, TARGETS),
        lambda i: phi4(X, i, TARGETS),
        lambda i: phi5(X, i, WS),
        lambda i: phi6(X, i, WS),
    )
    for i in range(3):
        for j, f in enumerate(fns):
            assert z[6 * i + j] == pytest.approx(f(i), abs=1e-13)


def test_at_targets():
    z = utility_vector(make_state(TARGETS), TARGETS, WS).reshape(3, 6)
    np.testing.assert_array_equal(z[:, 0], 0.0)
    np.testing.assert_array_equal(z[:, 3], 1.0)


def test_scalar_utility():
    z = np.arange(18, dtype=float)
    assert scalar_utility(z, np.zeros((3, 6))) == (0.0, 0.0, 0.0, 0.0)
    om = np.zeros((3, 6))
    om[1, 4] = 1.0
    u = scalar_utility(z, om)
    assert u[1] == z[10] and u[3] == z[10]
    rng = np.random.default_rng(0)
    om, z = rng.normal(size=(3, 6)), rng.normal(size=18)
    u = scalar_utility(z, om)
    expect = [sum(om[i, j] * z[6 * i + j] for j in range(6)) for i in range(3)]
    np.testing.assert_allclose(u[:3], expect, rtol=1e-14)
    assert u[3] == pytest.approx(sum(expect))


def test_weights_validation():
    with pytest.raises(ValueError):
        UtilityWeights(omega=np.full((3, 6), np.nan))
    w = UtilityWeights(w=np.arange(18.0))
    np.testing.assert_array_equal(w.robot_w(2), np.arange(12.0, 18.0))


# -- properties ------------------------------------------------------------

coord = st.floats(-6.5, 6.5, allow_nan=False)
speed = st.floats(-5, 5, allow_nan=False)


@st.composite
def inside_states(draw):
    pos = []
    while len(pos) < 3:
        p = (draw(coord), draw(coord))
        if math.hypot(*p) > 9.0:
            p = (p[0] * 0.5, p[1] * 0.5)
        pos.append(p)
    vel = [(draw(speed), draw(speed)) for _ in range(3)]
    return make_state(pos, vel)


@settings(max_examples=300)
@given(inside_states())
def test_range_bounds(X):
    pair, wall = pairwise_distances(X, WS)
    z = utility_vector(X, TARGETS, WS).reshape(3, 6)
    assert np.all((-1 - 1e-12 <= z[:, 0]) & (z[:, 0] <= 1 + 1e-12))
    check_phi2_bound(X, z)
    assert np.all((0 <= z[:, 2]) & (z[:, 2] <= 1))
    assert np.all((0 <= z[:, 3]) & (z[:, 3] <= 1))
    for i in range(3):
        if wall[i] >= 0:
            assert 0 < z[i, 4] <= math.log(7) + 1e-12
        if pair[i] >= 0:
            assert 0 < z[i, 5] <= math.log(11) + 1e-12


def test_range_bounds_bulk():
    rng = np.random.default_rng(1)
    for _ in range(10_000 // 100):
        for X in np.concatenate([rng.uniform(-6, 6, (100, 6)), rng.normal(0, 3, (100, 6))], axis=1):
            z = utility_vector(X, TARGETS, WS).reshape(3, 6)
            assert np.all(np.abs(z[:, 0]) <= 1 + 1e-12)
            check_phi2_bound(X, z)
            assert np.all((z[:, 2] > 0) & (z[:, 2] <= 1))
            assert np.all(np.isfinite(z))


@given(st.floats(0.01, 20), st.floats(0, 2 * math.pi))
def test_phi3_decreasing(d, ang):
    h = 1e-4 * max(d, 1.0)
    a = phi3(state_with((d * math.cos(ang), d * math.sin(ang)), (0, 0)), 0, TARGETS)
    b = phi3(state_with(((d + h) * math.cos(ang), (d + h) * math.sin(ang)), (0, 0)), 0, TARGETS)
    assert b < a or a == 0.0


@given(st.floats(0.001, 0.2))
def test_phi4_decreasing(d):
    a = phi4(state_with((d, 0), (0, 0)), 0, TARGETS)
    b = phi4(state_with((d * 1.01, 0), (0, 0)), 0, TARGETS)
    assert b < a


@given(st.floats(0.0, 8.0))
def test_phi5_decreasing_in_gap(gap):
    x = 9.0 - gap
    a = phi5(make_state([(x, 0), (-4, 3), (-4, -3)]), 0, WS)
    b = phi5(make_state([(x - 0.01, 0), (-4, 3), (-4, -3)]), 0, WS)
    assert b < a or a == 0.0


@given(st.floats(0.0, 2.0))
def test_phi6_decreasing_in_gap(gap):
    a = phi6(make_state([(0, 0), (4 + gap, 0), (-6, 5)]), 0, WS)
    b = phi6(make_state([(0, 0), (4 + gap + 0.01, 0), (-6, 5)]), 0, WS)
    assert b < a


@settings(max_examples=100)
@given(inside_states(), st.permutations([0, 1, 2]))
def test_relabel_permutes_blocks(X, perm):
    perm = list(perm)
    pos, vel = X[:6].reshape(3, 2), X[6:].reshape(3, 2)
    Xp = make_state(pos[perm], vel[perm])
    z = utility_vector(X, TARGETS, WS).reshape(3, 6)
    zp = utility_vector(Xp, TARGETS[perm], WS).reshape(3, 6)
    np.testing.assert_allclose(zp, z[perm], rtol=1e-12, atol=1e-12)
