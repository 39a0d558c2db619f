from dataclasses import replace

import numpy as np
import pytest

from _support import SUITE, brute_force_best, problem_for, snapshots
from pfmpc.config import default_config
from pfmpc.dynamics import ControlInput, VehicleParams, VehicleState, rollout_array
from pfmpc.mpc import MPCConfig, MPCProblem, MPCSolution, SafetyController, control_cycle, evaluate_cost, solve
from pfmpc.potential import ObstacleDescriptor, PFGains
from pfmpc.reference import PlannerOutput, ReferenceTrajectory

P = VehicleParams()
CFG = default_config()


def ref_from(X, speed=0.0):
    return ReferenceTrajectory(np.array(X, dtype=float), speed)


def test_config_invariants():
    with pytest.raises(ValueError):
        MPCConfig(horizon=1)
    with pytest.raises(ValueError):
        MPCConfig(w_x=(1, 1, 1, 1, 1, -1))
    with pytest.raises(ValueError):
        MPCConfig(step_tolerance=0.0)


def test_zero_cost_at_rest():
    X = np.zeros((4, 6))
    total, bd = evaluate_cost(VehicleState(), np.zeros((3, 2)), ref_from(X), [], PFGains(), MPCConfig(horizon=3))
    assert total == 0.0 and all(v == 0.0 for v in bd.values())


def test_far_obstacle_potential_per_step():
    # unit circle obstacle 1000 m away: normalized distance squared 1e6 at every step
    ob = ObstacleDescriptor("vehicle", 1000.0, 0.0, 0.0, 1.0, 1.0)
    g = PFGains(k_base=60.0)
    _, bd = evaluate_cost(VehicleState(), np.zeros((2, 2)), ref_from(np.zeros((3, 6))), [ob], g,
                          MPCConfig(horizon=2), p_on_road=1.0)
    k_o = 60.0 / 1.5
    assert bd["obstacle"] == pytest.approx(3 * k_o / 1e6, rel=1e-9)


def test_offset_tracking_is_single_quadratic():
    delta = 0.7
    X = np.zeros((4, 6))
    X[:, 0] = delta
    # p_on_road = 0.5 leaves the weights unscaled
    _, bd = evaluate_cost(VehicleState(), np.zeros((3, 2)), ref_from(X), [], PFGains(), MPCConfig(horizon=3),
                          p_on_road=0.5)
    assert bd["tracking"] == pytest.approx(4 * 15.0 * delta ** 2, rel=1e-12)
    assert bd["smoothness"] == bd["effort"] == bd["obstacle"] == bd["front"] == 0.0


def test_smoothness_differences_against_previous_control():
    U = np.array([[1.0, 0.1], [1.0, 0.1], [2.0, 0.0]])
    _, bd = evaluate_cost(VehicleState(vx=5.0), U, ref_from(np.zeros((4, 6))), [], PFGains(),
                          MPCConfig(horizon=3), u_prev=ControlInput(0.5, 0.1))
    assert bd["smoothness"] == pytest.approx(1.0 * 0.25 + 1.0 * 1.0 + 10.0 * 0.01, rel=1e-12)
    assert bd["effort"] == pytest.approx(0.5 * (1 + 1 + 4) + 0.5 * (0.01 + 0.01), rel=1e-12)


def test_front_cost_in_breakdown():
    U = np.array([[1.0, 0.0], [1.0, 0.0]])
    g = PFGains(k_c=1.0)
    x0 = VehicleState(vx=10.0)
    _, bd = evaluate_cost(x0, U, ref_from(np.zeros((3, 6))), [], g, MPCConfig(horizon=2), d_safety=9.999)
    assert bd["front"] == pytest.approx(1.0, rel=1e-12)  # only the first control is charged by default
    _, bd = evaluate_cost(x0, U, ref_from(np.zeros((3, 6))), [], replace(g, front_speed="predicted"),
                          MPCConfig(horizon=2), d_safety=9.999)
    assert bd["front"] == pytest.approx((10.0 + 10.1) / 10.0, rel=1e-12)
    _, bd = evaluate_cost(x0, U, ref_from(np.zeros((3, 6))), [], g, MPCConfig(horizon=2))
    assert bd["front"] == 0.0


def test_total_is_sum_of_breakdown_and_states_are_rollout(rng):
    for name in ("case2", "acc"):
        for ego, planner in snapshots(name):
            prob = problem_for(ego, planner)
            sol = solve(prob)
            assert sol.total_cost == pytest.approx(sum(sol.cost_breakdown.values()), abs=1e-9)
            np.testing.assert_array_equal(sol.predicted_states, rollout_array(ego.as_array(), sol.controls, P))


def test_recovers_reachable_reference():
    u_star = np.array([0.5, 0.05])
    U = np.tile(u_star, (20, 1))
    x0 = VehicleState(vx=8.0)
    X = rollout_array(x0.as_array(), U, P)
    cfg = MPCConfig(w_u=(0.0, 0.0), max_iters=500, cost_tolerance=1e-12, step_tolerance=1e-8)
    prob = MPCProblem(x0, ref_from(X, 8.0), [], PFGains(), cfg, P, ControlInput(*u_star))
    sol = solve(prob)
    assert sol.cost_breakdown["tracking"] < 1e-3
    np.testing.assert_allclose(sol.controls[:15], U[:15], atol=0.02)


def test_zero_target_at_rest():
    X = np.zeros((21, 6))
    sol = solve(MPCProblem(VehicleState(), ref_from(X), [], PFGains(), MPCConfig(), P))
    assert sol.total_cost < 1e-9
    np.testing.assert_allclose(sol.controls, 0.0, atol=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("name", SUITE)
def test_solver_beats_grid_oracle(name):
    for ego, planner in snapshots(name):
        prob = problem_for(ego, planner, horizon=3)
        best = brute_force_best(prob)
        sol = solve(prob)
        assert sol.total_cost <= best + 0.05 * abs(best) + 1e-9, (sol.total_cost, best)


def fd_grad(prob, U, h=1e-6):
    g = np.zeros_like(U)
    for idx in np.ndindex(U.shape):
        e = np.zeros_like(U)
        e[idx] = h
        g[idx] = (prob.cost(U + e) - prob.cost(U - e)) / (2 * h)
    return g


@pytest.mark.parametrize("name", SUITE)
def test_gradient_matches_finite_differences(name, rng):
    snaps = snapshots(name)
    for i in range(100):
        ego, planner = snaps[i % len(snaps)]
        prob = problem_for(ego, planner, u_prev=ControlInput(rng.uniform(-6, 3), rng.uniform(-0.5, 0.5)))
        U = rng.uniform(prob.u_lo, prob.u_hi, (prob.horizon, 2))
        _, g = prob.cost_and_grad(U)
        gf = fd_grad(prob, U)
        tol = np.maximum(1e-4, 1e-3 * np.abs(gf))
        assert np.all(np.abs(g - gf) <= tol), (i, np.max(np.abs(g - gf) - tol))


@pytest.mark.parametrize("mode", ["first", "predicted", "midpoint", "current"])
def test_gradient_every_front_mode(mode, rng):
    ego, planner = snapshots("acc")[1]
    cfg = replace(CFG, pf=replace(CFG.pf, front_speed=mode))
    prob = problem_for(ego, planner, config=cfg)
    assert prob.d_safety is not None
    for _ in range(10):
        U = rng.uniform(prob.u_lo, prob.u_hi, (prob.horizon, 2))
        _, g = prob.cost_and_grad(U)
        gf = fd_grad(prob, U)
        assert np.all(np.abs(g - gf) <= np.maximum(1e-4, 1e-3 * np.abs(gf)))


@pytest.mark.parametrize("name", SUITE)
def test_monotone_and_projected(name, rng):
    for ego, planner in snapshots(name):
        prob = problem_for(ego, planner)
        cold = solve(prob)
        assert cold.total_cost <= prob.cost(np.zeros((prob.horizon, 2))) + 1e-9
        warm = MPCSolution(rng.uniform(-10, 10, (prob.horizon, 2)), None, 0.0, {}, 0, False)
        sol = solve(prob, warm)
        assert sol.total_cost <= sol.start_cost + 1e-9
        assert np.all(sol.controls >= prob.u_lo) and np.all(sol.controls <= prob.u_hi)


def test_warm_start_is_shifted():
    prob = problem_for(*snapshots("straight")[1])
    U = np.arange(40.0).reshape(20, 2) * 0.01
    warm = MPCSolution(U, None, 0.0, {}, 0, False)
    sol = solve(replace_iters(prob, 0), warm)
    expected = np.vstack([U[1:], U[-1:]])
    np.testing.assert_allclose(sol.controls, prob.project(expected))


def replace_iters(prob, iters):
    return MPCProblem(prob.state0, prob.reference, prob.obstacles, prob.gains,
                      replace(prob.config, max_iters=iters), prob.params, prob.u_prev, prob.p_on_road,
                      prob.d_safety)


def straight_planner(**kw):
    wp = np.c_[np.arange(1.0, 26.0, 2.5), np.zeros(10)]
    kw.setdefault("target_speed", 8.0)
    return PlannerOutput(waypoints=wp, **kw)


def test_red_light_gate_dominates():
    u, sol = control_cycle(VehicleState(vx=5.0), straight_planner(p_red_light=1.0), CFG)
    assert u.accel == P.u_min[0]


def test_off_road_scaling_logged():
    ob = ObstacleDescriptor("vehicle", 15.0, 4.0, 0.0, 9.6, 2.5)
    _, sol = control_cycle(VehicleState(vx=5.0), straight_planner(p_on_road=0.0, obstacles=[ob]), CFG)
    np.testing.assert_allclose(sol.weights[:3], 0.5 * np.array(CFG.mpc.w_x[:3]))
    np.testing.assert_allclose(sol.weights[3:], CFG.mpc.w_x[3:])
    assert sol.k_o_effective == 2 * CFG.pf.k_base


def test_too_few_waypoints_emergency_stop():
    u, sol = control_cycle(VehicleState(vx=5.0), PlannerOutput(waypoints=[[1.0, 0.0]]), CFG)
    assert u == ControlInput(P.u_min[0], 0.0) and sol.emergency


def test_closed_loop_reaches_target_speed():
    ctl = SafetyController(CFG)
    ego = VehicleState(vx=2.0)
    from pfmpc.dynamics import step

    steer = []
    for _ in range(100):
        # the planner keeps emitting straight waypoints ahead of the ego (ego frame)
        u = ctl(ego, straight_planner())
        steer.append(u.steer)
        ego = step(ego, u, P)
    assert ego.vx == pytest.approx(8.0, rel=0.05)
    assert max(abs(s) for s in steer) < 1e-3
    assert abs(ego.py) < 1e-3
