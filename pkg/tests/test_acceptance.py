"""Acceptance criteria 1-10, one test each.

Every test records a ``[n] PASS|FAIL ...`` line; the lines are printed together at the end
of the pytest run (see conftest.py) and the test itself fails on FAIL.
"""

import functools
import math
import time
from dataclasses import replace

import numpy as np
import pytest

from _support import SUITE, brute_force_best, problem_for, snapshots
from conftest import ACCEPTANCE_LINES, SCENARIO_DIR
from pfmpc.baseline import TrackingPID
from pfmpc.cli import main as cli_main
from pfmpc.config import default_config
from pfmpc.dynamics import ControlInput, VehicleParams, VehicleState, jacobians, rollout_array
from pfmpc.mpc import SafetyController, solve, tracking_weights
from pfmpc.potential import effective_obstacle_gain
from pfmpc.sim import infraction_score, load_scenario, run

CFG = default_config()


def report(n, ok, detail):
    ACCEPTANCE_LINES.append(f"[{n:2d}] {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


@functools.lru_cache(maxsize=None)
def sim(name, variant, w_pos=None, k_c=None):
    cfg = CFG
    if w_pos is not None:
        cfg = replace(cfg, mpc=replace(cfg.mpc, w_x=(w_pos, w_pos) + cfg.mpc.w_x[2:]))
    if variant == "mpc":
        cfg = cfg.with_pf_zeroed()
    if k_c is not None:
        cfg = replace(cfg, pf=replace(cfg.pf, k_c=k_c))
    ctl = TrackingPID(cfg) if variant == "tracking-pid" else SafetyController(cfg, name=variant)
    return run(load_scenario(SCENARIO_DIR / f"{name}.yaml"), ctl, config=cfg, controller_name=variant)


def test_01_jacobians_match_finite_differences():
    p = VehicleParams()
    rng = np.random.default_rng(7)
    jacobians(VehicleState(vx=5.0), ControlInput(), p)  # compile outside the timed region
    f = lambda x, u: rollout_array(x, u[None, :], p)[1]  # noqa: E731
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(1000):
        x = np.array([*rng.uniform(-50, 50, 2), rng.uniform(-3, 3), rng.uniform(1.0, 25.0),
                      rng.uniform(-1.5, 1.5), rng.uniform(-1.0, 1.0)])
        u = np.array([rng.uniform(-6, 3), rng.uniform(-0.5, 0.5)])
        A, B = jacobians(VehicleState.from_array(x), ControlInput.from_array(u), p)
        h = 1e-6
        Af = np.column_stack([(f(x + h * e, u) - f(x - h * e, u)) / (2 * h) for e in np.eye(6)])
        Bf = np.column_stack([(f(x, u + h * e) - f(x, u - h * e)) / (2 * h) for e in np.eye(2)])
        for J, Jf in ((A, Af), (B, Bf)):
            worst = max(worst, float(np.max(np.abs(J - Jf) / np.maximum(1e-5, 1e-4 * np.abs(Jf)))))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1.0 and elapsed < 5.0,
           f"Jacobian vs central differences: worst error/tolerance {worst:.3g} (<= 1), {elapsed:.2f} s (< 5 s)")


@pytest.mark.parametrize("name", SUITE)
def test_02_solver_within_5pct_of_grid_oracle(name):
    snaps = snapshots(name)
    t0 = time.perf_counter()
    worst = -math.inf
    for ego, planner in snaps:
        prob = problem_for(ego, planner, horizon=3)
        best = brute_force_best(prob)
        got = solve(prob).total_cost
        worst = max(worst, (got - best) / max(abs(best), 1e-12))
    elapsed = time.perf_counter() - t0
    report(2, worst <= 0.05 and elapsed < 60.0,
           f"{name}: solver vs 5x5-grid best over {len(snaps)} states, worst excess {100 * worst:+.2f}% "
           f"(<= +5%), {elapsed:.1f} s (< 60 s)")


def lateral_error(result, radius=10.0, horizon=30.0):
    return max(abs(math.hypot(r["px"], r["py"] - radius) - radius) for r in result.log if r["t"] <= horizon)


def test_03_circle_tracking():
    e_mpc = lateral_error(sim("curve", "mpc"))
    e_pid = lateral_error(sim("curve", "tracking-pid"))
    report(3, e_mpc < 0.3 and e_mpc < e_pid,
           f"10 m circle at 5 m/s, PF zeroed: max lateral error {e_mpc:.4f} m (< 0.3), baseline {e_pid:.4f} m")


def test_04_case1_flawed_waypoints():
    pf = sim("case1", "mpc-pf").metrics
    pid = sim("case1", "tracking-pid").metrics
    ok = not pf.collision_events and pf.route_completion == 1.0 and len(pid.collision_events) > 0
    report(4, ok, f"case1: MPC+PF collisions={len(pf.collision_events)} RC={pf.route_completion:.3f}; "
                  f"baseline collisions={len(pid.collision_events)} (> 0)")


def test_05_case2_deadlock():
    pf = sim("case2", "mpc-pf")
    nopf = sim("case2", "mpc").metrics
    f_o = np.array([r["f_o"] for r in pf.log])
    peak = int(np.argmax(f_o))
    head, tail = f_o[: max(1, peak // 4)], f_o[-10:]
    rises = float(head.max()) < 0.25 * f_o[peak]
    falls = float(tail.max()) < 0.25 * f_o[peak]
    m = pf.metrics
    ok = (m.route_completion == 1.0 and not m.deadlock and not m.collision_events
          and (nopf.deadlock or bool(nopf.collision_events)) and 0 < peak < len(f_o) - 1 and rises and falls)
    report(5, ok, f"case2: MPC+PF RC={m.route_completion:.3f} deadlock={m.deadlock}; without PF "
                  f"deadlock={nopf.deadlock} collisions={len(nopf.collision_events)}; F_O rises to "
                  f"{f_o[peak]:.1f} at t={pf.log[peak]['t']:.1f} s and falls to {f_o[-1]:.2f}")


def test_06_case3_corner_cut():
    d = lambda r: r.metrics.min_distance_by_agent["oncoming"]  # noqa: E731
    pf15, mpc15, pf10 = d(sim("case3", "mpc-pf", 15.0)), d(sim("case3", "mpc", 15.0)), d(sim("case3", "mpc-pf", 10.0))
    ok = pf15 - mpc15 >= 0.1 and pf10 > pf15
    report(6, ok, f"case3 min distance: MPC+PF(w=15) {pf15:.3f} m vs MPC(w=15) {mpc15:.3f} m "
                  f"(margin {pf15 - mpc15:.3f} >= 0.1); MPC+PF(w=10) {pf10:.3f} m > {pf15:.3f} m")


def test_07_acc():
    r = sim("acc", "mpc-pf")
    late = np.array([row["vx"] for row in r.log if row["t"] >= 50.0])
    gap = r.metrics.min_distance_by_agent["lead"]
    off = sim("acc", "mpc").metrics
    off_gap = off.min_distance_by_agent["lead"]
    ok = (np.all(np.abs(late - 5.0) <= 0.5) and gap >= 2.0 and not r.metrics.collision_events
          and (off.collision_events or off_gap < 2.0))
    report(7, bool(ok), f"acc: speed over the last 10 s in [{late.min():.3f}, {late.max():.3f}] "
                        f"(5 m/s +-10%), min gap {gap:.3f} m (>= 2); K_c=K_o=0: collisions="
                        f"{len(off.collision_events)} min gap {off_gap:.3f} m")


def test_08_modulation_identities():
    k, w = 60.0, np.array(CFG.mpc.w_x)
    ok = (effective_obstacle_gain(k, 0.0) == 2 * k and effective_obstacle_gain(k, 0.5) == k
          and np.array_equal(tracking_weights(w, 1.0)[:3], 1.5 * w[:3])
          and np.array_equal(tracking_weights(w, 1.0)[3:], w[3:]))
    report(8, ok, "gain(K,0)=2K, gain(K,0.5)=K, weight(w,1)=1.5w exact")


def test_09_metrics_identity():
    runs = [sim(n, v) for n in SUITE for v in ("tracking-pid", "mpc", "mpc-pf")]
    ds_ok = all(r.metrics.driving_score == r.metrics.route_completion * r.metrics.infraction_score for r in runs)
    is_ok = all(r.metrics.infraction_score == infraction_score(r.metrics.events) for r in runs)
    hand = infraction_score(["collision_vehicle", "collision_static"])
    report(9, ds_ok and is_ok and hand == 0.60 * 0.65,
           f"DS = RC x IS on all {len(runs)} suite runs; vehicle+static collision IS = {hand:.2f}")


@pytest.mark.slow
def test_10_determinism(tmp_path):
    t0 = time.perf_counter()
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert cli_main(["compare", "--suite", str(SCENARIO_DIR), "--seed", "0", "--out", str(out),
                         "--no-timestamps"]) == 0
        outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    elapsed = time.perf_counter() - t0
    same = outs[0] == outs[1]
    report(10, same and elapsed / 2 < 600.0,
           f"two full-suite compares: {len(outs[0])} files byte-identical={same}; "
           f"{elapsed / 2:.1f} s per suite (< 600 s)")
