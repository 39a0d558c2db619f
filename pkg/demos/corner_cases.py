"""The three corner cases, each driven by the baseline, plain MPC and MPC with the potential field.

    python3 demos/corner_cases.py [out_dir]

Trajectory logs land in out_dir (default demos/out) as <scenario>_<controller>.csv; the
columns t, f_o, accel and steer are the ones to plot for the potential-vs-control figure.
"""

import sys
from pathlib import Path

import numpy as np

from pfmpc.cli import builtin_suite_dir, make_controller
from pfmpc.config import default_config
from pfmpc.sim import format_log, load_scenario, run

out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "out")
out.mkdir(parents=True, exist_ok=True)
config = default_config()

BARS = " .:-=+*#%@"


def spark(values, width=60):
    """Coarse text plot of a non-negative trace."""
    v = np.asarray(values, dtype=float)
    idx = np.linspace(0, len(v) - 1, width).astype(int)
    top = max(v.max(), 1e-9)
    return "".join(BARS[int(round(x / top * (len(BARS) - 1)))] for x in v[idx])


for name in ("case1", "case2", "case3"):
    scenario = load_scenario(builtin_suite_dir() / f"{name}.yaml")
    print(f"\n== {name}: {scenario.description}")
    for variant in ("tracking-pid", "mpc", "mpc-pf"):
        controller, cfg = make_controller(variant, config)
        result = run(scenario, controller, config=cfg, controller_name=variant)
        m = result.metrics
        (out / f"{name}_{variant}.csv").write_text(format_log(result.log))
        outcome = "collision" if m.collision_events else "deadlock" if m.deadlock else "clear"
        print(f"  {variant:13s} RC={m.route_completion:.2f} DS={m.driving_score:.2f} {outcome:9s} "
              f"closest approach {m.min_obstacle_distance:.2f} m")
        if variant == "mpc-pf":
            f_o = [r["f_o"] for r in result.log]
            print(f"  obstacle potential over the run (peak {max(f_o):.1f}):")
            print(f"  |{spark(f_o)}|")

# Case 1: the planner's first waypoint sits 4 m ahead in the next lane while a stopped car is 3.5 m
#   ahead; the rule-based stop distance cannot react in time, the MPCs swing out around it.
# Case 2: the planner's short left turn meets a car that took its right turn wide. Tracking into it
#   either hits it (plain MPC) or stalls (baseline stop rule); the field pushes MPC+PF around.
# Case 3: the planner cuts a blind bend; the field buys the extra clearance to the oncoming car.
print(f"\nlogs written to {out}")
