"""Regenerate the bundled regression scenarios as YAML.

    python3 scripts/make_scenarios.py [out_dir]

Geometry lives here so the frozen files can be rebuilt after a tweak; the YAML files are
what the tests and CLI read.
"""

import math
import sys
from pathlib import Path

import numpy as np
import yaml

OUT = Path(__file__).resolve().parents[1] / "src" / "pfmpc" / "data" / "scenarios"
SCHEMA = "pfmpc-scenario/1"


def _r(x, nd=4):
    return [round(float(v), nd) for v in x]


def _pts(points):
    return [_r(p) for p in points]


def arc(cx, cy, r, a0, a1, n=12, radial=None):
    """Points on a circular arc; ``radial(u)`` adds an offset to the radius, u in [0, 1]."""
    out = []
    for u in np.linspace(0.0, 1.0, n):
        a = a0 + u * (a1 - a0)
        rr = r + (radial(u) if radial else 0.0)
        out.append((cx + rr * math.cos(a), cy + rr * math.sin(a)))
    return out


def timed_schedule(path, speed, t0=0.0, step=0.5):
    """Sample a polyline at constant speed into [t, x, y, theta] rows."""
    path = np.asarray(path, dtype=float)
    seg = np.diff(path, axis=0)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    rows = []
    for s in np.arange(0.0, cum[-1] + 1e-9, speed * step):
        i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
        u = (s - cum[i]) / (cum[i + 1] - cum[i])
        x, y = path[i] + u * seg[i]
        rows.append([t0 + s / speed, x, y, math.atan2(seg[i, 1], seg[i, 0])])
    return [_r(row) for row in rows]


def straight(length=100.0, speed=8.0):
    return {
        "schema": SCHEMA,
        "name": "straight",
        "description": "Empty straight road; the planner output is ideal.",
        "route": [[0.0, 0.0], [length, 0.0]],
        "ego_start": {"px": 0.0, "py": 0.0, "phi": 0.0, "vx": speed, "vy": 0.0, "omega": 0.0},
        "surrogate": {"target_speed": speed, "num_waypoints": 10, "spacing": 2.5},
        "duration_max": 30.0,
    }


def curve(radius=10.0, speed=5.0, laps=2.5):
    n = int(72 * laps)
    pts = [(radius * math.sin(a), radius - radius * math.cos(a))
           for a in np.linspace(0.0, 2 * math.pi * laps, n + 1)]
    return {
        "schema": SCHEMA,
        "name": "curve",
        "description": f"Circle of radius {radius:g} m driven at {speed:g} m/s; tracking regression.",
        "route": _pts(pts),
        "ego_start": {"px": 0.0, "py": 0.0, "phi": 0.0, "vx": speed, "vy": 0.0, "omega": 0.0},
        "surrogate": {"target_speed": speed, "num_waypoints": 10, "spacing": 1.5},
        "duration_max": 40.0,
    }


def acc(lead_gap=30.0, lead_speed=5.0, ego_speed=8.0, target=10.0):
    return {
        "schema": SCHEMA,
        "name": "acc",
        "description": "Slower lead vehicle on a straight road; the planner keeps asking for the target speed.",
        "route": [[0.0, 0.0], [800.0, 0.0]],
        "ego_start": {"px": 0.0, "py": 0.0, "phi": 0.0, "vx": ego_speed, "vy": 0.0, "omega": 0.0},
        "agents": [{"name": "lead", "class": "vehicle", "x": lead_gap, "y": 0.0, "theta": 0.0,
                    "speed": lead_speed}],
        "surrogate": {"target_speed": target, "num_waypoints": 10, "spacing": 2.5},
        "duration_max": 60.0,
    }


def case1(speed=5.0, gap=3.5, target_y=-0.5, lane_y=3.5, offset=4.0):
    length = 4.8
    return {
        "schema": SCHEMA,
        "name": "case1",
        "description": (f"Flawed waypoints: the first waypoint is {offset:g} m ahead in the next lane while "
                        f"a stopped car sits {gap:g} m ahead, off the planned trajectory."),
        "route": [[0.0, lane_y], [80.0, lane_y]],
        "ego_start": {"px": 0.0, "py": 0.0, "phi": 0.0, "vx": speed, "vy": 0.0, "omega": 0.0},
        "agents": [{"name": "stopped", "class": "vehicle", "x": length + gap, "y": target_y,
                    "theta": 0.0, "speed": 0.0}],
        "surrogate": {"target_speed": speed, "num_waypoints": 10, "spacing": 2.5,
                      "flaw": {"type": "waypoint_offset", "offset": offset}},
        "duration_max": 30.0,
    }


def case2(adv_pose=(-2.5, 24.5, -1.0), ego_y0=-40.0, speed=5.0, p_junction=0.1):
    """T-junction: the ego turns left across the path of a car turning right too wide."""
    R = 8.0
    route = [(1.75, -45.0)] + arc(1.75 - R, 23.75, R, 0.0, math.pi / 2, 10) + [(-45.0, 31.75)]
    short_turn = [(1.75, -45.0), (1.75, 16.0), (1.0, 21.0), (-1.5, 25.0), (-5.0, 27.5),
                  (-10.0, 29.5), (-16.0, 31.75), (-45.0, 31.75)]
    ax, ay, ath = adv_pose
    adversary = [[0.0, -40.0, 28.25, 0.0], [6.0, -10.0, 28.25, 0.0], [7.5, -3.0, 27.2, -0.6],
                 [8.5, ax, ay, ath]]
    return {
        "schema": SCHEMA,
        "name": "case2",
        "description": ("T-junction deadlock: the planner's short left turn runs into an oncoming car "
                        "that took its right turn wide and stopped."),
        "route": _pts(route),
        "ego_start": {"px": 1.75, "py": ego_y0, "phi": round(math.pi / 2, 12), "vx": 4.0, "vy": 0.0,
                      "omega": 0.0},
        "agents": [{"name": "adversary", "class": "vehicle", "schedule": adversary}],
        "surrogate": {
            "target_speed": speed, "num_waypoints": 10, "spacing": 2.5,
            "p_on_road": {"by": "progress", "points": [[0.0, 1.0], [50.0, p_junction], [90.0, 1.0]]},
            "flaw": {"type": "deadlock", "path": _pts(short_turn)},
        },
        "duration_max": 60.0,
    }


def case3(cut=1.0, swing=0.3, speed=6.0, radius=20.0, meet_lead=0.0):
    """Left bend on a single carriageway; the planner cuts the corner while an oncoming car swings wide."""
    r_ego, r_onc = radius + 1.75, radius - 1.75
    bump = lambda u: math.sin(math.pi * u)  # noqa: E731
    route = [(r_ego, -30.0)] + arc(0.0, 0.0, r_ego, 0.0, math.pi / 2, 16)[1:] + [(-40.0, r_ego)]
    cut_path = ([(r_ego, -30.0)] + arc(0.0, 0.0, r_ego, 0.0, math.pi / 2, 16, lambda u: -cut * bump(u))[1:]
                + [(-40.0, r_ego)])
    # oncoming: eastbound on the inner lane, right turn south, swinging out by `swing` at the apex
    onc_arc = arc(0.0, 0.0, r_onc, math.pi / 2, 0.0, 16, lambda u: swing * bump(u))
    ego_to_apex = 30.0 + r_ego * math.pi / 4
    t_meet = ego_to_apex / speed
    onc_to_apex = r_onc * math.pi / 4
    lead_in = speed * t_meet - onc_to_apex + meet_lead
    onc_path = [(-lead_in, r_onc)] + onc_arc + [(r_onc, -40.0)]
    return {
        "schema": SCHEMA,
        "name": "case3",
        "description": ("Single-carriageway left bend: the planned path cuts the corner into the opposite "
                        "lane as an oncoming car takes the bend wide."),
        "route": _pts(route),
        "ego_start": {"px": r_ego, "py": -30.0, "phi": round(math.pi / 2, 12), "vx": speed, "vy": 0.0,
                      "omega": 0.0},
        "agents": [{"name": "oncoming", "class": "vehicle", "schedule": timed_schedule(onc_path, speed)}],
        "surrogate": {"target_speed": speed, "num_waypoints": 10, "spacing": 2.5,
                      "flaw": {"type": "corner_cut", "path": _pts(cut_path)}},
        "duration_max": 30.0,
    }


BUILDERS = {"acc": acc, "case1": case1, "case2": case2, "case3": case3, "curve": curve, "straight": straight}


def main(out=OUT):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name, build in BUILDERS.items():
        path = out / f"{name}.yaml"
        path.write_text(yaml.safe_dump(build(), sort_keys=False, default_flow_style=None, width=100))
        print(path)


if __name__ == "__main__":
    main(*sys.argv[1:2])
