"""Two readings of the ellipse alignment step.

    python3 demos/ellipse_rotation.py

The obstacle potential is K / q with q the normalized elliptic distance of the ego from the
obstacle, measured in the obstacle's own axes. The "standard" form rotates the ego offset
into those axes. The "printed" form multiplies diag(dx, dy) by the rotation matrix and sums
the rows; it agrees with the standard form only when the obstacle heading is 0 and is not
invariant when the whole scene turns.
"""

import math

import numpy as np

from pfmpc.potential import ObstacleDescriptor, PFGains, obstacle_potential, rotate_into_ellipse

ob = ObstacleDescriptor("vehicle", 0.0, 0.0, math.pi / 2, 9.6, 2.5)  # car facing +y
for rotation in ("standard", "printed"):
    print(f"{rotation}: ego at (1, 0) maps to {np.round(rotate_into_ellipse(1.0, 0.0, ob, rotation), 3)}")

# potential around a car facing +y; the standard field is long in y, the printed one is not
xs = np.linspace(-12, 12, 25)
ys = np.linspace(12, -12, 13)
for rotation in ("standard", "printed"):
    gains = PFGains(rotation=rotation)
    print(f"\n{rotation} field (rows y = 12 .. -12, cols x = -12 .. 12; digits = log10 F_O + 2)")
    for y in ys:
        row = [obstacle_potential(x, y, [ob], gains, 60.0) for x in xs]
        print("  " + "".join(str(min(9, max(0, int(math.log10(max(f, 1e-9)) + 2)))) for f in row))

# turning the whole scene by 40 degrees leaves the standard potential unchanged
rot = math.radians(40)
c, s = math.cos(rot), math.sin(rot)
ego = (6.0, 3.0)
turned = ObstacleDescriptor("vehicle", 0.0, 0.0, ob.theta + rot, 9.6, 2.5)
for rotation in ("standard", "printed"):
    g = PFGains(rotation=rotation)
    f0 = obstacle_potential(*ego, [ob], g, 60.0)
    f1 = obstacle_potential(c * ego[0] - s * ego[1], s * ego[0] + c * ego[1], [turned], g, 60.0)
    print(f"\n{rotation}: F_O {f0:.3f} before, {f1:.3f} after turning the scene")
