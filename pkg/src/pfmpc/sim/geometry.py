"""Oriented boxes: corners, separating-axis overlap test, and polygon gap distance."""

import math

import numpy as np


def box_corners(cx, cy, theta, length, width) -> np.ndarray:
    """(4, 2) corners, counter-clockwise, of a box centered at (cx, cy) with its length along theta."""
    c, s = math.cos(theta), math.sin(theta)
    hl, hw = length / 2.0, width / 2.0
    local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
    R = np.array([[c, -s], [s, c]])
    return local @ R.T + (cx, cy)


def _axes(corners):
    edges = np.roll(corners, -1, axis=0) - corners
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)[:2]
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def boxes_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """Separating-axis test for two convex quads given as corner arrays. Touching counts as overlap."""
    for axis in np.vstack([_axes(a), _axes(b)]):
        pa = a @ axis
        pb = b @ axis
        if pa.max() < pb.min() or pb.max() < pa.min():
            return False
    return True


def _point_segment(p, a, b):
    ab = b - a
    denom = float(ab @ ab)
    t = 0.0 if denom == 0 else min(max(float((p - a) @ ab) / denom, 0.0), 1.0)
    return float(np.hypot(*(p - (a + t * ab))))


def box_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Gap between two convex quads (0 when they overlap)."""
    if boxes_overlap(a, b):
        return 0.0
    best = math.inf
    for P, Q in ((a, b), (b, a)):
        for p in P:
            for i in range(len(Q)):
                best = min(best, _point_segment(p, Q[i], Q[(i + 1) % len(Q)]))
    return best
