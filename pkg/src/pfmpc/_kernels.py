"""Compiled inner loops: bicycle step, Jacobians, horizon cost and adjoint gradient.

Everything here works on flat float arrays so numba can compile it; the public
dataclass API lives in ``dynamics``, ``potential`` and ``mpc``.

Parameter vector layout (see ``VehicleParams.as_array``)::

    [m, lf, lr, kf, kr, iz, dt, vx_lo, vx_hi, den_eps]

Obstacle row layout (see ``potential.obstacle_array``)::

    [cx, cy, cos(theta), sin(theta), a, b, speed_x, speed_y, gain]
"""

import math

import numpy as np
from numba import njit

M, LF, LR, KF, KR, IZ, DT, VX_LO, VX_HI, DEN_EPS = range(10)

# step() regime flags
DYNAMIC = 0
BLENDED = 1
KINEMATIC = 2
SPEED_CLAMPED = 4

# cost breakdown slots
TRACKING, SMOOTHNESS, EFFORT, OBSTACLE, FRONT, BOUNDS = range(6)
FC_PREDICTED, FC_CURRENT, FC_MIDPOINT, FC_FIRST = range(4)
N_TERMS = 6

ROT_STANDARD = 0
ROT_PRINTED = 1

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def wrap_angle(a):
    # maps onto (-pi, pi]
    return a - TWO_PI * math.ceil((a - math.pi) / TWO_PI)


@njit(cache=True)
def _blend(vx, p):
    lo = p[VX_LO]
    hi = p[VX_HI]
    if vx >= hi:
        return 1.0, 0.0
    if vx <= lo:
        return 0.0, 0.0
    return (vx - lo) / (hi - lo), 1.0 / (hi - lo)


@njit(cache=True)
def step_into(x, a, d, p, out):
    m = p[M]
    lf = p[LF]
    lr = p[LR]
    kf = p[KF]
    kr = p[KR]
    iz = p[IZ]
    dt = p[DT]
    l_ = lf * kf - lr * kr

    px, py, phi, vx, vy, om = x[0], x[1], x[2], x[3], x[4], x[5]
    c = math.cos(phi)
    s = math.sin(phi)

    flag = DYNAMIC
    out[0] = px + (vx * c - vy * s) * dt
    out[1] = py + (vy * c + vx * s) * dt
    out[2] = wrap_angle(phi + om * dt)
    vx_next = vx + a * dt
    if vx >= 0.0 and vx_next < 0.0:
        vx_next = 0.0
        flag |= SPEED_CLAMPED
    out[3] = vx_next

    lam, _ = _blend(vx, p)
    den1 = m * vx - (kf + kr) * dt
    den2 = iz * vx - (lf * lf * kf + lr * lr * kr) * dt
    if abs(den1) < p[DEN_EPS] or abs(den2) < p[DEN_EPS]:
        lam = 0.0

    kin_om = vx * math.tan(d) / (lf + lr)
    if lam > 0.0:
        dyn_vy = (m * vx * vy + l_ * om * dt - kf * d * vx * dt - m * vx * vx * om * dt) / den1
        dyn_om = (iz * vx * om + l_ * vy * dt - lf * kf * d * vx * dt) / den2
        out[4] = lam * dyn_vy
        out[5] = lam * dyn_om + (1.0 - lam) * kin_om
        if lam < 1.0:
            flag |= BLENDED
    else:
        out[4] = 0.0
        out[5] = kin_om
        flag |= KINEMATIC
    return flag


@njit(cache=True)
def jacobians_into(x, a, d, p, A, B):
    m = p[M]
    lf = p[LF]
    lr = p[LR]
    kf = p[KF]
    kr = p[KR]
    iz = p[IZ]
    dt = p[DT]
    l_ = lf * kf - lr * kr
    L = lf + lr

    phi, vx, vy, om = x[2], x[3], x[4], x[5]
    c = math.cos(phi)
    s = math.sin(phi)

    A[:, :] = 0.0
    B[:, :] = 0.0
    A[0, 0] = 1.0
    A[0, 2] = (-vx * s - vy * c) * dt
    A[0, 3] = c * dt
    A[0, 4] = -s * dt
    A[1, 1] = 1.0
    A[1, 2] = (-vy * s + vx * c) * dt
    A[1, 3] = s * dt
    A[1, 4] = c * dt
    A[2, 2] = 1.0
    A[2, 5] = dt
    if not (vx >= 0.0 and vx + a * dt < 0.0):
        A[3, 3] = 1.0
        B[3, 0] = dt

    lam, dlam = _blend(vx, p)
    den1 = m * vx - (kf + kr) * dt
    den2 = iz * vx - (lf * lf * kf + lr * lr * kr) * dt
    if abs(den1) < p[DEN_EPS] or abs(den2) < p[DEN_EPS]:
        lam = 0.0
        dlam = 0.0

    td = math.tan(d)
    kin_om = vx * td / L
    # kinematic part, weighted by (1 - lam)
    A[5, 3] = (1.0 - lam) * td / L
    B[5, 1] = (1.0 - lam) * vx * (1.0 + td * td) / L
    if lam > 0.0:
        n1 = m * vx * vy + l_ * om * dt - kf * d * vx * dt - m * vx * vx * om * dt
        n2 = iz * vx * om + l_ * vy * dt - lf * kf * d * vx * dt
        dyn_vy = n1 / den1
        dyn_om = n2 / den2

        dvy_dvx = ((m * vy - kf * d * dt - 2.0 * m * vx * om * dt) * den1 - n1 * m) / (den1 * den1)
        dvy_dvy = m * vx / den1
        dvy_dom = (l_ * dt - m * vx * vx * dt) / den1
        dvy_dd = -kf * vx * dt / den1

        dom_dvx = ((iz * om - lf * kf * d * dt) * den2 - n2 * iz) / (den2 * den2)
        dom_dvy = l_ * dt / den2
        dom_dom = iz * vx / den2
        dom_dd = -lf * kf * vx * dt / den2

        A[4, 3] = lam * dvy_dvx + dlam * dyn_vy
        A[4, 4] = lam * dvy_dvy
        A[4, 5] = lam * dvy_dom
        B[4, 1] = lam * dvy_dd

        A[5, 3] += lam * dom_dvx + dlam * (dyn_om - kin_om)
        A[5, 4] = lam * dom_dvy
        A[5, 5] = lam * dom_dom
        B[5, 1] += lam * dom_dd


@njit(cache=True)
def rollout_into(x0, U, p, X, flags):
    X[0, :] = x0
    for k in range(U.shape[0]):
        flags[k] = step_into(X[k], U[k, 0], U[k, 1], p, X[k + 1])


@njit(cache=True)
def obstacle_field(px, py, obs, t, mode, qmin):
    """Total elliptic potential at (px, py) with obstacles advanced by time t, plus its gradient."""
    f = 0.0
    gx = 0.0
    gy = 0.0
    for i in range(obs.shape[0]):
        cx = obs[i, 0] + obs[i, 6] * t
        cy = obs[i, 1] + obs[i, 7] * t
        c = obs[i, 2]
        s = obs[i, 3]
        ia2 = 1.0 / (obs[i, 4] * obs[i, 4])
        ib2 = 1.0 / (obs[i, 5] * obs[i, 5])
        gain = obs[i, 8]
        dx = px - cx
        dy = py - cy
        if mode == ROT_STANDARD:
            xr = dx * c + dy * s
            yr = -dx * s + dy * c
            q = xr * xr * ia2 + yr * yr * ib2
            dq_dx = 2.0 * (xr * c * ia2 - yr * s * ib2)
            dq_dy = 2.0 * (xr * s * ia2 + yr * c * ib2)
        else:
            cx_ = c + s
            cy_ = c - s
            xr = dx * cx_
            yr = dy * cy_
            q = xr * xr * ia2 + yr * yr * ib2
            dq_dx = 2.0 * xr * cx_ * ia2
            dq_dy = 2.0 * yr * cy_ * ib2
        if q > qmin:
            f += gain / q
            dfdq = -gain / (q * q)
            gx += dfdq * dq_dx
            gy += dfdq * dq_dy
        else:
            f += gain / qmin
    return f, gx, gy


@njit(cache=True)
def horizon_cost(x0, U, Xref, w, wdu, wu, uprev, obs, obs_dt, kc, dsafe, fc_mode,
                 xmin, xmax, wb, mode, qmin, p, X, A, B, flags, grad, terms, want_grad):
    """Roll out U from x0 and accumulate every cost term; optionally the adjoint gradient.

    obs_dt is the time step used to advance obstacles along the horizon (0 freezes them).
    dsafe < 0 disables the front-obstacle term. fc_mode picks the speed that multiplies each
    step's accel: FC_PREDICTED (start of step), FC_CURRENT (measured x0) or FC_MIDPOINT (mean of
    the step's start and end speed); FC_FIRST charges only the first control, times x0's speed.
    """
    n = U.shape[0]
    rollout_into(x0, U, p, X, flags)
    for j in range(N_TERMS):
        terms[j] = 0.0
    fc_scale = 0.0
    if dsafe >= 0.0:
        fc_scale = kc / (dsafe + 0.001)

    # control-only terms
    for k in range(n):
        for j in range(2):
            prev = uprev[j] if k == 0 else U[k - 1, j]
            du = U[k, j] - prev
            terms[SMOOTHNESS] += wdu[j] * du * du
            terms[EFFORT] += wu[j] * U[k, j] * U[k, j]
            if want_grad:
                grad[k, j] = 2.0 * wu[j] * U[k, j] + 2.0 * wdu[j] * du
                if k > 0:
                    grad[k - 1, j] -= 2.0 * wdu[j] * du

    lam = np.zeros(6)
    lx = np.zeros(6)
    for k in range(n, -1, -1):
        for i in range(6):
            lx[i] = 0.0
        for i in range(6):
            e = X[k, i] - Xref[k, i]
            if i == 2:
                e = wrap_angle(e)
            terms[TRACKING] += w[i] * e * e
            lx[i] += 2.0 * w[i] * e
            v = X[k, i]
            if v > xmax[i]:
                ex = v - xmax[i]
                terms[BOUNDS] += wb * ex * ex
                lx[i] += 2.0 * wb * ex
            elif v < xmin[i]:
                ex = v - xmin[i]
                terms[BOUNDS] += wb * ex * ex
                lx[i] += 2.0 * wb * ex
        f, gx, gy = obstacle_field(X[k, 0], X[k, 1], obs, k * obs_dt, mode, qmin)
        terms[OBSTACLE] += f
        if fc_mode == FC_MIDPOINT and k > 0:
            lx[3] += 0.5 * fc_scale * U[k - 1, 0]
        lx[0] += gx
        lx[1] += gy
        if k < n:
            if fc_mode == FC_FIRST and k > 0:
                speed = 0.0
            elif fc_mode == FC_CURRENT or fc_mode == FC_FIRST:
                speed = x0[3]
            elif fc_mode == FC_MIDPOINT:
                speed = 0.5 * (X[k, 3] + X[k + 1, 3])
            else:
                speed = X[k, 3]
            terms[FRONT] += fc_scale * U[k, 0] * speed
            if want_grad:
                if fc_mode == FC_PREDICTED:
                    lx[3] += fc_scale * U[k, 0]
                elif fc_mode == FC_MIDPOINT:
                    lx[3] += 0.5 * fc_scale * U[k, 0]
                jacobians_into(X[k], U[k, 0], U[k, 1], p, A, B)
                grad[k, 0] += fc_scale * speed
                for j in range(2):
                    acc = 0.0
                    for i in range(6):
                        acc += B[i, j] * lam[i]
                    grad[k, j] += acc
                # lam_k = lx + A^T lam_{k+1}
                for i in range(6):
                    acc = lx[i]
                    for r in range(6):
                        acc += A[r, i] * lam[r]
                    lx[i] = acc
        for i in range(6):
            lam[i] = lx[i]

    total = 0.0
    for j in range(N_TERMS):
        total += terms[j]
    return total
