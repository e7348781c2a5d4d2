"""Independent analytic oracles shared by the unit and acceptance tests.

Closed forms for the homogeneous second-order system e'' + kd e' + kp e = 0
(e(0) = e0, e'(0) = 0) and the forced step response m x'' + b x' + k x = F
(x(0) = x'(0) = 0), all three damping regimes.
"""

import numpy as np


def second_order_decay(e0, kp, kd, t):
    t = np.asarray(t, dtype=float)
    wn = np.sqrt(kp)
    zeta = kd / (2.0 * wn)
    if zeta < 1.0:
        wd = wn * np.sqrt(1.0 - zeta**2)
        return e0 * np.exp(-zeta * wn * t) * (np.cos(wd * t) + zeta * wn / wd * np.sin(wd * t))
    if zeta == 1.0:
        return e0 * np.exp(-wn * t) * (1.0 + wn * t)
    s = wn * np.sqrt(zeta**2 - 1.0)
    r1, r2 = -zeta * wn + s, -zeta * wn - s
    return e0 * (r2 * np.exp(r1 * t) - r1 * np.exp(r2 * t)) / (r2 - r1)


def second_order_envelope(e0, kp, kd, t):
    """Decay envelope: exponential bound for the oscillatory case, |e| itself
    for the monotone regimes."""
    t = np.asarray(t, dtype=float)
    wn = np.sqrt(kp)
    zeta = kd / (2.0 * wn)
    if zeta < 1.0:
        wd = wn * np.sqrt(1.0 - zeta**2)
        return abs(e0) * (wn / wd) * np.exp(-zeta * wn * t)
    return np.abs(second_order_decay(e0, kp, kd, t))


def step_response(force, mass, damping, stiffness, t):
    """x(t) for m x'' + b x' + k x = F from rest; settles at F/k."""
    x_ss = force / stiffness
    return x_ss - second_order_decay(x_ss, stiffness / mass, damping / mass, t)


def second_order_free(x0, v0, kp, kd, t):
    """x(t) for x'' + kd x' + kp x = 0 from general initial conditions."""
    t = np.asarray(t, dtype=float)
    wn = np.sqrt(kp)
    zeta = kd / (2.0 * wn)
    if zeta < 1.0:
        wd = wn * np.sqrt(1.0 - zeta**2)
        sigma = zeta * wn
        return np.exp(-sigma * t) * (
            x0 * np.cos(wd * t) + (v0 + sigma * x0) / wd * np.sin(wd * t)
        )
    if zeta == 1.0:
        return np.exp(-wn * t) * (x0 + (v0 + wn * x0) * t)
    s = wn * np.sqrt(zeta**2 - 1.0)
    r1, r2 = -zeta * wn + s, -zeta * wn - s
    c2 = (v0 - r1 * x0) / (r2 - r1)
    c1 = x0 - c2
    return c1 * np.exp(r1 * t) + c2 * np.exp(r2 * t)


def forced_then_released(force, mass, damping, stiffness, t_release, t):
    """Piecewise response: constant force until t_release, zero afterwards."""
    t = np.asarray(t, dtype=float)
    kp = stiffness / mass
    kd = damping / mass
    x_at = step_response(force, mass, damping, stiffness, np.array([t_release]))[0]
    # velocity at release: derivative of the step response
    h = 1e-7
    v_at = (
        step_response(force, mass, damping, stiffness, np.array([t_release + h]))[0]
        - step_response(force, mass, damping, stiffness, np.array([t_release - h]))[0]
    ) / (2 * h)
    before = step_response(force, mass, damping, stiffness, np.minimum(t, t_release))
    after = second_order_free(x_at, v_at, kp, kd, np.maximum(t - t_release, 0.0))
    return np.where(t < t_release, before, after)
