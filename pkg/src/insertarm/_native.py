"""Hot-path chain sweeps: forward kinematics, geometric Jacobian, recursive
Newton-Euler, and the joint-space inertia matrix.

These run once or more per 1 kHz control tick, so they are written as plain
loops over per-joint arrays and jitted with numba. Without numba the same
functions run as ordinary Python (slow but identical results; numba does not
change IEEE semantics, so outputs are bit-identical either way).

Array layout (n = dof):
    r_off   (n, 3, 3)  fixed rotation, parent frame -> joint frame
    p_off   (n, 3)     joint origin in the parent frame
    axes    (n, 3)     unit joint axis in the joint frame
    mass    (n,)       link masses
    com     (n, 3)     link COM in the link frame
    inertia (n, 3, 3)  rotational inertia about the COM, link frame
    r_ee (3, 3), p_ee (3,)  end-effector mount offset from the last link frame
"""

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def _rot_axis_angle(axis, angle):
    c = np.cos(angle)
    s = np.sin(angle)
    v = 1.0 - c
    x, y, z = axis[0], axis[1], axis[2]
    r = np.empty((3, 3))
    r[0, 0] = c + x * x * v
    r[0, 1] = x * y * v - z * s
    r[0, 2] = x * z * v + y * s
    r[1, 0] = y * x * v + z * s
    r[1, 1] = c + y * y * v
    r[1, 2] = y * z * v - x * s
    r[2, 0] = z * x * v - y * s
    r[2, 1] = z * y * v + x * s
    r[2, 2] = c + z * z * v
    return r


@njit(cache=True)
def _cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def chain_frames(r_off, p_off, axes, q):
    """World rotation and origin of every link frame."""
    n = q.shape[0]
    r_w = np.empty((n, 3, 3))
    p_w = np.empty((n, 3))
    r_acc = np.eye(3)
    p_acc = np.zeros(3)
    for i in range(n):
        p_acc = p_acc + r_acc @ p_off[i]
        r_acc = r_acc @ r_off[i] @ _rot_axis_angle(axes[i], q[i])
        r_w[i] = r_acc
        p_w[i] = p_acc
    return r_w, p_w


@njit(cache=True)
def fk(r_off, p_off, axes, q, r_ee, p_ee):
    """End-effector mount pose in the base frame."""
    r_w, p_w = chain_frames(r_off, p_off, axes, q)
    n = q.shape[0]
    r = r_w[n - 1] @ r_ee
    p = p_w[n - 1] + r_w[n - 1] @ p_ee
    return r, p


@njit(cache=True)
def jacobian_and_pose(r_off, p_off, axes, q, r_ee, p_ee):
    """Geometric Jacobian (6 x n, rows [v; w] in the base frame) plus FK pose."""
    n = q.shape[0]
    r_w, p_w = chain_frames(r_off, p_off, axes, q)
    r = r_w[n - 1] @ r_ee
    p = p_w[n - 1] + r_w[n - 1] @ p_ee
    jac = np.empty((6, n))
    for i in range(n):
        z = r_w[i] @ axes[i]
        lin = _cross(z, p - p_w[i])
        jac[0, i] = lin[0]
        jac[1, i] = lin[1]
        jac[2, i] = lin[2]
        jac[3, i] = z[0]
        jac[4, i] = z[1]
        jac[5, i] = z[2]
    return jac, r, p


@njit(cache=True)
def rnea(r_off, p_off, axes, q, dq, ddq, mass, com, inertia, gravity):
    """Joint torques for the motion (q, dq, ddq) under the given gravity vector.

    Gravity is folded in as a fictitious base acceleration of -gravity, the
    standard recursive Newton-Euler trick. All link quantities are expressed
    in their own frame.
    """
    n = q.shape[0]
    omega = np.zeros(3)
    domega = np.zeros(3)
    acc = -gravity.copy().astype(np.float64)

    omegas = np.empty((n, 3))
    domegas = np.empty((n, 3))
    f_link = np.empty((n, 3))
    n_link = np.empty((n, 3))
    rots = np.empty((n, 3, 3))  # parent -> child coordinate rotation (R_i^T)

    for i in range(n):
        r_i = r_off[i] @ _rot_axis_angle(axes[i], q[i])
        rt = r_i.T.copy()
        rots[i] = rt

        omega_p = rt @ omega
        acc = rt @ (acc + _cross(domega, p_off[i]) + _cross(omega, _cross(omega, p_off[i])))
        omega = omega_p + axes[i] * dq[i]
        domega = rt @ domega + _cross(omega_p, axes[i] * dq[i]) + axes[i] * ddq[i]

        acc_com = acc + _cross(domega, com[i]) + _cross(omega, _cross(omega, com[i]))
        f_link[i] = mass[i] * acc_com
        n_link[i] = inertia[i] @ domega + _cross(omega, inertia[i] @ omega)
        omegas[i] = omega
        domegas[i] = domega

    tau = np.empty(n)
    f_child = np.zeros(3)
    n_child = np.zeros(3)
    for i in range(n - 1, -1, -1):
        if i < n - 1:
            r_child = rots[i + 1].T.copy()  # child -> this frame
            f_from_child = r_child @ f_child
            n_from_child = r_child @ n_child + _cross(p_off[i + 1], f_from_child)
        else:
            f_from_child = np.zeros(3)
            n_from_child = np.zeros(3)
        f_i = f_link[i] + f_from_child
        n_i = n_link[i] + _cross(com[i], f_link[i]) + n_from_child
        tau[i] = n_i[0] * axes[i, 0] + n_i[1] * axes[i, 1] + n_i[2] * axes[i, 2]
        f_child = f_i
        n_child = n_i
    return tau


@njit(cache=True)
def mass_matrix(r_off, p_off, axes, q, mass, com, inertia):
    """Joint-space inertia via unit-acceleration RNEA probes (zero gravity/velocity)."""
    n = q.shape[0]
    m = np.empty((n, n))
    zero = np.zeros(n)
    g0 = np.zeros(3)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        col = rnea(r_off, p_off, axes, q, zero, e, mass, com, inertia, g0)
        for i in range(n):
            m[i, j] = col[i]
    # symmetrize: probes agree to machine precision, this pins exact symmetry
    for i in range(n):
        for j in range(i + 1, n):
            s = 0.5 * (m[i, j] + m[j, i])
            m[i, j] = s
            m[j, i] = s
    return m


def warmup():
    """Trigger JIT compilation on a 1-link chain so later timing is steady."""
    r_off = np.eye(3)[None, :, :].copy()
    p_off = np.zeros((1, 3))
    axes = np.array([[0.0, 0.0, 1.0]])
    q = np.zeros(1)
    r_ee = np.eye(3)
    p_ee = np.array([0.1, 0.0, 0.0])
    mass = np.ones(1)
    com = np.array([[0.05, 0.0, 0.0]])
    inertia = np.eye(3)[None, :, :] * 1e-3
    gravity = np.array([0.0, 0.0, -9.81])
    fk(r_off, p_off, axes, q, r_ee, p_ee)
    jacobian_and_pose(r_off, p_off, axes, q, r_ee, p_ee)
    rnea(r_off, p_off, axes, q, q, q, mass, com, inertia, gravity)
    mass_matrix(r_off, p_off, axes, q, mass, com, inertia)
