"""Dense velocity-space kernels of the full-tensor reference solver.

Each kernel exists twice: a fused loop compiled with numba and a vectorized
numpy version. The public names point at the numba ones unless numba is
missing or disabled with ``TTKINETIC_NUMBA=0``.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit

# -- moments ------------------------------------------------------------------


def moments_numpy(f, nodes, dv, R_g):
    """Return ``(n, u, T, S)`` by direct triple-sum quadrature."""
    x = nodes
    m1 = f.sum(axis=(1, 2))
    m2 = f.sum(axis=(0, 2))
    m3 = f.sum(axis=(0, 1))
    n = dv * m1.sum()
    if not n > 0:
        return n, np.zeros(3), 0.0, np.zeros(3)
    u = dv * np.array([x @ m1, x @ m2, x @ m3]) / n
    x2 = x * x
    e2 = dv * (x2 @ m1 + x2 @ m2 + x2 @ m3)
    T = (e2 - n * (u @ u)) / (3.0 * n * R_g)
    if not T > 0:
        return n, u, T, np.zeros(3)
    s = 1.0 / np.sqrt(2.0 * R_g * T)
    c = [(x - u[a]) * s for a in range(3)]
    p12 = f.sum(axis=2)
    p13 = f.sum(axis=1)
    p23 = f.sum(axis=0)
    S = np.empty(3)
    S[0] = c[0] ** 3 @ m1 + c[0] @ p12 @ c[1] ** 2 + c[0] @ p13 @ c[2] ** 2
    S[1] = c[1] ** 3 @ m2 + c[0] ** 2 @ p12 @ c[1] + c[1] @ p23 @ c[2] ** 2
    S[2] = c[2] ** 3 @ m3 + c[0] ** 2 @ p13 @ c[2] + c[1] ** 2 @ p23 @ c[2]
    S *= dv / n
    return n, u, T, S


@njit(cache=True)
def moments_numba(f, nodes, dv, R_g):
    N1, N2, N3 = f.shape
    s0 = 0.0
    s1 = np.zeros(3)
    s2 = 0.0
    for i in range(N1):
        xi = nodes[i]
        for j in range(N2):
            yj = nodes[j]
            for k in range(N3):
                zk = nodes[k]
                v = f[i, j, k]
                s0 += v
                s1[0] += xi * v
                s1[1] += yj * v
                s1[2] += zk * v
                s2 += (xi * xi + yj * yj + zk * zk) * v
    n = dv * s0
    u = np.zeros(3)
    S = np.zeros(3)
    if not n > 0:
        return n, u, 0.0, S
    for a in range(3):
        u[a] = dv * s1[a] / n
    T = (dv * s2 - n * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2])) / (3.0 * n * R_g)
    if not T > 0:
        return n, u, T, S
    sc = 1.0 / np.sqrt(2.0 * R_g * T)
    for i in range(N1):
        c0 = (nodes[i] - u[0]) * sc
        for j in range(N2):
            c1 = (nodes[j] - u[1]) * sc
            for k in range(N3):
                c2 = (nodes[k] - u[2]) * sc
                w = f[i, j, k] * (c0 * c0 + c1 * c1 + c2 * c2)
                S[0] += c0 * w
                S[1] += c1 * w
                S[2] += c2 * w
    for a in range(3):
        S[a] *= dv / n
    return n, u, T, S


# -- Shakhov equilibrium --------------------------------------------------------


def shakhov_numpy(n, u, T, S, nodes, R_g, Pr):
    x = nodes
    two_rt = 2.0 * R_g * T
    s = 1.0 / np.sqrt(two_rt)
    c = [(x - u[a]) * s for a in range(3)]
    g = [np.exp(-(ca * ca)) / np.sqrt(np.pi * two_rt) for ca in c]
    fm = n * g[0][:, None, None] * g[1][None, :, None] * g[2][None, None, :]
    if not (S[0] or S[1] or S[2]):
        return fm
    c0 = c[0][:, None, None]
    c1 = c[1][None, :, None]
    c2 = c[2][None, None, :]
    csq = c0 * c0 + c1 * c1 + c2 * c2
    sc = S[0] * c0 + S[1] * c1 + S[2] * c2
    return fm * (1.0 + 0.8 * (1.0 - Pr) * sc * (csq - 2.5))


@njit(cache=True)
def shakhov_numba(n, u, T, S, nodes, R_g, Pr):
    N = nodes.shape[0]
    two_rt = 2.0 * R_g * T
    s = 1.0 / np.sqrt(two_rt)
    norm = 1.0 / np.sqrt(np.pi * two_rt)
    k = 0.8 * (1.0 - Pr)
    c = np.empty((3, N))
    g = np.empty((3, N))
    for a in range(3):
        for i in range(N):
            c[a, i] = (nodes[i] - u[a]) * s
            g[a, i] = norm * np.exp(-c[a, i] * c[a, i])
    out = np.empty((N, N, N))
    for i in range(N):
        for j in range(N):
            for l in range(N):
                csq = c[0, i] * c[0, i] + c[1, j] * c[1, j] + c[2, l] * c[2, l]
                sc = S[0] * c[0, i] + S[1] * c[1, j] + S[2] * c[2, l]
                out[i, j, l] = n * g[0, i] * g[1, j] * g[2, l] * (1.0 + k * sc * (csq - 2.5))
    return out


# -- upwind face fluxes ---------------------------------------------------------


def accumulate_fluxes_numpy(f, ghosts, face_left, face_right, face_ghost, area, normal, inv_vol, nodes, rhs):
    """Subtract ``(A/V) * upwind flux`` from ``rhs`` of both neighbours of every face.

    ``rhs[i] -= sum_j sign[i, j] A_j / V_i * (xi_n^+ f_L + xi_n^- f_R)``, with
    ``f_R = ghosts[face_ghost[j]]`` on boundary faces (``face_right[j] < 0``).
    """
    x = nodes
    for j in range(len(area)):
        nx, ny, nz = normal[j]
        xn = nx * x[:, None, None] + ny * x[None, :, None] + nz * x[None, None, :]
        L = face_left[j]
        R = face_right[j]
        fr = f[R] if R >= 0 else ghosts[face_ghost[j]]
        flux = area[j] * (np.maximum(xn, 0.0) * f[L] + np.minimum(xn, 0.0) * fr)
        rhs[L] -= inv_vol[L] * flux
        if R >= 0:
            rhs[R] += inv_vol[R] * flux


@njit(cache=True)
def accumulate_fluxes_numba(f, ghosts, face_left, face_right, face_ghost, area, normal, inv_vol, nodes, rhs):
    N = nodes.shape[0]
    for j in range(area.shape[0]):
        L = face_left[j]
        R = face_right[j]
        g = face_ghost[j]
        a = area[j]
        nx = normal[j, 0]
        ny = normal[j, 1]
        nz = normal[j, 2]
        wl = a * inv_vol[L]
        wr = a * inv_vol[R] if R >= 0 else 0.0
        for i in range(N):
            t0 = nx * nodes[i]
            for k in range(N):
                t1 = t0 + ny * nodes[k]
                for l in range(N):
                    xn = t1 + nz * nodes[l]
                    if xn > 0.0:
                        flux = xn * f[L, i, k, l]
                    elif R >= 0:
                        flux = xn * f[R, i, k, l]
                    else:
                        flux = xn * ghosts[g, i, k, l]
                    rhs[L, i, k, l] -= wl * flux
                    if R >= 0:
                        rhs[R, i, k, l] += wr * flux


if HAVE_NUMBA:
    moments = moments_numba
    shakhov = shakhov_numba
    accumulate_fluxes = accumulate_fluxes_numba
else:
    moments = moments_numpy
    shakhov = shakhov_numpy
    accumulate_fluxes = accumulate_fluxes_numpy
