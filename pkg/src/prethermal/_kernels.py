"""Compiled inner loops for the one-period spin map.

Spins are stored component-major, shape ``(3, N)``, with site index
``(iz * L + iy) * L + ix``. All kernels are single-threaded; parallelism is
done one level up (independent runs in separate processes).

The per-site trigonometry uses a branch-free sin/cos so LLVM can vectorize
the row loop; numba has no SVML here and ``math.sin``/``math.cos`` calls
otherwise dominate the cost of a period.
"""

import math

import numba as nb
import numpy as np

_TWO_OVER_PI = 0.63661977236758134308
# pi/2 split into three pieces of 33 significant bits (fdlibm)
_PIO2_1 = 1.57079632673412561417e00
_PIO2_2 = 6.07710050630396597660e-11
_PIO2_3 = 2.02226624871116645580e-21

_S1 = -1.66666666666666324348e-01
_S2 = 8.33333333332248946124e-03
_S3 = -1.98412698298579493134e-04
_S4 = 2.75573137070700676789e-06
_S5 = -2.50507602534068634195e-08
_S6 = 1.58969099521155010221e-10

_C1 = 4.16666666666666019037e-02
_C2 = -1.38888888888741095749e-03
_C3 = 2.48015872894767294178e-05
_C4 = -2.75573143513906633035e-07
_C5 = 2.08757232129817482790e-09
_C6 = -1.13596475577881948265e-11


@nb.njit(inline="always", cache=True)
def sincos(a):
    """Return ``(sin(a), cos(a))``, within 1 ulp for ``|a| < 1e5``."""
    k = math.floor(a * _TWO_OVER_PI + 0.5)
    r = a - k * _PIO2_1
    r = r - k * _PIO2_2
    r = r - k * _PIO2_3
    z = r * r
    s = r + r * z * (_S1 + z * (_S2 + z * (_S3 + z * (_S4 + z * (_S5 + z * _S6)))))
    c = 1.0 - 0.5 * z + z * z * (_C1 + z * (_C2 + z * (_C3 + z * (_C4 + z * (_C5 + z * _C6)))))
    q = k - 4.0 * math.floor(k * 0.25)
    odd = q == 1.0 or q == 3.0
    sn = c if odd else s
    cs = s if odd else c
    if q >= 2.0:
        sn = -sn
    if q == 1.0 or q == 2.0:
        cs = -cs
    return sn, cs


@nb.njit(cache=True)
def sincos_array(a, s_out, c_out):
    for i in range(a.size):
        s_out[i], c_out[i] = sincos(a[i])


@nb.njit(cache=True)
def step(S, O, L, h, half_T, c2, s2, krow):
    """One period ``S -> O`` on an ``L**3`` periodic cube.

    The effective field of every site is built from ``S`` only, so ``O`` must
    not alias ``S``. Neighbour order in the field sum is -x, +x, -y, +y, -z,
    +z, matching :func:`step_sites`.
    """
    sx = S[0].reshape((L, L, L))
    sy = S[1].reshape((L, L, L))
    sz = S[2].reshape((L, L, L))
    ox = O[0].reshape((L, L, L))
    oy = O[1].reshape((L, L, L))
    oz = O[2].reshape((L, L, L))
    for iz in range(L):
        zp = iz + 1 if iz + 1 < L else 0
        zm = iz - 1 if iz > 0 else L - 1
        for iy in range(L):
            yp = iy + 1 if iy + 1 < L else 0
            ym = iy - 1 if iy > 0 else L - 1
            row = sz[iz, iy]
            rym = sz[iz, ym]
            ryp = sz[iz, yp]
            rzm = sz[zm, iy]
            rzp = sz[zp, iy]
            krow[0] = h + (row[L - 1] + row[1 % L] + rym[0] + ryp[0] + rzm[0] + rzp[0]) / 6.0
            for ix in range(1, L - 1):
                krow[ix] = h + (row[ix - 1] + row[ix + 1] + rym[ix] + ryp[ix] + rzm[ix] + rzp[ix]) / 6.0
            krow[L - 1] = h + (row[L - 2] + row[0] + rym[L - 1] + ryp[L - 1] + rzm[L - 1] + rzp[L - 1]) / 6.0
            x_in = sx[iz, iy]
            y_in = sy[iz, iy]
            x_out = ox[iz, iy]
            y_out = oy[iz, iy]
            z_out = oz[iz, iy]
            for ix in range(L):
                s1, c1 = sincos(krow[ix] * half_T)
                x = c1 * x_in[ix] - s1 * y_in[ix]
                y = s1 * x_in[ix] + c1 * y_in[ix]
                z = row[ix]
                x_out[ix] = x
                y_out[ix] = c2 * y - s2 * z
                z_out[ix] = s2 * y + c2 * z


@nb.njit(cache=True)
def step_sites(S, O, neighbors, order, h, half_T, c2, s2):
    """Same map as :func:`step`, visiting sites in ``order`` via a neighbour table."""
    for k in range(order.size):
        i = order[k]
        nb_ = neighbors[i]
        kappa = h + (S[2, nb_[0]] + S[2, nb_[1]] + S[2, nb_[2]] + S[2, nb_[3]] + S[2, nb_[4]] + S[2, nb_[5]]) / 6.0
        s1, c1 = sincos(kappa * half_T)
        x = c1 * S[0, i] - s1 * S[1, i]
        y = s1 * S[0, i] + c1 * S[1, i]
        z = S[2, i]
        O[0, i] = x
        O[1, i] = c2 * y - s2 * z
        O[2, i] = s2 * y + c2 * z


@nb.njit(cache=True)
def renormalize(S):
    for i in range(S.shape[1]):
        inv = 1.0 / math.sqrt(S[0, i] * S[0, i] + S[1, i] * S[1, i] + S[2, i] * S[2, i])
        S[0, i] *= inv
        S[1, i] *= inv
        S[2, i] *= inv


@nb.njit(cache=True)
def advance(S, L, n, t0, h, half_T, c2, s2, renorm_every, rec_start, rec_end, m_out):
    """Apply ``n`` periods to ``S`` in place, starting at period index ``t0``.

    Spins are renormalized whenever the global period index is a multiple of
    ``renorm_every`` (``<= 0`` disables). The magnetization after period ``t``
    is stored in ``m_out[t - rec_start]`` for ``rec_start <= t < rec_end``.
    """
    N = S.shape[1]
    A = S
    B = np.empty_like(S)
    krow = np.empty(L)
    for k in range(1, n + 1):
        step(A, B, L, h, half_T, c2, s2, krow)
        A, B = B, A
        t = t0 + k
        if renorm_every > 0 and t % renorm_every == 0:
            renormalize(A)
        if rec_start <= t < rec_end:
            acc = 0.0
            for i in range(N):
                acc += A[2, i]
            m_out[t - rec_start] = acc / N
    if n % 2 == 1:
        S[:, :] = A


@nb.njit(cache=True)
def pair_sum_z(sz, L):
    """Sum of ``Sz_r * Sz_r'`` over unordered nearest-neighbour pairs."""
    s3 = sz.reshape((L, L, L))
    acc = 0.0
    for iz in range(L):
        zp = iz + 1 if iz + 1 < L else 0
        for iy in range(L):
            yp = iy + 1 if iy + 1 < L else 0
            for ix in range(L):
                xp = ix + 1 if ix + 1 < L else 0
                v = s3[iz, iy, ix]
                acc += v * (s3[iz, iy, xp] + s3[iz, yp, ix] + s3[zp, iy, ix])
    return acc
