"""Scalar inner loops shared by the point API and the numba raster path.

Everything here is written in the numba-compatible subset of Python and
compiled with :func:`basinmap._accel.jit`.  The vectorized numpy fallback in
:mod:`basinmap._vectorized` repeats the same floating-point operations in
the same order, so both backends produce identical bits for the modified
and generalized maps.

Complex division never uses the ``/`` operator on complex values: CPython,
numpy and numba each round it differently, so :func:`cdiv` spells out
Smith's algorithm in real arithmetic.
"""
import math

import numpy as np

from ._accel import jit

# step codes
OK = 0
SINGULAR = 1
POLE = 2
NONFINITE = 3

# orbit statuses (match solver.Status)
CONVERGED = 0
NONCONVERGENT = 1
SINGULAR_ORBIT = 2

# map kinds
MODIFIED = 0
GENERALIZED = 1
GERLACH = 2

TINY = 1e-300
MAX_EXP_ARG = 709.0


@jit
def cdiv(a, b):
    ar = a.real
    ai = a.imag
    br = b.real
    bi = b.imag
    if abs(br) >= abs(bi):
        if br == 0.0:
            return complex(math.nan, math.nan)
        r = bi / br
        t = br + bi * r
        return complex((ar + ai * r) / t, (ai - ar * r) / t)
    r = br / bi
    t = br * r + bi
    return complex((ar * r + ai) / t, (ai * r - ar) / t)


@jit
def isfinite_c(z):
    return math.isfinite(z.real) and math.isfinite(z.imag)


@jit
def eval_derivs(dtab, z, k, out):
    # dtab[j, :] = ascending coefficients of the j-th derivative
    m = dtab.shape[1]
    for j in range(k + 1):
        acc = 0j
        for c in range(m - 1 - j, -1, -1):
            acc = acc * z + dtab[j, c]
        out[j] = acc


@jit
def modified_from(z, d, a0, a1):
    f = d[0]
    fp = d[1]
    fpp = d[2]
    num = f * fp
    den = a0 * (fp * fp) + a1 * (f * fpp)
    if not (isfinite_c(num) and isfinite_c(den)):
        return NONFINITE, z
    if not abs(den) >= TINY * (1.0 + abs(num)):
        return SINGULAR, z
    w = z - cdiv(num, den)
    if not isfinite_c(w):
        return NONFINITE, z
    return OK, w


@jit
def generalized_from(z, d, exps):
    s = 0j
    for n in range(exps.shape[0]):
        a = exps[n]
        if a == 0.0:
            continue
        if d[n] == 0j:
            return POLE, z
        s = s + a * cdiv(d[n + 1], d[n])
    if not isfinite_c(s):
        return NONFINITE, z
    if not abs(s) >= TINY:
        return SINGULAR, z
    w = z - cdiv(1.0 + 0j, s)
    if not isfinite_c(w):
        return NONFINITE, z
    return OK, w


@jit
def principal_pow(c, p):
    lr = math.log(abs(c))
    th = math.atan2(c.imag, c.real)
    e = p * lr
    if e > MAX_EXP_ARG:
        return complex(math.inf, 0.0)
    mag = math.exp(e)
    ang = p * th
    return complex(mag * math.cos(ang), mag * math.sin(ang))


@jit
def gerlach_from(z, d, order_n, work):
    # work rows: jet of F_m, its derivative jet, the power jet, scratch
    u = work[0]
    du = work[1]
    w = work[2]
    v = work[3]
    inv_fact = 1.0
    for k in range(order_n + 1):
        if k > 0:
            inv_fact = inv_fact / k
        u[k] = d[k] * inv_fact
    depth = order_n
    for m in range(2, order_n + 1):
        for k in range(depth):
            du[k] = u[k + 1] * float(k + 1)
        c0 = du[0]
        if c0 == 0j:
            return POLE, z
        p = -1.0 / m
        w[0] = principal_pow(c0, p)
        inv_c0 = cdiv(1.0 + 0j, c0)
        for k in range(1, depth):
            acc = 0j
            for j in range(1, k + 1):
                acc = acc + du[j] * w[k - j] * ((p + 1.0) * j - k)
            w[k] = acc * inv_c0 * (1.0 / k)
        for k in range(depth):
            acc = 0j
            for j in range(k + 1):
                acc = acc + u[j] * w[k - j]
            v[k] = acc
        for k in range(depth):
            u[k] = v[k]
        depth -= 1
    big_f = u[0]
    big_fp = u[1]
    if not abs(big_fp) >= TINY * (1.0 + abs(big_f)):
        return SINGULAR, z
    wz = z - cdiv(big_f, big_fp)
    if not isfinite_c(wz):
        return NONFINITE, z
    return OK, wz


@jit
def derivs_needed(kind, exps, order_n):
    if kind == MODIFIED:
        return 2
    if kind == GENERALIZED:
        return exps.shape[0]
    return order_n


@jit
def step_from(kind, z, d, a0, a1, exps, order_n, work):
    if kind == MODIFIED:
        return modified_from(z, d, a0, a1)
    if kind == GENERALIZED:
        return generalized_from(z, d, exps)
    return gerlach_from(z, d, order_n, work)


@jit
def classify(z, roots, match_r):
    best = -1
    best_d = math.inf
    for k in range(roots.shape[0]):
        dist = abs(z - roots[k])
        if dist < best_d:
            best_d = dist
            best = k
    if best_d < match_r:
        return best
    return -1


@jit
def run_orbit(kind, dtab, z0, a0, a1, exps, order_n, eps, max_iter, roots, match_r, d, work):
    kd = derivs_needed(kind, exps, order_n)
    z = z0
    n = 0
    while True:
        eval_derivs(dtab, z, kd, d)
        if abs(d[0]) < eps:
            return CONVERGED, classify(z, roots, match_r), n, z
        if n >= max_iter:
            return NONCONVERGENT, -1, n, z
        code, w = step_from(kind, z, d, a0, a1, exps, order_n, work)
        if code != OK:
            return SINGULAR_ORBIT, -1, n, z
        z = w
        n += 1


@jit
def orbit_block(kind, dtab, zs, a0s, a1s, exps, order_n, eps, max_iter, roots, match_r,
                status, idx, its, zf):
    nrow = dtab.shape[0]
    d = np.zeros(nrow, dtype=np.complex128)
    work = np.zeros((4, nrow), dtype=np.complex128)
    for p in range(zs.shape[0]):
        s, r, n, z = run_orbit(kind, dtab, zs[p], a0s[p], a1s[p], exps, order_n, eps, max_iter,
                               roots, match_r, d, work)
        status[p] = s
        idx[p] = r
        its[p] = n
        zf[p] = z


@jit
def orbit_trace(kind, dtab, z0, a0, a1, exps, order_n, eps, max_iter, out):
    """Fill ``out`` with z_0, z_1, ... and return (status, count).

    Stops like :func:`run_orbit`; ``out`` must hold ``max_iter + 1`` entries.
    """
    nrow = dtab.shape[0]
    d = np.zeros(nrow, dtype=np.complex128)
    work = np.zeros((4, nrow), dtype=np.complex128)
    kd = derivs_needed(kind, exps, order_n)
    z = z0
    n = 0
    out[0] = z
    while True:
        eval_derivs(dtab, z, kd, d)
        if abs(d[0]) < eps:
            return CONVERGED, n + 1
        if n >= max_iter:
            return NONCONVERGENT, n + 1
        code, w = step_from(kind, z, d, a0, a1, exps, order_n, work)
        if code != OK:
            return SINGULAR_ORBIT, n + 1
        z = w
        n += 1
        out[n] = z
