"""Pure-numpy raster path.

Mirrors :mod:`basinmap._kernels` operation for operation, but advances every
still-active start point of a band in lock step.  Used when numba is missing
or disabled, and as the comparison baseline in the benchmark.

Complex products go through :func:`cmul` because numpy's SIMD complex
multiply may fuse multiply-adds, which the scalar kernels never do.
"""
import math

import numpy as np

from ._kernels import (
    CONVERGED,
    GENERALIZED,
    MAX_EXP_ARG,
    MODIFIED,
    NONCONVERGENT,
    NONFINITE,
    OK,
    POLE,
    SINGULAR,
    SINGULAR_ORBIT,
    TINY,
)


def cdiv(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    ar, ai = a.real, a.imag
    br, bi = b.real, b.imag
    first = np.abs(br) >= np.abs(bi)
    r1 = bi / br
    t1 = br + bi * r1
    r2 = br / bi
    t2 = br * r2 + bi
    re = np.where(first, (ar + ai * r1) / t1, (ar * r2 + ai) / t2)
    im = np.where(first, (ai - ar * r1) / t1, (ai * r2 - ar) / t2)
    return _pack(re, im)


def _pack(re, im):
    out = np.empty(re.shape, dtype=np.complex128)
    out.real = re
    out.imag = im
    return out


def cmul(a, b):
    ar, ai = a.real, a.imag
    br, bi = b.real, b.imag
    return _pack(ar * br - ai * bi, ar * bi + ai * br)


def scale(a, x):
    """Real scalar or array ``x`` times complex ``a``."""
    return _pack(a.real * x, a.imag * x)


def _finite(z):
    return np.isfinite(z.real) & np.isfinite(z.imag)


def eval_derivs(dtab, z, k):
    m = dtab.shape[1]
    out = np.zeros((k + 1,) + z.shape, dtype=np.complex128)
    for j in range(k + 1):
        acc = np.zeros_like(z)
        for c in range(m - 1 - j, -1, -1):
            acc = cmul(acc, z) + dtab[j, c]
        out[j] = acc
    return out


def modified_from(z, d, a0, a1):
    f, fp, fpp = d[0], d[1], d[2]
    num = cmul(f, fp)
    den = scale(cmul(fp, fp), a0) + scale(cmul(f, fpp), a1)
    code = np.full(z.shape, OK, dtype=np.int8)
    code[~(np.abs(den) >= TINY * (1.0 + np.abs(num)))] = SINGULAR
    code[~(_finite(num) & _finite(den))] = NONFINITE
    w = z - cdiv(num, den)
    code[(code == OK) & ~_finite(w)] = NONFINITE
    return code, w


def generalized_from(z, d, exps):
    s = np.zeros_like(z)
    code = np.full(z.shape, OK, dtype=np.int8)
    for n, a in enumerate(exps):
        if a == 0.0:
            continue
        code[(code == OK) & (d[n] == 0)] = POLE
        s = s + scale(cdiv(d[n + 1], d[n]), a)
    code[(code == OK) & ~_finite(s)] = NONFINITE
    code[(code == OK) & ~(np.abs(s) >= TINY)] = SINGULAR
    w = z - cdiv(1.0 + 0j, s)
    code[(code == OK) & ~_finite(w)] = NONFINITE
    return code, w


def principal_pow(c, p):
    # libm scalars, not numpy's SIMD transcendentals, to round like the kernels
    lr = np.array([math.log(abs(x)) if x != 0 else -math.inf for x in c.tolist()], dtype=np.float64)
    th = np.array([math.atan2(x.imag, x.real) for x in c.tolist()], dtype=np.float64)
    e = p * lr
    ang = p * th
    re = np.empty(c.shape, dtype=np.float64)
    im = np.empty(c.shape, dtype=np.float64)
    for i, (ei, ai) in enumerate(zip(e.tolist(), ang.tolist())):
        if ei > MAX_EXP_ARG:
            re[i], im[i] = math.inf, 0.0
            continue
        mag = math.exp(ei)
        re[i] = mag * math.cos(ai)
        im[i] = mag * math.sin(ai)
    return _pack(re, im)


def gerlach_from(z, d, order_n):
    code = np.full(z.shape, OK, dtype=np.int8)
    u = []
    inv_fact = 1.0
    for k in range(order_n + 1):
        if k > 0:
            inv_fact = inv_fact / k
        u.append(scale(d[k], inv_fact))
    depth = order_n
    for m in range(2, order_n + 1):
        du = [scale(u[k + 1], float(k + 1)) for k in range(depth)]
        c0 = du[0]
        code[(code == OK) & (c0 == 0)] = POLE
        p = -1.0 / m
        w = [principal_pow(c0, p)]
        inv_c0 = cdiv(1.0 + 0j, c0)
        for k in range(1, depth):
            acc = np.zeros_like(z)
            for j in range(1, k + 1):
                acc = acc + scale(cmul(du[j], w[k - j]), (p + 1.0) * j - k)
            w.append(scale(cmul(acc, inv_c0), 1.0 / k))
        v = []
        for k in range(depth):
            acc = np.zeros_like(z)
            for j in range(k + 1):
                acc = acc + cmul(u[j], w[k - j])
            v.append(acc)
        u = v
        depth -= 1
    big_f, big_fp = u[0], u[1]
    code[(code == OK) & ~(np.abs(big_fp) >= TINY * (1.0 + np.abs(big_f)))] = SINGULAR
    wz = z - cdiv(big_f, big_fp)
    code[(code == OK) & ~_finite(wz)] = NONFINITE
    return code, wz


def classify(z, roots, match_r):
    if roots.size == 0:
        return np.full(z.shape, -1, dtype=np.int64)
    dist = np.abs(z[:, None] - roots[None, :])
    best = np.argmin(dist, axis=1)
    best_d = dist[np.arange(z.size), best]
    return np.where(best_d < match_r, best, -1)


def orbit_block(kind, dtab, zs, a0s, a1s, exps, order_n, eps, max_iter, roots, match_r,
                status, idx, its, zf):
    """Same contract as :func:`basinmap._kernels.orbit_block`."""
    if kind == MODIFIED:
        kd = 2
    elif kind == GENERALIZED:
        kd = exps.shape[0]
    else:
        kd = order_n
    act = np.arange(zs.shape[0])
    z = zs.astype(np.complex128, copy=True)
    a0 = np.asarray(a0s, dtype=np.float64)
    a1 = np.asarray(a1s, dtype=np.float64)
    with np.errstate(all="ignore"):
        for n in range(max_iter + 1):
            if act.size == 0:
                break
            d = eval_derivs(dtab, z, kd)
            conv = np.abs(d[0]) < eps
            if conv.any():
                hit = act[conv]
                status[hit] = CONVERGED
                idx[hit] = classify(z[conv], roots, match_r)
                its[hit] = n
                zf[hit] = z[conv]
                keep = ~conv
                act, z, d, a0, a1 = act[keep], z[keep], d[:, keep], a0[keep], a1[keep]
            if n == max_iter:
                status[act] = NONCONVERGENT
                idx[act] = -1
                its[act] = n
                zf[act] = z
                break
            if kind == MODIFIED:
                code, w = modified_from(z, d, a0, a1)
            elif kind == GENERALIZED:
                code, w = generalized_from(z, d, exps)
            else:
                code, w = gerlach_from(z, d, order_n)
            bad = code != OK
            if bad.any():
                hit = act[bad]
                status[hit] = SINGULAR_ORBIT
                idx[hit] = -1
                its[hit] = n
                zf[hit] = z[bad]
                keep = ~bad
                act, w, a0, a1 = act[keep], w[keep], a0[keep], a1[keep]
            z = w
