"""Measurements on orbits and rasters: convergence order, nodules, boundaries."""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import mpmath
import numpy as np
from scipy import ndimage

from .core import GeneralizedExponents, IterationParams, Polynomial, StepMap
from .errors import InsufficientSamples, OrbitDiverged, PoleAtDerivativeZero, SingularDenominator
from .raster import BasinRaster, DomainRect, Raster, SweepRaster, render_basin, render_sweep
from .solver import RootSet, Status, iterate, reference_roots

DEFAULT_DPS = 300
WINDOW_HI = 1e-2
FLOAT_WINDOW_LO = 1e-12
MAX_ORBIT_STEPS = 200


@dataclass(frozen=True)
class OrderEstimate:
    empirical_order: float
    asymptotic_constant: float
    samples_used: int
    predicted_order: float
    predicted_constant: Optional[float]
    root: complex = 0j
    triple_orders: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "empirical_order": self.empirical_order,
            "asymptotic_constant": self.asymptotic_constant,
            "samples_used": self.samples_used,
            "predicted_order": self.predicted_order,
            "predicted_constant": self.predicted_constant,
            "root": [self.root.real, self.root.imag],
            "triple_orders": list(self.triple_orders),
        }


def order_from_errors(errors: Sequence, lo=FLOAT_WINDOW_LO, hi=WINDOW_HI, max_triples: int = 5):
    """Empirical order and constant from a sequence of error moduli.

    A triple ``(e[n-1], e[n], e[n+1])`` is usable when it is strictly
    decreasing with ``e[n] < hi`` and ``e[n+1] > lo``, so no member sits at
    the rounding floor.  The order is the median
    of ``ln(e[n+1]/e[n]) / ln(e[n]/e[n-1])`` over the last ``max_triples``
    usable triples; the constant is ``e[n+1] / e[n]**round(order)`` on the
    last one.  Returns ``(order, constant, samples_used, per_triple_orders)``.
    """
    logs = [mpmath.log(e) if e > 0 else None for e in errors]
    log_lo, log_hi = mpmath.log(lo), mpmath.log(hi)
    triples = []
    for n in range(1, len(logs) - 1):
        a, b, c = logs[n - 1], logs[n], logs[n + 1]
        if a is None or b is None or c is None:
            continue
        if b < log_hi and a > b > c > log_lo:
            triples.append(n)
    if not triples:
        raise InsufficientSamples("no usable error triple inside the estimation window; start farther from the root")
    triples = triples[-max_triples:]
    orders = [float((logs[n + 1] - logs[n]) / (logs[n] - logs[n - 1])) for n in triples]
    order = statistics.median(orders)
    q = max(1, round(order))
    last = triples[-1]
    constant = float(mpmath.exp(logs[last + 1] - q * logs[last]))
    used = len(set(k for n in triples for k in (n - 1, n, n + 1)))
    return order, constant, used, tuple(orders)


# extended-precision copies of the maps; independent of the float kernels

def _mp_table(poly: Polynomial, rows: int):
    c = [mpmath.mpc(x.real, x.imag) for x in poly.coefficients]
    m = len(c)
    return [[math.perm(k + j, j) * c[k + j] for k in range(m - j)] for j in range(rows)]


def _mp_derivs(tab, z, k):
    out = []
    for j in range(k + 1):
        acc = mpmath.mpc(0)
        for coef in reversed(tab[j]) if j < len(tab) else ():
            acc = acc * z + coef
        out.append(acc)
    return out


def _mp_gerlach(d, z, order_n):
    u = [d[k] / math.factorial(k) for k in range(order_n + 1)]
    depth = order_n
    for m in range(2, order_n + 1):
        du = [u[k + 1] * (k + 1) for k in range(depth)]
        if du[0] == 0:
            raise PoleAtDerivativeZero("F_m' vanished")
        p = mpmath.mpf(-1) / m
        w = [mpmath.power(du[0], p)]
        for k in range(1, depth):
            acc = sum(du[j] * w[k - j] * ((p + 1) * j - k) for j in range(1, k + 1))
            w.append(acc / (k * du[0]))
        u = [sum(u[j] * w[k - j] for j in range(k + 1)) for k in range(depth)]
        depth -= 1
    if u[1] == 0:
        raise SingularDenominator("F' vanished")
    return z - u[0] / u[1]


def mp_step(poly: Polynomial, z, params: IterationParams, step_map: StepMap, tab=None):
    """One map application in mpmath arithmetic at the current working precision."""
    if step_map.kind == "modified":
        tab = tab or _mp_table(poly, 3)
        f, fp, fpp = _mp_derivs(tab, z, 2)
        den = params.a0 * fp * fp + params.a1 * f * fpp
        if den == 0:
            raise SingularDenominator("denominator vanished")
        return z - f * fp / den
    if step_map.kind == "generalized":
        exps = step_map.exponents.exponents
        tab = tab or _mp_table(poly, len(exps) + 1)
        d = _mp_derivs(tab, z, len(exps))
        s = mpmath.mpc(0)
        for n, a in enumerate(exps):
            if a == 0:
                continue
            if d[n] == 0:
                raise PoleAtDerivativeZero(f"f^({n}) vanished")
            s += a * d[n + 1] / d[n]
        if s == 0:
            raise SingularDenominator("log-derivative sum vanished")
        return z - 1 / s
    tab = tab or _mp_table(poly, step_map.order_n + 1)
    return _mp_gerlach(_mp_derivs(tab, z, step_map.order_n), z, step_map.order_n)


def _refine_root(poly: Polynomial, guess: complex):
    tab = _mp_table(poly, 2)
    a = mpmath.mpc(guess.real, guess.imag)
    tol = mpmath.mpf(10) ** (-mpmath.mp.dps + 5)
    for _ in range(200):
        f, fp = _mp_derivs(tab, a, 1)
        if fp == 0:
            break
        delta = f / fp
        a -= delta
        if abs(delta) <= tol * (1 + abs(a)):
            break
    return a


def predicted_rate(poly: Polynomial, params: IterationParams, step_map: StepMap, root: complex):
    """Asymptotic order and error constant the theory gives for this map at ``root``.

    Modified map: order 1 with ``|1 - 1/a0|`` when ``a0 != 1``; order 2 with
    ``|(1/2 + a1) f''/f'|`` when ``a0 = 1``; Halley gives order 3 with
    ``|c2**2 - c3|``, ``c_k = f^(k) / (k! f')``.  The generalized map has the
    same structure with ``f''/(2f') + sum_n a_n f^(n+1)/f^(n)`` as the
    second-order coefficient.  Gerlach of order n gives n + 1.
    """
    d = [complex(x) for x in _mp_derivs(_mp_table(poly, 5), mpmath.mpc(root.real, root.imag), 3)]
    fp = d[1]
    if step_map.kind == "gerlach":
        return float(step_map.order_n + 1), None
    if step_map.kind == "modified":
        a0, extra = params.a0, params.a1 * d[2] / fp
    else:
        exps = step_map.exponents.exponents
        a0 = exps[0]
        dd = [complex(x) for x in _mp_derivs(_mp_table(poly, len(exps) + 1), mpmath.mpc(root.real, root.imag), len(exps))]
        extra = 0j
        for n in range(1, len(exps)):
            if exps[n] == 0:
                continue
            if dd[n] == 0:
                return 2.0, None
            extra += exps[n] * dd[n + 1] / dd[n]
    if a0 != 1:
        return 1.0, abs(1 - 1 / a0)
    b2 = d[2] / (2 * fp) + extra
    if abs(b2) > 1e-14 * (1 + abs(d[2] / fp)):
        return 2.0, abs(b2)
    if step_map.kind == "modified":
        c2, c3 = d[2] / (2 * fp), d[3] / (6 * fp)
        return 3.0, abs(c2 * c2 - c3)
    return 3.0, None


def estimate_order(
    poly: Polynomial,
    z0: complex,
    root: complex | None = None,
    params: IterationParams | None = None,
    step_map: StepMap | None = None,
    *,
    dps: int | None = DEFAULT_DPS,
    max_triples: int = 5,
) -> OrderEstimate:
    """Measure the convergence order of the orbit from ``z0``.

    The orbit is first run in double precision with ``epsilon = 1e-13`` and
    ``max_iter = 200``; if it does not converge (to ``root`` when given),
    :class:`OrbitDiverged` is raised.  The measured orbit is then recomputed
    at ``dps`` decimal digits so that high orders still leave several error
    triples above the rounding floor; ``dps=None`` measures the double
    precision orbit with the window ``(1e-12, 1e-2)`` instead.
    """
    params = params or IterationParams()
    step_map = step_map or StepMap.modified()
    roots = reference_roots(poly)
    check = iterate(poly, z0, IterationParams(params.a0, params.a1, 1e-13, MAX_ORBIT_STEPS), roots, step_map)
    final = check.final_z
    near = roots.nearest(final)
    if check.status != Status.CONVERGED and not (near is not None and abs(final - roots.roots[near]) < 1e-8):
        raise OrbitDiverged(f"orbit from {z0} ended {check.status.name} after {check.iterations} steps")
    if root is None:
        root = roots.roots[near] if near is not None else final
    elif abs(final - complex(root)) > 1e-6 * (1 + abs(complex(root))):
        raise OrbitDiverged(f"orbit from {z0} converged to {final}, not {root}")
    root = complex(root)

    if dps is None:
        from .solver import orbit as float_orbit

        _, zs = float_orbit(poly, z0, IterationParams(params.a0, params.a1, 1e-300, MAX_ORBIT_STEPS), step_map)
        alpha = complex(_refine_root_float(poly, root))
        errors = [abs(z - alpha) for z in zs]
        lo = FLOAT_WINDOW_LO
    else:
        with mpmath.workdps(dps):
            alpha = _refine_root(poly, root)
            floor = mpmath.mpf(10) ** (-int(0.8 * dps))
            rows = {"modified": 3, "generalized": (step_map.exponents.order + 2) if step_map.exponents else 0,
                    "gerlach": (step_map.order_n or 0) + 1}[step_map.kind]
            tab = _mp_table(poly, rows)
            z = mpmath.mpc(complex(z0).real, complex(z0).imag)
            errors = []
            for _ in range(MAX_ORBIT_STEPS + 1):
                e = abs(z - alpha)
                errors.append(e)
                if e < floor:
                    break
                try:
                    z = mp_step(poly, z, params, step_map, tab)
                except (SingularDenominator, PoleAtDerivativeZero):
                    break
            lo = floor
            alpha = complex(alpha)
        errors = [mpmath.mpf(e) for e in errors]
    order, constant, used, orders = order_from_errors(errors, lo, WINDOW_HI, max_triples)
    p_order, p_const = predicted_rate(poly, params, step_map, root)
    return OrderEstimate(order, constant, used, p_order, p_const, complex(alpha), orders)


def _refine_root_float(poly: Polynomial, guess: complex) -> complex:
    with mpmath.workdps(40):
        return complex(_refine_root(poly, guess))


def non_convergent_fraction(raster: Raster) -> float:
    """Share of cells that are non-convergent or singular."""
    bad = raster.status != Status.CONVERGED
    return float(np.count_nonzero(bad)) / bad.size


@dataclass(frozen=True)
class Nodule:
    cell_count: int
    centroid: complex | tuple[float, float]
    bounding_box: tuple[float, float, float, float]
    area: float
    touches_domain_edge: bool = False


@dataclass(frozen=True)
class NoduleReport:
    nodules: tuple[Nodule, ...]
    total_convergent_enclosed_area: float
    labels: np.ndarray = field(repr=False, compare=False, default=None)

    def to_dict(self) -> dict:
        def pt(c):
            return [c.real, c.imag] if isinstance(c, complex) else list(c)

        return {
            "nodule_count": len(self.nodules),
            "total_convergent_enclosed_area": self.total_convergent_enclosed_area,
            "nodules": [
                {"cell_count": n.cell_count, "centroid": pt(n.centroid), "bounding_box": list(n.bounding_box),
                 "area": n.area, "touches_domain_edge": n.touches_domain_edge}
                for n in self.nodules
            ],
        }


def enclosed_components(mask: np.ndarray):
    """4-connected components of ``mask`` that do not touch the array edge.

    Returns the label image and the list of interior label ids.
    """
    labels, count = ndimage.label(mask)
    edge = np.unique(np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]]))
    inner = [k for k in range(1, count + 1) if k not in set(edge.tolist())]
    return labels, inner


def detect_nodules(raster: Raster, min_cells: int = 4, regular_iter: int | None = None) -> NoduleReport:
    """Converged components completely surrounded by failed cells.

    A component qualifies when it is a maximal 4-connected set of converged
    cells (any root, classified or not), does not touch the raster edge and
    has at least ``min_cells`` cells.  Sorted by size, largest first.

    With ``regular_iter`` set, only cells that converged within that many
    iterations count as regular, so slow converged cells act as part of the
    enclosing region.
    """
    conv = raster.status == Status.CONVERGED
    if regular_iter is not None:
        conv &= raster.iterations <= regular_iter
    labels, inner = enclosed_components(conv)
    xs, ys = raster.coords()
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=inner) if inner else []
    nodules = []
    for k, size in zip(inner, sizes):
        size = int(size)
        if size < min_cells:
            continue
        jj, ii = np.nonzero(labels == k)
        cx, cy = float(xs[ii].mean()), float(ys[jj].mean())
        centroid = complex(cx, cy) if isinstance(raster, BasinRaster) else (cx, cy)
        box = (float(xs[ii].min()), float(xs[ii].max()), float(ys[jj].min()), float(ys[jj].max()))
        nodules.append(Nodule(size, centroid, box, size * raster.cell_area))
    nodules.sort(key=lambda n: (-n.cell_count, n.bounding_box))
    total = float(sum(n.area for n in nodules))
    return NoduleReport(tuple(nodules), total, labels)


class GrowthPoint(NamedTuple):
    a1: float
    total_area: float
    nodule_count: int


def nodule_growth_curve(
    poly: Polynomial,
    a0: float,
    a1_values: Sequence[float],
    domain: DomainRect | None = None,
    resolution: tuple[int, int] | None = None,
    *,
    min_cells: int = 4,
    regular_iter: int | None = None,
    epsilon: float = 1e-5,
    max_iter: int = 40,
    workers: int | None = None,
    backend: str | None = None,
) -> list[GrowthPoint]:
    """Total nodule area of a basin render for each a1."""
    domain = domain or DomainRect()
    if resolution is not None:
        domain = DomainRect(domain.x_min, domain.x_max, domain.y_min, domain.y_max, *resolution)
    roots = reference_roots(poly)
    out = []
    for a1 in a1_values:
        r = render_basin(poly, IterationParams(a0, a1, epsilon, max_iter), StepMap.modified(), domain,
                         roots=roots, workers=workers, backend=backend)
        rep = detect_nodules(r, min_cells, regular_iter)
        out.append(GrowthPoint(float(a1), rep.total_convergent_enclosed_area, len(rep.nodules)))
    return out


def _cell_labels(raster: Raster) -> np.ndarray:
    # converged cells keep their root index (-1 when unclassified); failures get distinct negatives
    return np.where(raster.status == Status.CONVERGED, raster.root_index, -2 - raster.status.astype(np.int64))


def boundary_mask(raster: Raster) -> np.ndarray:
    lab = _cell_labels(raster)
    mask = np.zeros(lab.shape, dtype=bool)
    dv = lab[1:, :] != lab[:-1, :]
    dh = lab[:, 1:] != lab[:, :-1]
    mask[1:, :] |= dv
    mask[:-1, :] |= dv
    mask[:, 1:] |= dh
    mask[:, :-1] |= dh
    return mask


def extract_boundary(raster: Raster) -> set[tuple[int, int]]:
    """Cells ``(i, j)`` (column, row) with a 4-neighbour of another root or status."""
    jj, ii = np.nonzero(boundary_mask(raster))
    return set(zip(ii.tolist(), jj.tolist()))


def repulsive_zero_scan(
    poly: Polynomial,
    a1_values: Sequence[float],
    probe_radius: float = 0.05,
    a0: float = 1.0,
    *,
    probes: int = 16,
    steps: int = 5,
) -> list[tuple[float, bool]]:
    """Whether the origin attracts nearby orbits, per a1.

    Sixteen start points on the circle ``|z| = probe_radius``; the origin
    counts as attracting when some orbit's distance to 0 shrinks at each of
    its first ``steps`` steps (or reaches 0 and stays).  This is a proxy for
    stability of the zero that ``f'(0) = 0`` gives ``f**a0 * f'**a1`` when
    ``a1 > 0``, not a proof.
    """
    from .core import modified_step

    out = []
    for a1 in a1_values:
        attracted = False
        for k in range(probes):
            z = probe_radius * complex(math.cos(2 * math.pi * k / probes), math.sin(2 * math.pi * k / probes))
            dist = abs(z)
            ok = True
            for _ in range(steps):
                try:
                    z = modified_step(poly, z, a0, a1)
                except ArithmeticError:
                    ok = False
                    break
                new = abs(z)
                if not (new < dist or new == dist == 0):
                    ok = False
                    break
                dist = new
            if ok:
                attracted = True
                break
        out.append((float(a1), attracted))
    return out


def row_failures(poly: Polynomial, x_range: tuple[float, float, int], a1: float, a0: float = 1.0,
                 epsilon: float = 1e-5, max_iter: int = 40, roots: RootSet | None = None,
                 backend: str | None = None) -> int:
    """Non-convergent plus singular cells on one real-axis sweep row."""
    s = render_sweep(poly, x_range, [a1], a0, epsilon, max_iter, roots=roots, workers=1, backend=backend)
    return int(np.count_nonzero(s.status != Status.CONVERGED))


def critical_a1_bracket(
    poly: Polynomial,
    x_range: tuple[float, float, int],
    a1_clean: float,
    a1_chaotic: float,
    tol: float = 1e-3,
    a0: float = 1.0,
    epsilon: float = 1e-5,
    max_iter: int = 40,
    backend: str | None = None,
) -> tuple[float, float]:
    """Bisect for the a1 where failures first appear on a real-axis row.

    ``a1_clean`` must give a row without failures and ``a1_chaotic`` one
    with at least one.  Returns ``(chaotic_side, clean_side)`` less than
    ``tol`` apart.  If failures switch on and off more than once between
    the two ends, this finds one of the switches.
    """
    roots = reference_roots(poly)

    def bad(a):
        return row_failures(poly, x_range, a, a0, epsilon, max_iter, roots, backend) > 0

    if bad(a1_clean):
        raise ValueError(f"row at a1 = {a1_clean} already has failures")
    if not bad(a1_chaotic):
        raise ValueError(f"row at a1 = {a1_chaotic} has no failures")
    clean, chaotic = float(a1_clean), float(a1_chaotic)
    while abs(clean - chaotic) > tol:
        mid = 0.5 * (clean + chaotic)
        if bad(mid):
            chaotic = mid
        else:
            clean = mid
    return chaotic, clean
