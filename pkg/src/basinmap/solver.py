"""Orbits under the stopping rule ``|f(z_n)| < epsilon``, and root attribution."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .core import IterationParams, Polynomial, StepMap
from .errors import MergedRoots, NoConvergence

# relative pairwise distance below which two computed roots count as one
MERGE_TOL = 1e-6


class Status(enum.IntEnum):
    CONVERGED = K.CONVERGED
    NONCONVERGENT = K.NONCONVERGENT
    SINGULAR = K.SINGULAR_ORBIT


@dataclass(frozen=True)
class RootSet:
    roots: tuple[complex, ...]
    match_radius: float

    def __post_init__(self):
        roots = tuple(complex(r) for r in self.roots)
        object.__setattr__(self, "roots", roots)
        if not self.match_radius > 0:
            raise ValueError("match_radius must be positive")
        if len(roots) > 1:
            dmin = _min_pairwise(roots)
            # half the minimum distance is the default and the largest radius allowed
            if dmin < 2 * self.match_radius * (1 - 1e-12):
                raise ValueError(f"roots {dmin:.3g} apart cannot be separated with match_radius {self.match_radius:.3g}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.roots, dtype=np.complex128)

    def nearest(self, z: complex) -> Optional[int]:
        k = K.classify(complex(z), self.as_array(), float(self.match_radius))
        return None if k < 0 else int(k)


@dataclass(frozen=True)
class ConvergenceRecord:
    status: Status
    root_index: Optional[int]
    iterations: int
    final_z: complex


def _min_pairwise(roots: Sequence[complex]) -> float:
    best = math.inf
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            best = min(best, abs(roots[i] - roots[j]))
    return best


def _horner_pair(c: np.ndarray, z: np.ndarray):
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for coef in c[::-1]:
        dp = dp * z + p
        p = p * z + coef
    return p, dp


def aberth(coefficients: Sequence[complex], max_iter: int = 500, tol: float = 1e-15) -> np.ndarray:
    """All roots of a polynomial by the Aberth-Ehrlich simultaneous iteration.

    ``coefficients`` are ascending.  Raises :class:`NoConvergence` when the
    corrections have not shrunk below ``tol`` (relative) after ``max_iter``
    sweeps.
    """
    c = np.asarray(coefficients, dtype=np.complex128)
    c = c / c[-1]
    n = len(c) - 1
    if n < 1:
        return np.zeros(0, dtype=np.complex128)
    # Cauchy bound on the root moduli, off-axis start angles
    radius = 1 + np.max(np.abs(c[:-1]))
    z = 0.5 * radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            p, dp = _horner_pair(c, z)
            done = p == 0
            ratio = np.where(done, 0, p / np.where(done, 1, dp))
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, 1)
            inv = 1 / diff
            np.fill_diagonal(inv, 0)
            corr = ratio / (1 - ratio * inv.sum(axis=1))
            corr = np.where(done, 0, corr)
            if not np.all(np.isfinite(corr)):
                raise NoConvergence("simultaneous iteration produced non-finite corrections")
            z = z - corr
            if np.all(np.abs(corr) <= tol * (1 + np.abs(z))):
                return z
    raise NoConvergence(f"simultaneous iteration did not converge in {max_iter} sweeps")


def _polish(c: np.ndarray, r: complex, steps: int = 8) -> complex:
    best, best_res = r, abs(np.polynomial.polynomial.polyval(r, c))
    for _ in range(steps):
        p, dp = _horner_pair(c, np.array([best]))
        if dp[0] == 0 or p[0] == 0:
            break
        cand = best - p[0] / dp[0]
        res = abs(np.polynomial.polynomial.polyval(cand, c))
        if res >= best_res:
            break
        best, best_res = complex(cand), res
    return complex(best)


def _angle_key(r: complex):
    # counter-clockwise from the positive real axis; round so rounding noise cannot reorder
    a = math.atan2(r.imag, r.real)
    if a < -1e-9:
        a += 2 * math.pi
    return (round(max(a, 0.0), 9), round(abs(r), 9))


def reference_roots(poly: Polynomial, match_radius: float | None = None) -> RootSet:
    """Zeros of ``poly`` for classifying converged orbits.

    ``match_radius`` defaults to half the smallest pairwise root distance
    (infinite for a linear polynomial).  Raises :class:`MergedRoots` for
    polynomials with a multiple root and :class:`NoConvergence` when the
    roots cannot be resolved to the residual the classifier needs.
    """
    if poly.degree < 1:
        raise ValueError("polynomial degree must be >= 1")
    c = np.asarray(poly.coefficients, dtype=np.complex128)
    roots = [_polish(c, r) for r in aberth(c)]
    scale = 1 + max(abs(x) for x in poly.coefficients)
    for r in roots:
        res = abs(poly(r))
        if not res < 1e-10 * scale:
            raise NoConvergence(f"root {r:.6g} has residual {res:.3g}")
    dmin = _min_pairwise(roots)
    if dmin < MERGE_TOL * (1 + max(abs(r) for r in roots)):
        raise MergedRoots(f"roots closer than {dmin:.3g}; polynomial has a multiple root")
    roots.sort(key=_angle_key)
    if match_radius is None:
        match_radius = dmin / 2 if math.isfinite(dmin) else math.inf
    return RootSet(tuple(roots), float(match_radius))


def iterate(
    poly: Polynomial,
    z0: complex,
    params: IterationParams | None = None,
    roots: RootSet | None = None,
    step_map: StepMap | None = None,
) -> ConvergenceRecord:
    """Iterate from ``z0`` until ``|f(z_n)| < epsilon``.

    ``iterations`` counts applications of the map, so a start point that
    already satisfies the tolerance reports 0.  A failed step ends the orbit
    with status SINGULAR and the number of steps completed before it.
    """
    params = params or IterationParams()
    step_map = step_map or StepMap.modified()
    roots = roots if roots is not None else reference_roots(poly)
    needed = _needed_rows(step_map)
    tab = poly.kernel_table(needed)
    d = np.zeros(tab.shape[0], dtype=np.complex128)
    work = np.zeros((4, tab.shape[0]), dtype=np.complex128)
    s, r, n, z = K.run_orbit(
        step_map.kernel_kind, tab, complex(z0), params.a0, params.a1, step_map.kernel_exps(),
        int(step_map.order_n or 0), params.epsilon, params.max_iter, roots.as_array(),
        float(roots.match_radius), d, work,
    )
    return ConvergenceRecord(Status(int(s)), None if r < 0 else int(r), int(n), complex(z))


def orbit(
    poly: Polynomial,
    z0: complex,
    params: IterationParams | None = None,
    step_map: StepMap | None = None,
) -> tuple[Status, list[complex]]:
    """The iterates ``z_0, z_1, ...`` visited by :func:`iterate`, and the final status."""
    params = params or IterationParams()
    step_map = step_map or StepMap.modified()
    tab = poly.kernel_table(_needed_rows(step_map))
    out = np.zeros(params.max_iter + 1, dtype=np.complex128)
    s, count = K.orbit_trace(
        step_map.kernel_kind, tab, complex(z0), params.a0, params.a1, step_map.kernel_exps(),
        int(step_map.order_n or 0), params.epsilon, params.max_iter, out,
    )
    return Status(int(s)), [complex(v) for v in out[:count]]


def _needed_rows(step_map: StepMap) -> int:
    if step_map.kind == "modified":
        return 2
    if step_map.kind == "generalized":
        return step_map.exponents.order + 1
    return step_map.order_n
