"""Polynomials and the three point-to-point iteration maps.

The modified map is Newton's method applied to ``g = f**a0 * f'**a1``::

    F(z) = z - f f' / (a0 f'^2 + a1 f f'')

``a0 = 1, a1 = 0`` is plain Newton, ``a1 = -1/2`` is Halley and ``a1 = -1``
is Newton for multiple roots.  The generalized map takes Newton's step on
``prod_n (f^(n))**a_n`` through its logarithmic derivative, and the Gerlach
map takes Newton's step on ``F_{n+1}`` where ``F_2 = f`` and
``F_{m+1} = F_m (F_m')**(-1/m)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .errors import NonFiniteStep, PoleAtDerivativeZero, SingularDenominator

GERLACH_MAX_ORDER = 4

_CODE_ERRORS = {
    K.SINGULAR: SingularDenominator,
    K.POLE: PoleAtDerivativeZero,
    K.NONFINITE: NonFiniteStep,
}


@dataclass(frozen=True)
class Polynomial:
    """Dense complex polynomial; ``coefficients[k]`` multiplies ``z**k``.

    Trailing zero coefficients are dropped, so the leading coefficient is
    nonzero except for the zero polynomial, which is stored as ``(0,)``.
    """

    coefficients: tuple[complex, ...]
    _tables: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        coeffs = [complex(c) for c in self.coefficients]
        if not coeffs:
            raise ValueError("a polynomial needs at least one coefficient")
        for c in coeffs:
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError(f"non-finite coefficient {c!r}")
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def from_roots(cls, roots: Sequence[complex]) -> Polynomial:
        coeffs = [1 + 0j]
        for r in roots:
            shifted = [0j] + coeffs
            for k in range(len(coeffs)):
                shifted[k] -= r * coeffs[k]
            coeffs = shifted
        return cls(tuple(coeffs))

    @classmethod
    def unity(cls, n: int) -> Polynomial:
        """``z**n - 1``."""
        if n < 1:
            raise ValueError("n must be positive")
        return cls((-1,) + (0,) * (n - 1) + (1,))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0 for c in self.coefficients)

    def derivative(self) -> Polynomial:
        if self.degree == 0:
            return Polynomial((0,))
        return Polynomial(tuple(k * self.coefficients[k] for k in range(1, len(self.coefficients))))

    def __call__(self, z: complex) -> complex:
        return eval_derivatives(self, z, 0)[0]

    def derivative_table(self, rows: int) -> np.ndarray:
        """Array whose row ``j`` holds the coefficients of the j-th derivative.

        Entries are exact falling-factorial multiples of the coefficients;
        rows past the degree are zero.
        """
        rows = max(int(rows), 1)
        tab = self._tables.get(rows)
        if tab is None:
            m = len(self.coefficients)
            tab = np.zeros((rows, m), dtype=np.complex128)
            for j in range(rows):
                for c in range(m - j):
                    tab[j, c] = math.perm(c + j, j) * self.coefficients[c + j]
            tab.setflags(write=False)
            self._tables[rows] = tab
        return tab

    def kernel_table(self, needed: int = 0) -> np.ndarray:
        """Derivative table tall enough for every map and ``needed`` extra rows."""
        return self.derivative_table(max(self.degree + 2, GERLACH_MAX_ORDER + 1, needed + 1))

    def to_pairs(self) -> list[list[float]]:
        return [[c.real, c.imag] for c in self.coefficients]

    @classmethod
    def from_pairs(cls, pairs) -> Polynomial:
        return cls(tuple(complex(re, im) for re, im in pairs))


PRESETS = {
    "z7m1": Polynomial.unity(7),
    "z3m1": Polynomial.unity(3),
    "z2m1": Polynomial.unity(2),
    "z4m1": Polynomial.unity(4),
}


@dataclass(frozen=True)
class IterationParams:
    a0: float = 1.0
    a1: float = 0.0
    epsilon: float = 1e-5
    max_iter: int = 40

    def __post_init__(self):
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a1", float(self.a1))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not (self.epsilon > 0):
            raise ValueError("epsilon must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError("max_iter must be an integer >= 1")
        object.__setattr__(self, "max_iter", int(self.max_iter))
        if not (math.isfinite(self.a0) and math.isfinite(self.a1)):
            raise ValueError("a0 and a1 must be finite")


@dataclass(frozen=True)
class GeneralizedExponents:
    """Exponents ``a_0..a_N`` of ``prod_n (f^(n))**a_n``."""

    exponents: tuple[float, ...]

    def __post_init__(self):
        exps = tuple(float(a) for a in self.exponents)
        if not exps:
            raise ValueError("need at least one exponent")
        if all(a == 0 for a in exps):
            raise ValueError("exponents must not all be zero")
        if not all(math.isfinite(a) for a in exps):
            raise ValueError("exponents must be finite")
        object.__setattr__(self, "exponents", exps)

    @property
    def order(self) -> int:
        return len(self.exponents) - 1


@dataclass(frozen=True)
class StepMap:
    """Which iteration map an orbit uses.

    ``modified`` takes ``a0``/``a1`` from the accompanying
    :class:`IterationParams`; the other kinds carry their own parameters.
    """

    kind: str = "modified"
    exponents: GeneralizedExponents | None = None
    order_n: int | None = None

    def __post_init__(self):
        if self.kind == "modified":
            return
        if self.kind == "generalized":
            if self.exponents is None:
                raise ValueError("generalized map needs exponents")
            if not isinstance(self.exponents, GeneralizedExponents):
                object.__setattr__(self, "exponents", GeneralizedExponents(tuple(self.exponents)))
        elif self.kind == "gerlach":
            _check_gerlach_order(self.order_n)
        else:
            raise ValueError(f"unknown map kind {self.kind!r}")

    @classmethod
    def modified(cls) -> StepMap:
        return cls("modified")

    @classmethod
    def generalized(cls, exponents) -> StepMap:
        return cls("generalized", exponents=GeneralizedExponents(tuple(exponents)))

    @classmethod
    def gerlach(cls, order_n: int) -> StepMap:
        return cls("gerlach", order_n=order_n)

    @property
    def kernel_kind(self) -> int:
        return {"modified": K.MODIFIED, "generalized": K.GENERALIZED, "gerlach": K.GERLACH}[self.kind]

    def kernel_exps(self) -> np.ndarray:
        if self.kind == "generalized":
            return np.asarray(self.exponents.exponents, dtype=np.float64)
        return np.zeros(0, dtype=np.float64)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "generalized":
            out["exponents"] = list(self.exponents.exponents)
        if self.kind == "gerlach":
            out["order_n"] = self.order_n
        return out


def _check_gerlach_order(order_n):
    if not isinstance(order_n, (int, np.integer)) or not 2 <= order_n <= GERLACH_MAX_ORDER:
        raise ValueError(f"Gerlach order_n must be an integer in [2, {GERLACH_MAX_ORDER}], got {order_n!r}")


def _derivs(poly: Polynomial, z: complex, k: int) -> np.ndarray:
    tab = poly.kernel_table(k)
    out = np.zeros(tab.shape[0], dtype=np.complex128)
    K.eval_derivs(tab, complex(z), k, out)
    return out


def eval_derivatives(poly: Polynomial, z: complex, k: int) -> list[complex]:
    """``[f(z), f'(z), ..., f^(k)(z)]`` by Horner's rule on each derivative."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return [complex(v) for v in _derivs(poly, z, k)[: k + 1]]


def _finish(code, w):
    if code != K.OK:
        raise _CODE_ERRORS[code](f"step failed with code {code}")
    return complex(w)


def modified_step(poly: Polynomial, z: complex, a0: float, a1: float) -> complex:
    """One application of the modified map at ``z``.

    Raises :class:`SingularDenominator` when ``|a0 f'^2 + a1 f f''|`` is
    below ``1e-300 * (1 + |f f'|)`` and :class:`NonFiniteStep` on overflow.
    Roots with ``f'(z) != 0`` are exact fixed points.
    """
    if poly.degree < 1:
        raise ValueError("polynomial degree must be >= 1")
    z = complex(z)
    d = _derivs(poly, z, 2)
    return _finish(*K.modified_from(z, d, float(a0), float(a1)))


def generalized_step(poly: Polynomial, z: complex, exps) -> complex:
    """Newton step on ``prod_n (f^(n))**a_n``, i.e. ``z - 1/sum_n a_n f^(n+1)/f^(n)``."""
    if not isinstance(exps, GeneralizedExponents):
        exps = GeneralizedExponents(tuple(exps))
    if poly.degree < exps.order:
        raise ValueError(f"degree {poly.degree} < N = {exps.order}: f^(N) vanishes identically")
    z = complex(z)
    d = _derivs(poly, z, exps.order + 1)
    return _finish(*K.generalized_from(z, d, np.asarray(exps.exponents, dtype=np.float64)))


def gerlach_step(poly: Polynomial, z: complex, order_n: int) -> complex:
    """Newton step on Gerlach's ``F_{n+1}``, built from truncated Taylor jets.

    Fractional powers use the principal branch.  Any other branch scales
    each ``F_m`` by a constant, which cancels in ``F/F'``, so the step does
    not depend on the choice.
    """
    _check_gerlach_order(order_n)
    z = complex(z)
    tab = poly.kernel_table(order_n)
    d = np.zeros(tab.shape[0], dtype=np.complex128)
    K.eval_derivs(tab, z, order_n, d)
    work = np.zeros((4, tab.shape[0]), dtype=np.complex128)
    return _finish(*K.gerlach_from(z, d, int(order_n), work))


def apply_map(poly: Polynomial, z: complex, params: IterationParams, step_map: StepMap | None = None) -> complex:
    step_map = step_map or StepMap.modified()
    if step_map.kind == "modified":
        return modified_step(poly, z, params.a0, params.a1)
    if step_map.kind == "generalized":
        return generalized_step(poly, z, step_map.exponents)
    return gerlach_step(poly, z, step_map.order_n)
