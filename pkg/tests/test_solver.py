import cmath
import math

import numpy as np
import pytest

from basinmap import (
    IterationParams,
    MergedRoots,
    NoConvergence,
    Polynomial,
    RootSet,
    Status,
    StepMap,
    iterate,
    orbit,
    reference_roots,
)
from basinmap.solver import aberth


def test_z2m1_roots():
    rs = reference_roots(Polynomial.unity(2))
    assert rs.roots == pytest.approx((1, -1), abs=1e-15)
    assert rs.match_radius == pytest.approx(1.0)


def test_unity_roots_in_angle_order():
    rs = reference_roots(Polynomial.unity(7))
    for k, r in enumerate(rs.roots):
        assert abs(r - cmath.exp(2j * math.pi * k / 7)) < 1e-14


def test_merged_roots():
    with pytest.raises(MergedRoots):
        reference_roots(Polynomial.from_roots([1, 1]))
    # still a NoConvergence for callers that only catch the base class
    with pytest.raises(NoConvergence):
        reference_roots(Polynomial.from_roots([2, 1j, 2]))


def test_linear_and_constant():
    rs = reference_roots(Polynomial((-3, 1)))
    assert rs.roots == (3,) and math.isinf(rs.match_radius)
    with pytest.raises(ValueError):
        reference_roots(Polynomial((5,)))


def test_aberth_matches_numpy(rng):
    for _ in range(40):
        deg = int(rng.integers(2, 9))
        c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        ours = np.sort_complex(aberth(c))
        ref = np.sort_complex(np.roots(c[::-1]))
        assert np.allclose(ours, ref, atol=1e-8)


def test_rootset_validation():
    RootSet((1, -1), 1.0)
    with pytest.raises(ValueError):
        RootSet((1, -1), 1.01)
    with pytest.raises(ValueError):
        RootSet((1,), 0.0)
    rs = RootSet((1, -1), 0.5)
    assert rs.nearest(0.7) == 0 and rs.nearest(-1.2) == 1 and rs.nearest(0.2) is None


def test_iterate_newton_example():
    rec = iterate(Polynomial.unity(2), 2.0)
    assert rec.status is Status.CONVERGED and rec.root_index == 0 and rec.iterations == 4


def test_iterate_singular_start():
    rec = iterate(Polynomial.unity(7), 0.0)
    assert rec.status is Status.SINGULAR and rec.iterations == 0 and rec.root_index is None


def test_iterate_real_start():
    rec = iterate(Polynomial.unity(7), 1.2)
    assert (rec.status, rec.root_index, rec.iterations) == (Status.CONVERGED, 0, 4)


def test_iterate_minus_one_regression():
    # -1 + 1.2e-16 i: the tiny imaginary part eventually lifts the orbit off the real axis
    rec = iterate(Polynomial.unity(7), cmath.exp(1j * math.pi))
    assert (rec.status, rec.root_index, rec.iterations) == (Status.CONVERGED, 0, 24)


def test_start_already_converged():
    rec = iterate(Polynomial.unity(3), 1.0)
    assert rec.iterations == 0 and rec.root_index == 0


def test_nonconvergent_cap():
    rec = iterate(Polynomial.unity(7), 1e-3, IterationParams(max_iter=5))
    assert rec.status is Status.NONCONVERGENT and rec.iterations == 5


def test_huge_tolerance_accepts_immediately():
    rec = iterate(Polynomial.unity(7), 1.7 + 0.3j, IterationParams(epsilon=1e300, max_iter=1))
    assert rec.status is Status.CONVERGED and rec.iterations == 0


def test_orbit_agrees_with_iterate(rng):
    p = Polynomial.unity(5)
    for _ in range(50):
        z0 = complex(*rng.uniform(-2, 2, size=2))
        for sm in (StepMap.modified(), StepMap.generalized([1, -0.2]), StepMap.gerlach(3)):
            prm = IterationParams(a1=-0.3)
            rec = iterate(p, z0, prm, step_map=sm)
            status, zs = orbit(p, z0, prm, sm)
            assert status == rec.status
            assert zs[0] == z0 and zs[-1] == rec.final_z
            if rec.status is not Status.SINGULAR:
                assert len(zs) == rec.iterations + 1
            if rec.status is Status.CONVERGED:
                assert abs(p(zs[-1])) < prm.epsilon
                assert all(abs(p(z)) >= prm.epsilon for z in zs[:-1])


def test_status_values():
    assert [s.value for s in Status] == [0, 1, 2]
