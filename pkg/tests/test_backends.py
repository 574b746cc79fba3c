import json
import os
import subprocess
import sys

import numpy as np
import pytest

from basinmap import IterationParams, StepMap
from basinmap._accel import NUMBA_ENABLED, resolve_backend
from basinmap.raster import DomainRect, render_basin, render_sweep

needs_numba = pytest.mark.skipif(not NUMBA_ENABLED, reason="numba not available or disabled")

FIELDS = ("status", "root_index", "iterations", "final_z")


@needs_numba
@pytest.mark.parametrize(
    "params,step_map",
    [
        (IterationParams(a1=0.0), StepMap.modified()),
        (IterationParams(a1=-0.5), StepMap.modified()),
        (IterationParams(a0=2.0, a1=-1.1), StepMap.modified()),
        (IterationParams(), StepMap.generalized([1.0, -0.3, 0.2])),
    ],
)
def test_bit_identical(z7, z7_roots, params, step_map):
    d = DomainRect(nx=91, ny=77)
    a = render_basin(z7, params, step_map, d, roots=z7_roots, backend="numba")
    b = render_basin(z7, params, step_map, d, roots=z7_roots, backend="numpy")
    for name in FIELDS:
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes(), name


@needs_numba
@pytest.mark.parametrize("n", [2, 3, 4])
def test_gerlach_backends(z7, z7_roots, n):
    # fractional powers go through sin/cos/exp, whose last bits differ between
    # numba's intrinsics and libm, so only the classification has to agree
    d = DomainRect(nx=61, ny=61)
    a = render_basin(z7, step_map=StepMap.gerlach(n), domain=d, roots=z7_roots, backend="numba")
    b = render_basin(z7, step_map=StepMap.gerlach(n), domain=d, roots=z7_roots, backend="numpy")
    assert np.array_equal(a.status, b.status)
    assert np.array_equal(a.iterations, b.iterations)
    assert np.array_equal(a.root_index, b.root_index)
    assert np.allclose(a.final_z, b.final_z, rtol=1e-12, atol=0)


@needs_numba
def test_sweep_backends(z7, z7_roots):
    a = render_sweep(z7, (-2, 2, 80), np.linspace(-1.5, 0.5, 21), roots=z7_roots, backend="numba")
    b = render_sweep(z7, (-2, 2, 80), np.linspace(-1.5, 0.5, 21), roots=z7_roots, backend="numpy")
    for name in FIELDS:
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


def test_resolve_backend():
    assert resolve_backend("numpy") == "numpy"
    with pytest.raises(ValueError):
        resolve_backend("cuda")


SCRIPT = """
import json, sys
import numpy as np
from basinmap import IterationParams, Polynomial, StepMap
from basinmap._accel import NUMBA_ENABLED, default_backend
from basinmap.raster import DomainRect, render_basin
r = render_basin(Polynomial.unity(7), IterationParams(a1=-1.05), domain=DomainRect(nx=41, ny=41))
np.save(sys.argv[1], np.stack([r.status.astype(np.int64), r.root_index, r.iterations]))
np.save(sys.argv[2], r.final_z)
print(json.dumps({"numba": NUMBA_ENABLED, "backend": default_backend()}))
"""


def test_env_flag_disables_numba(tmp_path, z7, z7_roots):
    env = dict(os.environ, BASINMAP_NO_NUMBA="1")
    a, z = tmp_path / "ints.npy", tmp_path / "z.npy"
    out = subprocess.run([sys.executable, "-c", SCRIPT, str(a), str(z)], env=env, capture_output=True, text=True,
                         check=True)
    assert json.loads(out.stdout) == {"numba": False, "backend": "numpy"}
    ref = render_basin(z7, IterationParams(a1=-1.05), domain=DomainRect(nx=41, ny=41), roots=z7_roots)
    ints = np.load(a)
    assert np.array_equal(ints[0], ref.status) and np.array_equal(ints[1], ref.root_index)
    assert np.array_equal(ints[2], ref.iterations)
    assert np.load(z).tobytes() == ref.final_z.tobytes()
