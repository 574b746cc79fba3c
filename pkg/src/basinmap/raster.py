"""Iteration-count rasters over a complex rectangle or the (x, a1) plane.

Each cell is an independent orbit, so rows are cut into bands and handed to
a thread pool.  The numba kernel releases the GIL; the numpy path mostly
does too.  Both write into disjoint slices of the output arrays, so the
result does not depend on the worker count or on completion order.
"""
from __future__ import annotations

import colorsys
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import _kernels as K
from . import _vectorized as V
from ._accel import resolve_backend
from .core import IterationParams, Polynomial, StepMap
from .solver import ConvergenceRecord, RootSet, Status, _needed_rows, reference_roots

DEFAULT_RES = 1001
NONCONVERGENT_RGB = (255, 0, 0)
PALETTES = ("classic", "iterations")


def default_workers() -> int:
    env = os.environ.get("BASINMAP_WORKERS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("BASINMAP_WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1


@dataclass(frozen=True)
class DomainRect:
    """Rectangle sampled at pixel centres.

    Cell ``(i, j)`` sits at ``x_min + (i + 0.5) dx + 1j * (y_min + (j + 0.5) dy)``,
    evaluated about the midpoint so that symmetric rectangles are sampled
    symmetrically.
    """

    x_min: float = -2.0
    x_max: float = 2.0
    y_min: float = -2.0
    y_max: float = 2.0
    nx: int = DEFAULT_RES
    ny: int = DEFAULT_RES

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("empty domain rectangle")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("nx and ny must be >= 2")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.nx

    @property
    def dy(self) -> float:
        return (self.y_max - self.y_min) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def xs(self) -> np.ndarray:
        return pixel_centers(self.x_min, self.x_max, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return pixel_centers(self.y_min, self.y_max, self.ny)

    def z(self, i: int, j: int) -> complex:
        return complex(_center(self.x_min, self.x_max, self.nx, i), _center(self.y_min, self.y_max, self.ny, j))

    def grid(self) -> np.ndarray:
        """Start points, shape ``(ny, nx)``; row ``j`` has imaginary part ``ys[j]``."""
        out = np.empty((self.ny, self.nx), dtype=np.complex128)
        out.real = self.xs[None, :]
        out.imag = self.ys[:, None]
        return out

    def to_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "y_min": self.y_min, "y_max": self.y_max,
                "nx": self.nx, "ny": self.ny}


def _center(lo: float, hi: float, n: int, i):
    # lo + (i + 1/2) step, written about the midpoint so symmetric ranges give
    # exactly mirrored samples (and an exact 0 at odd n)
    return 0.5 * (lo + hi) + (i - 0.5 * (n - 1)) * ((hi - lo) / n)


def pixel_centers(lo: float, hi: float, n: int) -> np.ndarray:
    return _center(lo, hi, n, np.arange(n))


class _RasterBase:
    status: np.ndarray
    root_index: np.ndarray
    iterations: np.ndarray
    final_z: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.status.shape

    def record(self, i: int, j: int) -> ConvergenceRecord:
        """Record of column ``i``, row ``j``."""
        r = int(self.root_index[j, i])
        return ConvergenceRecord(Status(int(self.status[j, i])), None if r < 0 else r,
                                 int(self.iterations[j, i]), complex(self.final_z[j, i]))

    def counts(self) -> dict[str, int]:
        conv = self.status == Status.CONVERGED
        return {
            "converged": int(np.count_nonzero(conv & (self.root_index >= 0))),
            "converged_unclassified": int(np.count_nonzero(conv & (self.root_index < 0))),
            "nonconvergent": int(np.count_nonzero(self.status == Status.NONCONVERGENT)),
            "singular": int(np.count_nonzero(self.status == Status.SINGULAR)),
        }


@dataclass(eq=False)
class BasinRaster(_RasterBase):
    poly: Polynomial
    params: IterationParams
    step_map: StepMap
    domain: DomainRect
    roots: RootSet
    status: np.ndarray
    root_index: np.ndarray
    iterations: np.ndarray
    final_z: np.ndarray

    @property
    def cell_area(self) -> float:
        return self.domain.cell_area

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        return self.domain.xs, self.domain.ys

    def metadata(self) -> dict:
        return {
            "kind": "basin",
            "polynomial": self.poly.to_pairs(),
            "params": {"a0": self.params.a0, "a1": self.params.a1, "epsilon": self.params.epsilon,
                       "max_iter": self.params.max_iter},
            "map": self.step_map.to_dict(),
            "domain": self.domain.to_dict(),
            "grid": [self.domain.nx, self.domain.ny],
            "roots": [[r.real, r.imag] for r in self.roots.roots],
            "counts": self.counts(),
        }


@dataclass(eq=False)
class SweepRaster(_RasterBase):
    """Rows are a1 values, columns real start points ``x + 0j``."""

    poly: Polynomial
    a0: float
    x_range: tuple[float, float, int]
    a1_values: np.ndarray
    epsilon: float
    max_iter: int
    roots: RootSet
    status: np.ndarray
    root_index: np.ndarray
    iterations: np.ndarray
    final_z: np.ndarray

    @property
    def xs(self) -> np.ndarray:
        return pixel_centers(*self.x_range)

    @property
    def cell_area(self) -> float:
        dx = (self.x_range[1] - self.x_range[0]) / self.x_range[2]
        da = abs(float(self.a1_values[-1] - self.a1_values[0])) / max(len(self.a1_values) - 1, 1)
        return dx * da

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        return self.xs, np.asarray(self.a1_values, dtype=np.float64)

    def row(self, a1: float) -> int:
        hits = np.flatnonzero(self.a1_values == a1)
        if hits.size == 0:
            raise KeyError(f"a1 = {a1} is not a sweep row")
        return int(hits[0])

    def metadata(self) -> dict:
        return {
            "kind": "sweep",
            "polynomial": self.poly.to_pairs(),
            "params": {"a0": self.a0, "epsilon": self.epsilon, "max_iter": self.max_iter},
            "map": {"kind": "modified"},
            "x_range": list(self.x_range),
            "a1_range": [float(self.a1_values[0]), float(self.a1_values[-1]), int(len(self.a1_values))],
            "grid": [int(self.x_range[2]), int(len(self.a1_values))],
            "roots": [[r.real, r.imag] for r in self.roots.roots],
            "counts": self.counts(),
        }


Raster = Union[BasinRaster, SweepRaster]


def evaluate_points(
    poly: Polynomial,
    zs: np.ndarray,
    a0s,
    a1s,
    epsilon: float,
    max_iter: int,
    step_map: StepMap,
    roots: RootSet,
    workers: int | None = None,
    backend: str | None = None,
):
    """Classify every start point in ``zs``; returns status, root index, count, final iterate.

    ``a0s``/``a1s`` broadcast against ``zs`` so each point may carry its own
    parameters (the sweep varies a1 per row).
    """
    backend = resolve_backend(backend)
    workers = default_workers() if workers is None else int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    shape = np.shape(zs)
    z = np.ascontiguousarray(np.ravel(zs), dtype=np.complex128)
    a0 = np.ascontiguousarray(np.broadcast_to(np.asarray(a0s, dtype=np.float64), shape).ravel())
    a1 = np.ascontiguousarray(np.broadcast_to(np.asarray(a1s, dtype=np.float64), shape).ravel())
    n = z.size
    status = np.empty(n, dtype=np.int8)
    idx = np.empty(n, dtype=np.int64)
    its = np.empty(n, dtype=np.int64)
    zf = np.empty(n, dtype=np.complex128)
    tab = np.ascontiguousarray(poly.kernel_table(_needed_rows(step_map)))
    args = (step_map.kernel_kind, tab)
    tail = (step_map.kernel_exps(), int(step_map.order_n or 0), float(epsilon), int(max_iter),
            roots.as_array(), float(roots.match_radius))
    block = K.orbit_block if backend == "numba" else V.orbit_block

    def run(lo, hi):
        block(*args, z[lo:hi], a0[lo:hi], a1[lo:hi], *tail,
              status[lo:hi], idx[lo:hi], its[lo:hi], zf[lo:hi])

    row = shape[-1] if len(shape) > 1 else max(n, 1)
    nbands = max(1, min(n // row if row else 1, workers * 4))
    edges = [(k * (n // row) // nbands) * row for k in range(nbands)] + [n]
    bands = [(lo, hi) for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
    if workers == 1 or len(bands) == 1:
        for lo, hi in bands:
            run(lo, hi)
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            list(ex.map(lambda b: run(*b), bands))
    return (status.reshape(shape), idx.reshape(shape), its.reshape(shape), zf.reshape(shape))


def render_basin(
    poly: Polynomial,
    params: IterationParams | None = None,
    step_map: StepMap | None = None,
    domain: DomainRect | None = None,
    *,
    roots: RootSet | None = None,
    workers: int | None = None,
    backend: str | None = None,
) -> BasinRaster:
    params = params or IterationParams()
    step_map = step_map or StepMap.modified()
    domain = domain or DomainRect()
    roots = roots if roots is not None else reference_roots(poly)
    status, idx, its, zf = evaluate_points(poly, domain.grid(), params.a0, params.a1, params.epsilon,
                                           params.max_iter, step_map, roots, workers, backend)
    return BasinRaster(poly, params, step_map, domain, roots, status, idx, its, zf)


def a1_grid(a1_min: float, a1_max: float, n: int) -> np.ndarray:
    """``n`` a1 rows from ``a1_min`` to ``a1_max`` inclusive, so named values are hit exactly."""
    if n < 1:
        raise ValueError("need at least one a1 row")
    if n == 1:
        return np.array([float(a1_min)])
    return np.linspace(a1_min, a1_max, n)


def render_sweep(
    poly: Polynomial,
    x_range: tuple[float, float, int] = (-2.0, 2.0, DEFAULT_RES),
    a1_values: Sequence[float] | None = None,
    a0: float = 1.0,
    epsilon: float = 1e-5,
    max_iter: int = 40,
    *,
    roots: RootSet | None = None,
    workers: int | None = None,
    backend: str | None = None,
) -> SweepRaster:
    """Modified-map raster over real start points (columns) and a1 (rows).

    Columns use the same pixel-centre rule as :class:`DomainRect`, so a row
    matches the ``Im z = 0`` row of a basin render with the same x sampling.
    """
    x_min, x_max, nx = x_range
    if not x_min < x_max or int(nx) < 2:
        raise ValueError("x_range must be (x_min < x_max, nx >= 2)")
    x_range = (float(x_min), float(x_max), int(nx))
    a1 = a1_grid(-2.0, 0.5, DEFAULT_RES) if a1_values is None else np.asarray(a1_values, dtype=np.float64)
    if a1.ndim != 1 or a1.size < 1:
        raise ValueError("a1_values must be a non-empty 1-D sequence")
    IterationParams(a0, 0.0, epsilon, max_iter)  # validation only
    roots = roots if roots is not None else reference_roots(poly)
    xs = pixel_centers(*x_range)
    zs = np.broadcast_to(xs[None, :], (a1.size, xs.size)).astype(np.complex128)
    a1s = np.broadcast_to(a1[:, None], zs.shape)
    status, idx, its, zf = evaluate_points(poly, zs, a0, a1s, epsilon, max_iter, StepMap.modified(), roots,
                                           workers, backend)
    return SweepRaster(poly, float(a0), x_range, a1, float(epsilon), int(max_iter), roots,
                       status, idx, its, zf)


def root_hues(nroots: int) -> list[float]:
    """Hue per root, spread over (1/12, 11/12) so none is mistaken for the red of non-convergence."""
    return [1 / 12 + (5 / 6) * (k + 0.5) / max(nroots, 1) for k in range(nroots)]


def _lightness(counts: np.ndarray, max_iter: int) -> np.ndarray:
    return 1.0 - 0.75 * np.clip(counts, 0, max_iter) / max(max_iter, 1)


def colorize(raster: Raster, palette: str = "classic") -> np.ndarray:
    """8-bit RGB image, shape ``(rows, cols, 3)``, top row = largest Im z (or a1).

    ``classic``: converged cells take their root's hue, brighter when fewer
    iterations were needed; converged cells near no root are grey; failed
    cells (non-convergent or singular) are red.  ``iterations`` drops the
    root hue and shows the count in grey levels.
    """
    if palette not in PALETTES:
        raise ValueError(f"unknown palette {palette!r}; expected one of {PALETTES}")
    max_iter = raster.params.max_iter if isinstance(raster, BasinRaster) else raster.max_iter
    nroots = len(raster.roots.roots)
    level = _lightness(raster.iterations, max_iter)
    img = np.zeros(raster.status.shape + (3,), dtype=np.float64)
    conv = raster.status == Status.CONVERGED
    grey = conv if palette == "iterations" else conv & (raster.root_index < 0)
    img[grey] = level[grey, None]
    if palette == "classic":
        hues = root_hues(nroots)
        lut = np.array([colorsys.hsv_to_rgb(h, 0.85, 1.0) for h in hues]).reshape(-1, 3)
        hit = conv & (raster.root_index >= 0)
        img[hit] = lut[raster.root_index[hit]] * level[hit, None]
    img = np.rint(img * 255).astype(np.uint8)
    img[~conv] = NONCONVERGENT_RGB
    return np.ascontiguousarray(img[::-1])


def write_ppm(path, img: np.ndarray) -> None:
    """Binary PPM (P6, maxval 255)."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(img.tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P6" or int(fields[3]) != 255:
        raise ValueError("not an 8-bit binary PPM")
    w, h = int(fields[1]), int(fields[2])
    pixels = np.frombuffer(data[pos + 1:pos + 1 + w * h * 3], dtype=np.uint8)
    return pixels.reshape(h, w, 3)


def write_png(path, img: np.ndarray) -> None:
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("PNG output needs Pillow; use PPM instead") from exc
    Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def write_image(path, img: np.ndarray, fmt: str = "ppm") -> None:
    if fmt == "ppm":
        write_ppm(path, img)
    elif fmt == "png":
        write_png(path, img)
    else:
        raise ValueError(f"unknown image format {fmt!r}")


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def sidecar(raster: Raster, palette: str, extra: dict | None = None) -> dict:
    meta = raster.metadata()
    meta["palette"] = palette
    if extra:
        meta.update(extra)
    return _jsonable(meta)


def write_json(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
