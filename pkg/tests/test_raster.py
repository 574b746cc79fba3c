import cmath
import colorsys
import dataclasses
import json
import math

import numpy as np
import pytest

from basinmap import IterationParams, Polynomial, Status, StepMap, iterate, reference_roots
from basinmap.raster import (
    NONCONVERGENT_RGB,
    DomainRect,
    a1_grid,
    colorize,
    evaluate_points,
    read_ppm,
    render_basin,
    render_sweep,
    root_hues,
    sidecar,
    write_image,
    write_json,
    write_ppm,
)


class TestDomain:
    def test_pixel_centres(self):
        d = DomainRect(0, 4, -1, 1, 4, 2)
        assert list(d.xs) == [0.5, 1.5, 2.5, 3.5]
        assert list(d.ys) == [-0.5, 0.5]
        assert d.z(2, 1) == 2.5 + 0.5j
        assert d.cell_area == 1.0

    def test_grid_orientation(self):
        d = DomainRect(nx=5, ny=3)
        g = d.grid()
        assert g.shape == (3, 5)
        for j in range(3):
            for i in range(5):
                assert g[j, i] == d.z(i, j)

    def test_symmetric_sampling(self):
        d = DomainRect(nx=501, ny=501)
        assert np.array_equal(d.xs, -d.xs[::-1])
        assert d.ys[250] == 0.0

    @pytest.mark.parametrize("kw", [{"x_min": 1, "x_max": 1}, {"nx": 1}, {"y_min": 3}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            DomainRect(**kw)


class TestRenderBasin:
    def test_cells_match_iterate(self, z7, z7_roots, newton_small):
        rng = np.random.default_rng(3)
        d = newton_small.domain
        for _ in range(200):
            i, j = int(rng.integers(d.nx)), int(rng.integers(d.ny))
            assert newton_small.record(i, j) == iterate(z7, d.z(i, j), newton_small.params, z7_roots)

    def test_positive_real_axis_goes_to_one(self, z7, z7_roots):
        d = DomainRect(nx=501, ny=501)
        r = render_basin(z7, domain=d, roots=z7_roots)
        row = 250
        assert d.ys[row] == 0.0
        cols = d.xs > 0.3
        assert np.all(r.status[row, cols] == Status.CONVERGED)
        assert np.all(r.root_index[row, cols] == 0)

    def test_halley_fewer_failures(self, z7, z7_roots, newton_small):
        h = render_basin(z7, IterationParams(a1=-0.5), domain=newton_small.domain, roots=z7_roots)
        nc = lambda r: np.count_nonzero(r.status == Status.NONCONVERGENT)
        assert nc(h) < nc(newton_small)

    def test_degenerate_tolerance(self, rng):
        p = Polynomial((1, -2, 0.5j, 1))
        r = render_basin(p, IterationParams(epsilon=1e300, max_iter=1), domain=DomainRect(nx=20, ny=20))
        assert np.all(r.status == Status.CONVERGED)
        assert set(np.unique(r.iterations)) <= {0, 1}

    def test_other_maps(self, z7, z7_roots):
        d = DomainRect(nx=31, ny=31)
        for sm in (StepMap.generalized([1, -0.5]), StepMap.gerlach(3)):
            r = render_basin(z7, step_map=sm, domain=d, roots=z7_roots)
            for i, j in [(0, 0), (7, 20), (15, 15), (30, 2)]:
                assert r.record(i, j) == iterate(z7, d.z(i, j), IterationParams(), z7_roots, sm)

    def test_counts_sum(self, newton_small):
        assert sum(newton_small.counts().values()) == newton_small.status.size

    def test_worker_invariance(self, z7, z7_roots):
        d = DomainRect(nx=67, ny=45)
        a = render_basin(z7, IterationParams(a1=-1.05), domain=d, roots=z7_roots, workers=1)
        for w in (2, 3, 7):
            b = render_basin(z7, IterationParams(a1=-1.05), domain=d, roots=z7_roots, workers=w)
            for name in ("status", "root_index", "iterations", "final_z"):
                assert getattr(a, name).tobytes() == getattr(b, name).tobytes()

    def test_bad_workers(self, z7):
        with pytest.raises(ValueError):
            render_basin(z7, domain=DomainRect(nx=4, ny=4), workers=0)


class TestSymmetry:
    @pytest.mark.parametrize("a1", [0.0, -0.5, -1.05])
    def test_rotation_matched_points(self, z7, z7_roots, a1):
        rng = np.random.default_rng(11)
        prm = IterationParams(a1=a1)
        w = cmath.exp(2j * math.pi / 7)
        for z in rng.uniform(-2, 2, 300) + 1j * rng.uniform(-2, 2, 300):
            r1, r2 = iterate(z7, z, prm, z7_roots), iterate(z7, z * w, prm, z7_roots)
            assert (r1.status, r1.iterations) == (r2.status, r2.iterations)
            if r1.root_index is not None:
                assert r2.root_index == (r1.root_index + 1) % 7

    def test_conjugation_on_grid(self, z7, z7_roots):
        r = render_basin(z7, IterationParams(a1=-0.3), domain=DomainRect(nx=81, ny=81), roots=z7_roots)
        assert np.array_equal(r.status, r.status[::-1])
        assert np.array_equal(r.iterations, r.iterations[::-1])
        mirrored = np.where(r.root_index >= 0, (-r.root_index) % 7, r.root_index)
        assert np.array_equal(mirrored, r.root_index[::-1])
        assert np.array_equal(r.final_z, np.conj(r.final_z[::-1]))


class TestSweep:
    def test_row_matches_basin_slice(self, z7, z7_roots):
        for a1 in (0.0, -0.5, -1.05):
            d = DomainRect(-2, -0.1, -1, 1, 95, 21)
            b = render_basin(z7, IterationParams(a1=a1), domain=d, roots=z7_roots)
            s = render_sweep(z7, (-2, -0.1, 95), [a1], roots=z7_roots)
            assert d.ys[10] == 0.0
            for name in ("status", "root_index", "iterations", "final_z"):
                assert np.array_equal(getattr(s, name)[0], getattr(b, name)[10])

    def test_rows_and_shape(self, z7, z7_roots):
        a1 = a1_grid(-1.5, -0.9, 7)
        s = render_sweep(z7, (-2, 2, 40), a1, roots=z7_roots)
        assert s.status.shape == (7, 40)
        assert s.row(-1.5) == 0 and s.row(a1[-1]) == 6
        with pytest.raises(KeyError):
            s.row(0.25)
        for k in range(7):
            for i in (0, 13, 39):
                assert s.record(i, k) == iterate(z7, complex(s.xs[i]), IterationParams(a1=a1[k]), z7_roots)

    def test_a1_grid_inclusive(self):
        g = a1_grid(-2, 0.5, 1001)
        assert g[0] == -2 and g[-1] == 0.5 and 0.0 in g and -0.5 in g and -1.5 in g
        assert list(a1_grid(0.3, 0.3, 1)) == [0.3]

    def test_right_half_rows(self, z7, z7_roots):
        s = render_sweep(z7, (0.1, 2, 190), [-0.5, -1.5], roots=z7_roots)
        assert np.all(s.status[0] == Status.CONVERGED)
        assert np.count_nonzero(s.status[1] == Status.NONCONVERGENT) >= 1

    def test_invalid_ranges(self, z7):
        with pytest.raises(ValueError):
            render_sweep(z7, (1, 0, 10), [0.0])
        with pytest.raises(ValueError):
            render_sweep(z7, (0, 1, 10), [])


def hue_buckets(img):
    colors = {tuple(c) for c in img.reshape(-1, 3).tolist()}
    hues = set()
    for c in colors:
        if c == NONCONVERGENT_RGB:
            continue
        h, s, v = colorsys.rgb_to_hsv(*(x / 255 for x in c))
        hues.add("grey" if s < 0.2 else round(h * 24))
    return hues, NONCONVERGENT_RGB in colors


class TestColorize:
    def test_all_failed_is_red(self, z7, z7_roots):
        r = render_basin(z7, IterationParams(epsilon=1e-300, max_iter=1), domain=DomainRect(0.1, 0.2, 0.1, 0.2, 8, 8),
                         roots=z7_roots)
        img = colorize(r)
        assert img.shape == (8, 8, 3)
        assert np.all(img == NONCONVERGENT_RGB)

    def test_single_root_single_hue(self):
        p = Polynomial((-1, 1))
        r = render_basin(p, IterationParams(epsilon=1e-300, max_iter=3), domain=DomainRect(nx=10, ny=10))
        hues, red = hue_buckets(colorize(r))
        assert len(hues) == 1 and not red

    def test_newton_hues(self, newton_small):
        hues, red = hue_buckets(colorize(newton_small))
        assert len(hues) == 7 and red
        # orbits that meet |f| < 1e-5 are always within half a root spacing of a root
        assert newton_small.counts()["converged_unclassified"] == 0

    def test_unclassified_is_grey(self, z7):
        roots = reference_roots(z7, match_radius=1e-12)
        r = render_basin(z7, IterationParams(epsilon=1e-3), domain=DomainRect(nx=30, ny=30), roots=roots)
        assert r.counts()["converged_unclassified"] > 0
        assert "grey" in hue_buckets(colorize(r))[0]

    def test_top_row_is_max_imag(self, newton_small):
        r = dataclasses.replace(newton_small, status=newton_small.status.copy())
        r.status[:] = Status.CONVERGED
        r.status[-1] = Status.NONCONVERGENT  # largest Im z
        img = colorize(r)
        assert np.all(img[0] == NONCONVERGENT_RGB)
        assert not np.any(np.all(img[1:] == NONCONVERGENT_RGB, axis=-1))

    def test_iteration_palette_is_grey(self, newton_small):
        img = colorize(newton_small, "iterations")
        conv = (newton_small.status == Status.CONVERGED)[::-1]
        assert np.all(img[conv][:, 0] == img[conv][:, 1])
        with pytest.raises(ValueError):
            colorize(newton_small, "rainbow")

    def test_hues_avoid_red(self):
        assert all(1 / 12 < h < 11 / 12 for h in root_hues(7))


class TestOutput:
    def test_ppm_roundtrip(self, tmp_path, newton_small):
        img = colorize(newton_small)
        path = tmp_path / "a.ppm"
        write_ppm(path, img)
        data = path.read_bytes()
        assert data.startswith(b"P6\n121 121\n255\n")
        assert len(data) == len(b"P6\n121 121\n255\n") + img.size
        np.testing.assert_array_equal(read_ppm(path), img)

    def test_png(self, tmp_path, newton_small):
        Image = pytest.importorskip("PIL.Image")
        img = colorize(newton_small)
        write_image(tmp_path / "a.png", img, "png")
        np.testing.assert_array_equal(np.asarray(Image.open(tmp_path / "a.png")), img)
        with pytest.raises(ValueError):
            write_image(tmp_path / "a.gif", img, "gif")

    def test_sidecar(self, tmp_path, newton_small):
        meta = sidecar(newton_small, "classic")
        write_json(tmp_path / "m.json", meta)
        back = json.loads((tmp_path / "m.json").read_text())
        assert back["grid"] == [121, 121] and back["palette"] == "classic"
        assert back["domain"]["x_min"] == -2.0
        assert back["params"] == {"a0": 1.0, "a1": 0.0, "epsilon": 1e-5, "max_iter": 40}
        assert back["counts"] == newton_small.counts()

    def test_sweep_sidecar_has_no_inf(self, z7_roots, z7):
        s = render_sweep(z7, (0.1, 2, 10), [0.0], roots=z7_roots)
        text = json.dumps(sidecar(s, "classic"), allow_nan=False)
        assert '"kind": "sweep"' in text


def test_evaluate_points_broadcast(z7, z7_roots):
    zs = np.array([[1.2, -0.7 + 0.4j], [0.3j, 2.0]])
    st, idx, its, zf = evaluate_points(z7, zs, 1.0, [[0.0, -0.5], [-1.0, 0.2]], 1e-5, 40, StepMap.modified(), z7_roots)
    for (j, i), a1 in zip([(0, 0), (0, 1), (1, 0), (1, 1)], [0.0, -0.5, -1.0, 0.2]):
        rec = iterate(z7, zs[j, i], IterationParams(a1=a1), z7_roots)
        assert (st[j, i], its[j, i], zf[j, i]) == (rec.status, rec.iterations, rec.final_z)
