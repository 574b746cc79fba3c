"""Command-line front end.

Settings are layered: built-in defaults, then a JSON ``--config`` file, then
flags.  Exit codes: 0 ok, 1 invalid configuration, 2 the reference root
finder failed, 3 order estimation failed.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis import (
    critical_a1_bracket,
    detect_nodules,
    estimate_order,
    extract_boundary,
    nodule_growth_curve,
    non_convergent_fraction,
    repulsive_zero_scan,
)
from .core import PRESETS, IterationParams, Polynomial, StepMap
from .errors import NoConvergence, OrderEstimationError
from .raster import (
    PALETTES,
    DomainRect,
    a1_grid,
    colorize,
    render_basin,
    render_sweep,
    sidecar,
    write_image,
    write_json,
)

EXIT_OK, EXIT_CONFIG, EXIT_ROOTS, EXIT_ORDER = 0, 1, 2, 3
ANALYSES = ("nodules", "fraction", "boundary", "growth", "repulsive", "critical")
# run-time knobs that never change the numbers, so they stay out of the hash
_UNHASHED = ("workers", "backend", "out")


class ConfigError(ValueError):
    pass


def _pair(v) -> tuple[float, float]:
    if isinstance(v, (int, float)):
        return (float(v), 0.0)
    if isinstance(v, str):
        c = complex(v.replace(" ", ""))
        return (c.real, c.imag)
    re_, im = v
    return (float(re_), float(im))


def parse_poly(spec) -> tuple[tuple[float, float], ...]:
    """Preset name, comma-separated ascending coefficients, or a list of numbers / [re, im] pairs."""
    if isinstance(spec, str):
        if spec in PRESETS:
            return tuple(tuple(p) for p in PRESETS[spec].to_pairs())
        try:
            return tuple(_pair(tok) for tok in spec.split(","))
        except ValueError:
            raise ConfigError(f"unknown preset or bad coefficient list {spec!r}; presets: {sorted(PRESETS)}")
    return tuple(_pair(v) for v in spec)


@dataclass(frozen=True)
class JobConfig:
    poly: tuple = field(default_factory=lambda: parse_poly("z7m1"))
    map: str = "modified"
    a0: float = 1.0
    a1: float = 0.0
    exps: Optional[tuple] = None
    gerlach_n: Optional[int] = None
    epsilon: float = 1e-5
    max_iter: int = 40
    domain: tuple = (-2.0, 2.0, -2.0, 2.0)
    res: tuple = (1001, 1001)
    x_range: tuple = (-2.0, 2.0)
    a1_range: tuple = (-2.0, 0.5)
    a1_values: Optional[tuple] = None
    z0: Optional[tuple] = None
    root: Optional[tuple] = None
    dps: int = 300
    probe_radius: float = 0.05
    min_cells: int = 4
    regular_iter: Optional[int] = None
    a1_clean: float = -1.0
    a1_chaotic: float = -1.5
    tol: float = 1e-3
    palette: str = "classic"
    format: str = "ppm"
    out: Optional[str] = None
    workers: Optional[int] = None
    backend: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> JobConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "poly" in kw:
                kw["poly"] = parse_poly(kw["poly"])
            for k in ("z0", "root"):
                if kw.get(k) is not None:
                    kw[k] = _pair(kw[k])
            for k in ("exps", "a1_values", "domain", "res", "x_range", "a1_range"):
                if kw.get(k) is not None:
                    kw[k] = tuple(kw[k])
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = [list(x) if isinstance(x, tuple) else x for x in v]
            out[f.name] = v
        return out

    def hashable_dict(self) -> dict:
        return {k: v for k, v in self.to_dict().items() if k not in _UNHASHED}

    def config_hash(self) -> str:
        blob = json.dumps(self.hashable_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self) -> None:
        try:
            self.polynomial()
            self.params()
            self.step_map()
            if len(self.domain) != 4 or len(self.res) != 2:
                raise ConfigError("domain needs 4 numbers and res 2")
            self.domain_rect()
            if len(self.x_range) != 2 or len(self.a1_range) != 2:
                raise ConfigError("x_range and a1_range need 2 numbers each")
            if not self.x_range[0] < self.x_range[1]:
                raise ConfigError("x_range must be increasing")
        except ConfigError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None
        if self.palette not in PALETTES:
            raise ConfigError(f"palette must be one of {PALETTES}")
        if self.format not in ("ppm", "png"):
            raise ConfigError("format must be ppm or png")
        if self.workers is not None and int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")
        if self.backend not in (None, "numba", "numpy"):
            raise ConfigError("backend must be numba or numpy")
        if self.min_cells < 1 or self.probe_radius <= 0 or self.tol <= 0 or self.dps < 16:
            raise ConfigError("min_cells, probe_radius, tol must be positive and dps >= 16")

    def polynomial(self) -> Polynomial:
        return Polynomial.from_pairs(self.poly)

    def params(self) -> IterationParams:
        return IterationParams(self.a0, self.a1, self.epsilon, self.max_iter)

    def step_map(self) -> StepMap:
        if self.map == "modified":
            return StepMap.modified()
        if self.map == "generalized":
            if not self.exps:
                raise ConfigError("map 'generalized' needs exps")
            return StepMap.generalized(self.exps)
        if self.map == "gerlach":
            if self.gerlach_n is None:
                raise ConfigError("map 'gerlach' needs gerlach_n")
            return StepMap.gerlach(int(self.gerlach_n))
        raise ConfigError(f"unknown map {self.map!r}")

    def domain_rect(self) -> DomainRect:
        return DomainRect(*map(float, self.domain), *map(int, self.res))

    def sweep_a1(self) -> np.ndarray:
        if self.a1_values is not None:
            return np.asarray(self.a1_values, dtype=np.float64)
        return a1_grid(self.a1_range[0], self.a1_range[1], int(self.res[1]))


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(d, dict):
        raise ConfigError("config file must hold a JSON object")
    d.pop("command", None)
    d.pop("analysis", None)
    return d


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=None, help="JSON config file; flags override it")
    p.add_argument("--poly", "--preset", dest="poly", default=S,
                   help=f"preset ({', '.join(sorted(PRESETS))}) or ascending coefficients, e.g. -1,0,1")
    p.add_argument("--map", choices=("modified", "generalized", "gerlach"), default=S)
    p.add_argument("--a0", type=float, default=S)
    p.add_argument("--a1", type=float, default=S)
    p.add_argument("--exps", type=float, nargs="+", default=S, help="exponents a_0..a_N of the generalized map")
    p.add_argument("--gerlach-n", dest="gerlach_n", type=int, default=S)
    p.add_argument("--eps", dest="epsilon", type=float, default=S)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=S)
    p.add_argument("--workers", type=int, default=S)
    p.add_argument("--backend", choices=("numba", "numpy"), default=S)
    p.add_argument("--out", default=S)


def _raster_flags(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--domain", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"), default=S)
    p.add_argument("--res", type=int, nargs=2, metavar=("NX", "NY"), default=S)
    p.add_argument("--x-range", dest="x_range", type=float, nargs=2, default=S)
    p.add_argument("--a1-range", dest="a1_range", type=float, nargs=2, default=S)
    p.add_argument("--a1-values", dest="a1_values", type=float, nargs="+", default=S)
    p.add_argument("--format", choices=("ppm", "png"), default=S)
    p.add_argument("--palette", choices=PALETTES, default=S)


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="basinmap", description="Basins of attraction of the modified Newton family.")
    parser.add_argument("--version", action="version", version=f"basinmap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("render", help="iteration-count image over a complex rectangle")
    _common(p)
    _raster_flags(p)

    p = sub.add_parser("sweep", help="iteration-count image over the (x, a1) plane")
    _common(p)
    _raster_flags(p)

    p = sub.add_parser("order", help="empirical convergence order of one orbit")
    _common(p)
    p.add_argument("--z0", type=float, nargs=2, metavar=("RE", "IM"), default=S)
    p.add_argument("--root", type=float, nargs=2, metavar=("RE", "IM"), default=S)
    p.add_argument("--dps", type=int, default=S)

    p = sub.add_parser("analyze", help="nodules, failure fraction, boundaries, growth, repulsion, critical a1")
    p.add_argument("analysis", choices=ANALYSES)
    _common(p)
    _raster_flags(p)
    p.add_argument("--probe-radius", dest="probe_radius", type=float, default=S)
    p.add_argument("--min-cells", dest="min_cells", type=int, default=S)
    p.add_argument("--regular-iter", dest="regular_iter", type=int, default=S)
    p.add_argument("--a1-clean", dest="a1_clean", type=float, default=S)
    p.add_argument("--a1-chaotic", dest="a1_chaotic", type=float, default=S)
    p.add_argument("--tol", type=float, default=S)
    return parser


def resolve_config(ns: argparse.Namespace) -> JobConfig:
    d = load_config(ns.config) if ns.config else {}
    skip = {"command", "analysis", "config"}
    d.update({k: v for k, v in vars(ns).items() if k not in skip})
    return JobConfig.from_dict(d)


def report(operation: str, cfg: JobConfig, outputs) -> dict:
    return {
        "operation": operation,
        "inputs": cfg.hashable_dict(),
        "config_hash": cfg.config_hash(),
        "outputs": outputs,
        "tool_version": __version__,
    }


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(payload: dict) -> str:
    from .raster import _jsonable

    return json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n"


def _print_counts(counts: dict) -> None:
    for k, v in counts.items():
        print(f"{k}: {v}")


def _write_raster(op: str, cfg: JobConfig, raster) -> None:
    out = Path(cfg.out or f"{op}.{cfg.format}")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_image(out, colorize(raster, cfg.palette), cfg.format)
    write_json(out.with_suffix(".json"), report(op, cfg, sidecar(raster, cfg.palette)))
    _print_counts(raster.counts())


def cmd_render(cfg: JobConfig) -> int:
    r = render_basin(cfg.polynomial(), cfg.params(), cfg.step_map(), cfg.domain_rect(),
                     workers=cfg.workers, backend=cfg.backend)
    _write_raster("render", cfg, r)
    return EXIT_OK


def cmd_sweep(cfg: JobConfig) -> int:
    if cfg.map != "modified":
        raise ConfigError("sweeps vary a1 of the modified map; use --map modified")
    s = render_sweep(cfg.polynomial(), (cfg.x_range[0], cfg.x_range[1], int(cfg.res[0])), cfg.sweep_a1(),
                     cfg.a0, cfg.epsilon, cfg.max_iter, workers=cfg.workers, backend=cfg.backend)
    _write_raster("sweep", cfg, s)
    return EXIT_OK


def cmd_order(cfg: JobConfig) -> int:
    if cfg.z0 is None:
        raise ConfigError("order needs --z0")
    root = complex(*cfg.root) if cfg.root is not None else None
    est = estimate_order(cfg.polynomial(), complex(*cfg.z0), root, cfg.params(), cfg.step_map(), dps=cfg.dps)
    _emit(_dump(report("order", cfg, est.to_dict())), cfg.out)
    return EXIT_OK


def cmd_analyze(cfg: JobConfig, which: str) -> int:
    poly = cfg.polynomial()
    if which == "growth":
        if cfg.a1_values is None:
            raise ConfigError("growth needs --a1-values")
        pts = nodule_growth_curve(poly, cfg.a0, list(cfg.a1_values), cfg.domain_rect(), min_cells=cfg.min_cells,
                                  regular_iter=cfg.regular_iter, epsilon=cfg.epsilon, max_iter=cfg.max_iter,
                                  workers=cfg.workers, backend=cfg.backend)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a1", "total_area", "nodule_count"])
        for p in pts:
            w.writerow([repr(p.a1), repr(p.total_area), p.nodule_count])
        _emit(buf.getvalue(), cfg.out)
        return EXIT_OK
    if which == "repulsive":
        values = list(cfg.a1_values) if cfg.a1_values is not None else [0.0]
        rows = repulsive_zero_scan(poly, values, cfg.probe_radius, cfg.a0)
        outputs = {"results": [{"a1": a, "converges_to_origin": b} for a, b in rows]}
    elif which == "critical":
        lo, hi = critical_a1_bracket(poly, (cfg.x_range[0], cfg.x_range[1], int(cfg.res[0])), cfg.a1_clean,
                                     cfg.a1_chaotic, cfg.tol, cfg.a0, cfg.epsilon, cfg.max_iter, cfg.backend)
        outputs = {"bracket": [lo, hi]}
    else:
        r = render_basin(poly, cfg.params(), cfg.step_map(), cfg.domain_rect(),
                         workers=cfg.workers, backend=cfg.backend)
        outputs = {"counts": r.counts()}
        if which == "fraction":
            outputs["fraction"] = non_convergent_fraction(r)
        elif which == "nodules":
            outputs.update(detect_nodules(r, cfg.min_cells, cfg.regular_iter).to_dict())
        else:
            cells = sorted(extract_boundary(r))
            outputs["boundary_count"] = len(cells)
            outputs["cells"] = [list(c) for c in cells]
    _emit(_dump(report(f"analyze.{which}", cfg, outputs)), cfg.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns)
        if ns.command == "render":
            return cmd_render(cfg)
        if ns.command == "sweep":
            return cmd_sweep(cfg)
        if ns.command == "order":
            return cmd_order(cfg)
        return cmd_analyze(cfg, ns.analysis)
    except NoConvergence as e:
        print(f"basinmap: root finding failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ROOTS
    except OrderEstimationError as e:
        print(f"basinmap: order estimation failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ORDER
    except (ConfigError, ValueError, TypeError, OSError) as e:
        print(f"basinmap: invalid configuration: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
