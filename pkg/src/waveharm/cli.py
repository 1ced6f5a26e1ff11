"""Batch front end: ``waveharm <command> config.json [--out-dir DIR] [--threads N]``.

Commands
--------
solve     far-field table, cross sections, norms and decay monitors at one k
sweep     cross sections over a k-sweep from one cached moment build
field     near field at exterior points
kernel    truncated Green-kernel values for point pairs
dtn       Dirichlet-to-Neumann values at boundary points
validate  invariant suite with pass/fail report

Exit codes: 0 success, 1 numerical failure, 2 configuration error.
Complex numbers appear as ``{"re": .., "im": ..}`` in JSON and as two
adjacent columns in CSV. Every output carries the resolved configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, kernels, oracle
from .gram import (
    BoundaryNodes,
    FrequencyMoments,
    GramAssemblyError,
    GramCapExceeded,
    assemble_from_moments,
    compute_moments,
    gram_harmonic,
    gram_polyline,
    gram_quadrature,
    zonal_block,
)
from .indexing import count_upto, rank
from .orthonorm import ConditioningError, decay_report, orthonormalize
from .quadrature import QuadratureError, QuadratureRule, default_rule, gauss_rule
from .scattering import (
    BoundaryData,
    DomainError,
    GridData,
    ModeTrace,
    PlaneWave,
    boundary_moments,
    cross_sections,
    dtn_apply,
    expand,
    far_field,
    green_kernel,
    near_field,
    sigma_quadrature,
    solve,
    transport_cross_section,
    transport_quadrature,
)
from .surface import GeometryError, HarmonicStarSurface, RevolutionPolyline, Sphere, Surface, surface_from_dict, validate

logger = logging.getLogger("waveharm.cli")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

DEFAULT_TOLERANCES = {
    "gram_moments": 1e-10,
    "gram_harmonic": 1e-8,
    "gram_polyline": 1e-8,
    "orthonormality": 1e-10,
    "sigma_paths": 1e-10,
    "parseval": 1e-8,
    "transport": 1e-6,
    "sphere_sigma": 1e-6,
    "sphere_mode": 1e-9,
}


class ConfigError(ValueError):
    pass


# -- configuration ----------------------------------------------------------


@dataclass
class JobConfig:
    surface: Surface
    ks: list[float]
    sweep: bool
    L: tuple[int, int]
    boundary: BoundaryData
    resolved: dict
    outputs: list[str] = field(default_factory=list)
    quadrature: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    points: np.ndarray | None = None
    r_points: np.ndarray | None = None
    t_points: np.ndarray | None = None
    boundary_points: np.ndarray | None = None
    moment_cache: Path | None = None

    @property
    def k(self) -> float:
        return self.ks[0]

    @property
    def count(self) -> int:
        return count_upto(self.L)

    @property
    def l_max(self) -> int:
        return self.L[0]

    def rule(self) -> QuadratureRule:
        q = self.quadrature
        if q.get("n_theta") or q.get("n_phi"):
            base = default_rule(self.l_max, self.surface)
            return gauss_rule(
                int(q.get("n_theta", base.n_per_panel)), int(q.get("n_phi", base.n_phi)), self.surface.breakpoints
            )
        return default_rule(self.l_max, self.surface)


def _k_values(spec) -> tuple[list[float], bool, object]:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        k = float(spec)
        if not k > 0:
            raise ConfigError(f"k: must be positive, got {spec}")
        return [k], False, k
    if isinstance(spec, dict):
        try:
            start, stop, count = float(spec["start"]), float(spec["stop"]), int(spec["count"])
        except KeyError as exc:
            raise ConfigError(f"k.{exc.args[0]}: missing") from None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"k: {exc}") from None
        spacing = spec.get("spacing", "linear")
        if not (start > 0 and stop > 0):
            raise ConfigError("k.start/k.stop: must be positive")
        if count < 1:
            raise ConfigError("k.count: must be >= 1")
        if spacing == "linear":
            ks = np.linspace(start, stop, count)
        elif spacing == "log":
            ks = np.geomspace(start, stop, count)
        else:
            raise ConfigError(f"k.spacing: expected 'linear' or 'log', got {spacing!r}")
        ks = [float(x) for x in ks]
        ks[0], ks[-1] = start, stop  # endpoints exactly as given
        return ks, True, {"start": start, "stop": stop, "count": count, "spacing": spacing}
    raise ConfigError("k: expected a number or a sweep object")


def _truncation(spec) -> tuple[int, int]:
    if isinstance(spec, int) and not isinstance(spec, bool):
        spec = {"l_max": spec}
    if not isinstance(spec, dict):
        raise ConfigError("truncation: expected {'l_max': int} or {'L': [l, m]}")
    if "l_max" in spec:
        l = spec["l_max"]
        if not isinstance(l, int) or l < 0:
            raise ConfigError("truncation.l_max: must be a non-negative integer")
        return (l, l)
    if "L" in spec:
        try:
            l, m = (int(x) for x in spec["L"])
            rank(l, m)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"truncation.L: {exc}") from None
        return (l, m)
    raise ConfigError("truncation: needs 'l_max' or 'L'")


def _boundary(spec, base: Path) -> BoundaryData:
    if spec is None:
        return PlaneWave((0.0, 0.0, 1.0))
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("boundary: expected exactly one of plane_wave, mode_trace, grid_file")
    (kind, body), = spec.items()
    try:
        if kind == "plane_wave":
            return PlaneWave(tuple(float(x) for x in body.get("direction", (0, 0, 1))))
        if kind == "mode_trace":
            l, m = int(body["l"]), int(body["m"])
            rank(l, m)
            return ModeTrace(l, m)
        if kind == "grid_file":
            path = Path(body if isinstance(body, str) else body["path"])
            return GridData.from_csv(path if path.is_absolute() else base / path)
    except KeyError as exc:
        raise ConfigError(f"boundary.{kind}.{exc.args[0]}: missing") from None
    except (TypeError, ValueError, OSError) as exc:
        raise ConfigError(f"boundary.{kind}: {exc}") from None
    raise ConfigError(f"boundary: unknown kind {kind!r}")


def _point_array(doc, key, width) -> np.ndarray | None:
    if key not in doc:
        return None
    try:
        arr = np.asarray(doc[key], dtype=float).reshape(-1, width)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: expected a list of {width}-vectors ({exc})") from None
    return arr


def parse_config(doc: dict, base: Path | None = None) -> JobConfig:
    base = base or Path.cwd()
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    if "geometry" not in doc:
        raise ConfigError("geometry: missing")
    try:
        surface = surface_from_dict(doc["geometry"])
    except GeometryError as exc:
        raise ConfigError(str(exc)) from None
    ks, sweep, k_resolved = _k_values(doc.get("k", 1.0))
    L = _truncation(doc.get("truncation", {"l_max": 8}))
    boundary = _boundary(doc.get("boundary"), base)
    tol = dict(DEFAULT_TOLERANCES)
    for key, val in (doc.get("tolerances") or {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"tolerances.{key}: unknown tolerance")
        try:
            tol[key] = float(val)
        except (TypeError, ValueError):
            raise ConfigError(f"tolerances.{key}: expected a number") from None
    quad = dict(doc.get("quadrature") or {})
    for key in quad:
        if key not in ("n_theta", "n_phi"):
            raise ConfigError(f"quadrature.{key}: unknown override")
    cache = doc.get("moment_cache")
    resolved = {
        "geometry": surface.to_dict(),
        "k": k_resolved,
        "truncation": {"L": list(L)},
        "boundary": boundary.to_dict(),
        "outputs": list(doc.get("outputs", [])),
        "quadrature": quad,
        "tolerances": tol,
    }
    for key in ("points", "r_points", "t_points", "boundary_points"):
        if key in doc:
            resolved[key] = doc[key]
    if cache:
        resolved["moment_cache"] = str(cache)
    return JobConfig(
        surface=surface,
        ks=ks,
        sweep=sweep,
        L=L,
        boundary=boundary,
        resolved=resolved,
        outputs=list(doc.get("outputs", [])),
        quadrature=quad,
        tolerances=tol,
        points=_point_array(doc, "points", 3),
        r_points=_point_array(doc, "r_points", 3),
        t_points=_point_array(doc, "t_points", 3),
        boundary_points=_point_array(doc, "boundary_points", 2),
        moment_cache=Path(cache) if cache else None,
    )


def load_config(path) -> JobConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc})") from None
    return parse_config(doc, path.parent)


# -- output helpers ---------------------------------------------------------


def cjson(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _header(cfg: JobConfig, command: str, rule: QuadratureRule | None = None, threads=None) -> dict:
    return {
        "command": command,
        "version": __version__,
        "jit": kernels.USING_JIT,
        "threads": threads,
        "config": cfg.resolved,
        "truncation": {"L": list(cfg.L), "count": cfg.count, "l_max": cfg.l_max},
        "quadrature": rule.to_dict() if rule is not None else None,
    }


def _write_json(path: Path, doc: dict) -> Path:
    path.write_text(json.dumps(doc, indent=2, default=_json_default))
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return cjson(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _write_csv(path: Path, header: dict, columns: list[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write("# " + json.dumps(header, default=_json_default) + "\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(row)
    return path


def _validated(cfg: JobConfig) -> None:
    rep = validate(cfg.surface)
    if not rep.ok:
        raise ConfigError("geometry: " + "; ".join(rep.violations))


def _is_axial(data: BoundaryData) -> bool:
    return isinstance(data, PlaneWave) and np.allclose(data.direction, (0.0, 0.0, 1.0), atol=1e-12)


def _incidence(data: BoundaryData):
    return data.direction if isinstance(data, PlaneWave) else (0.0, 0.0, 1.0)


def _transport(ff, data: BoundaryData) -> dict:
    if _is_axial(data):
        return transport_cross_section(ff).to_dict()
    return {"quadrature": transport_quadrature(ff, _incidence(data)), "composed": None}


# -- commands ---------------------------------------------------------------


def cmd_solve(cfg: JobConfig, out: Path, threads=None) -> int:
    _validated(cfg)
    rule = cfg.rule()
    t0 = time.perf_counter()
    sol = solve(cfg.surface, cfg.k, cfg.L, cfg.boundary, rule=rule)
    elapsed = time.perf_counter() - t0
    ff = sol.farfield
    cs = sol.cross_sections()
    decay = decay_report(sol.transform)
    doc = {
        "header": _header(cfg, "solve", rule, threads),
        "k": cfg.k,
        "amplitudes": [
            {"l": int(l), "m": int(m), "A": cjson(a)} for l, m, a in zip(ff.ls, ff.ms, ff.A)
        ],
        "sigma_T": cs.to_dict(),
        "transport": _transport(ff, cfg.boundary),
        "lambda": sol.transform.lam.tolist(),
        "min_lambda": float(sol.transform.lam.min()),
        "decay": decay.to_dict(),
        "uhat_degree_norms": sol.expansion.degree_norms().tolist(),
        "orthonormality_error": sol.transform.orthonormality_error(sol.gram),
        "timing_seconds": elapsed,
    }
    _write_json(out / "solve.json", doc)
    _write_csv(
        out / "amplitudes.csv",
        doc["header"],
        ["l", "m", "A_re", "A_im"],
        ([int(l), int(m), a.real, a.imag] for l, m, a in zip(ff.ls, ff.ms, ff.A)),
    )
    logger.info("solve: sigma_T=%.12g (k=%g, L=%s) in %.3fs", cs.value, cfg.k, cfg.L, elapsed)
    return EXIT_OK


def _load_or_build_moments(cfg: JobConfig, nodes: BoundaryNodes) -> tuple[FrequencyMoments, bool]:
    path = cfg.moment_cache
    if path is not None and path.exists():
        try:
            mom = FrequencyMoments.load(path)
        except (ValueError, OSError) as exc:
            logger.warning("ignoring moment cache %s: %s", path, exc)
        else:
            if mom.matches(cfg.surface, cfg.count, nodes.rule):
                return mom, True
            logger.warning("moment cache %s does not match this job; rebuilding", path)
    mom = compute_moments(cfg.surface, nodes=nodes)
    if path is not None:
        mom.save(path)
    return mom, False


def run_sweep(cfg: JobConfig, threads=None) -> tuple[list[dict], dict]:
    """Per-k results and instrumentation for a job (sweep or single k)."""
    rule = cfg.rule()
    nodes = BoundaryNodes.build(cfg.surface, cfg.L, rule)
    mom, cached = _load_or_build_moments(cfg, nodes)
    evals_after_build = cfg.surface.evaluations

    def one(k):
        try:
            sol = solve(None, k, cfg.L, cfg.boundary, nodes=nodes, moments=mom)
            cs = sol.cross_sections()
            tr = _transport(sol.farfield, cfg.boundary)
            R = tr["composed"] if tr.get("composed") is not None else tr["quadrature"]
            return {
                "k": k,
                "sigma_T": cs.value,
                "sigma_T_double_sum": cs.double_sum,
                "R": R,
                "min_lambda": float(sol.transform.lam.min()),
                "status": "ok",
            }
        except (ConditioningError, GramAssemblyError, QuadratureError, FloatingPointError) as exc:
            return {"k": k, "sigma_T": math.nan, "sigma_T_double_sum": math.nan, "R": math.nan, "min_lambda": math.nan, "status": f"failed: {exc}"}

    if threads and threads > 1 and len(cfg.ks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, cfg.ks))
    else:
        rows = [one(k) for k in cfg.ks]
    info = {
        "moment_builds": 0 if cached else 1,
        "moment_cache_hit": cached,
        "surface_evaluations_total": cfg.surface.evaluations,
        "surface_evaluations_after_moment_build": cfg.surface.evaluations - evals_after_build,
        "rule": rule.to_dict(),
    }
    return rows, info


def cmd_sweep(cfg: JobConfig, out: Path, threads=None) -> int:
    _validated(cfg)
    rows, info = run_sweep(cfg, threads)
    header = _header(cfg, "sweep", None, threads)
    header["quadrature"] = info["rule"]
    cols = ["k", "sigma_T", "R", "min_lambda", "status"]
    _write_csv(out / "sweep.csv", header, cols, ([r[c] for c in cols] for r in rows))
    failed = [r["k"] for r in rows if r["status"] != "ok"]
    _write_json(out / "sweep.json", {"header": header, "instrumentation": info, "rows": rows, "failed_k": failed})
    return EXIT_NUMERICAL if failed and len(failed) == len(rows) else EXIT_OK


def _solution(cfg: JobConfig):
    rule = cfg.rule()
    return solve(cfg.surface, cfg.k, cfg.L, cfg.boundary, rule=rule), rule


def _exterior_rows(surface: Surface, pts: np.ndarray) -> np.ndarray:
    rho = np.linalg.norm(pts, axis=-1)
    ok = rho > 0
    ok[ok] = surface.is_exterior(pts[ok])
    return ok


def cmd_field(cfg: JobConfig, out: Path, threads=None) -> int:
    if cfg.points is None:
        raise ConfigError("points: required for the field command")
    _validated(cfg)
    sol, rule = _solution(cfg)
    pts = cfg.points
    ok = _exterior_rows(cfg.surface, pts)
    vals = np.full(len(pts), np.nan + 1j * np.nan)
    if ok.any():
        vals[ok] = near_field(sol.expansion, sol.transform, None, pts[ok], check=False)
    header = _header(cfg, "field", rule, threads)
    _write_csv(
        out / "field.csv",
        header,
        ["x", "y", "z", "u_re", "u_im", "status"],
        ([*p, v.real, v.imag, "ok" if good else "interior"] for p, v, good in zip(pts, vals, ok)),
    )
    _write_json(
        out / "field.json",
        {
            "header": header,
            "values": [cjson(v) if good else None for v, good in zip(vals, ok)],
            "interior_rows": np.flatnonzero(~ok).tolist(),
        },
    )
    return EXIT_OK


def cmd_kernel(cfg: JobConfig, out: Path, threads=None) -> int:
    if cfg.r_points is None or cfg.t_points is None:
        raise ConfigError("r_points/t_points: required for the kernel command")
    _validated(cfg)
    rule = cfg.rule()
    G = gram_quadrature(cfg.surface, cfg.k, cfg.L, rule)
    T = orthonormalize(G)
    r, t = cfg.r_points, cfg.t_points
    okr, okt = _exterior_rows(cfg.surface, r), _exterior_rows(cfg.surface, t)
    K = np.full((len(r), len(t)), np.nan + 1j * np.nan)
    if okr.any() and okt.any():
        K[np.ix_(okr, okt)] = green_kernel(T, r[okr], t[okt])
    sym = None
    both = np.concatenate([r[okr], t[okt]])
    if len(both):
        KK = green_kernel(T, both, both)
        sym = float(np.max(np.abs(KK - KK.conj().T)))
    header = _header(cfg, "kernel", rule, threads)
    rows = []
    for a in range(len(r)):
        for b in range(len(t)):
            status = "ok" if okr[a] and okt[b] else "interior"
            rows.append([a, b, K[a, b].real, K[a, b].imag, status])
    _write_csv(out / "kernel.csv", header, ["r_index", "t_index", "K_re", "K_im", "status"], rows)
    _write_json(out / "kernel.json", {"header": header, "hermitian_max_abs_error": sym, "interior_r": np.flatnonzero(~okr).tolist(), "interior_t": np.flatnonzero(~okt).tolist()})
    return EXIT_OK


def cmd_dtn(cfg: JobConfig, out: Path, threads=None) -> int:
    if cfg.boundary_points is None:
        raise ConfigError("boundary_points: required for the dtn command")
    bp = cfg.boundary_points
    if np.any(bp[:, 0] < 0) or np.any(bp[:, 0] > np.pi):
        raise ConfigError("boundary_points: theta must lie in [0, pi]")
    _validated(cfg)
    sol, rule = _solution(cfg)
    vals = dtn_apply(sol.expansion, sol.transform, cfg.surface, bp[:, 0], bp[:, 1])
    header = _header(cfg, "dtn", rule, threads)
    _write_csv(out / "dtn.csv", header, ["theta", "phi", "dtn_re", "dtn_im"], ([*p, v.real, v.imag] for p, v in zip(bp, vals)))
    _write_json(out / "dtn.json", {"header": header, "values": [cjson(v) for v in vals]})
    return EXIT_OK


def _is_sphere(surface) -> float | None:
    if isinstance(surface, Sphere):
        return surface.R
    if isinstance(surface, HarmonicStarSurface) and surface.nonzero_ranks() == [0]:
        return float(np.sqrt(4 * np.pi) / surface.a[0].real)
    return None


def _check(name: str, value, tol, extra=None) -> dict:
    ok = value is not None and bool(np.isfinite(value)) and value <= tol
    d = {"name": name, "value": value, "tolerance": tol, "pass": ok}
    if extra:
        d.update(extra)
    return d


def _rel(a, b) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(np.asarray(b)), 1e-300))


def validation_suite(cfg: JobConfig) -> list[dict]:
    tol = cfg.tolerances
    checks: list[dict] = []
    rep = validate(cfg.surface)
    checks.append({"name": "geometry", "pass": rep.ok, "report": rep.to_dict()})
    if not rep.ok:
        return checks
    rule = cfg.rule()
    k = cfg.k
    nodes = BoundaryNodes.build(cfg.surface, cfg.L, rule)
    Gq = gram_quadrature(None, k, nodes=nodes)
    mom = compute_moments(cfg.surface, nodes=nodes)
    checks.append(_check("gram_quadrature_vs_moments", _rel(assemble_from_moments(mom, k).matrix, Gq.matrix), tol["gram_moments"]))
    if isinstance(cfg.surface, HarmonicStarSurface):
        lh = min(cfg.l_max, 4)
        try:
            Gh = gram_harmonic(cfg.surface, k, (lh, lh))
            Gref = gram_quadrature(cfg.surface, k, (lh, lh))
            checks.append(_check("gram_quadrature_vs_harmonic", _rel(Gh.matrix, Gref.matrix), tol["gram_harmonic"], {"l_max": lh}))
        except GramCapExceeded as exc:
            checks.append({"name": "gram_quadrature_vs_harmonic", "pass": True, "skipped": str(exc)})
    if isinstance(cfg.surface, RevolutionPolyline):
        Gp = gram_polyline(cfg.surface, k, cfg.l_max)
        checks.append(_check("gram_quadrature_vs_polyline", _rel(Gp.matrix, zonal_block(Gq, cfg.l_max).matrix), tol["gram_polyline"]))
    try:
        T = orthonormalize(Gq)
    except ConditioningError as exc:
        checks.append({"name": "orthonormality", "pass": False, "error": str(exc)})
        return checks
    checks.append(_check("orthonormality", T.orthonormality_error(Gq), tol["orthonormality"]))
    u = boundary_moments(cfg.boundary, None, k, nodes=nodes)
    ex = expand(u, T)
    ff = far_field(ex, T)
    cs = cross_sections(ex, T, ff)
    checks.append(_check("sigma_T_double_sum", cs.discrepancy, tol["sigma_paths"], {"sigma_T": cs.value}))
    sq = sigma_quadrature(ff)
    checks.append(_check("sigma_T_parseval", abs(sq - cs.value) / max(cs.value, 1e-300), tol["parseval"]))
    if _is_axial(cfg.boundary):
        tr = transport_cross_section(ff)
        checks.append(
            _check(
                "transport_composed_vs_quadrature",
                abs(tr.composed - tr.quadrature) / max(abs(tr.quadrature), 1e-300),
                tol["transport"],
                {
                    "composed": tr.composed,
                    "quadrature": tr.quadrature,
                    "literal_composed": tr.sigma_T - 2 * tr.literal_sum,
                    "resolution": "sigma_T - 2 * sum alpha_{l+1,m} Re(A_lm conj A_{l+1,m}) reproduces the quadrature",
                },
            )
        )
    R = _is_sphere(cfg.surface)
    if R is not None:
        if _is_axial(cfg.boundary):
            ref = oracle.sphere_plane_wave_sigma(k, R)
            checks.append(_check("sphere_sigma_vs_series", abs(cs.value - ref) / ref, tol["sphere_sigma"], {"reference": ref}))
        if isinstance(cfg.boundary, ModeTrace):
            e = np.zeros(T.count, dtype=complex)
            e[rank(cfg.boundary.l, cfg.boundary.m)] = 1.0 / k
            checks.append(_check("sphere_mode_amplitudes", float(np.abs(ff.A - e).max() * k), tol["sphere_mode"]))
    return checks


def cmd_validate(cfg: JobConfig, out: Path, threads=None) -> int:
    checks = validation_suite(cfg)
    ok = all(c["pass"] for c in checks)
    header = _header(cfg, "validate", None, threads)
    _write_json(out / "validate.json", {"header": header, "pass": ok, "checks": checks})
    for c in checks:
        logger.info("%s %s", "PASS" if c["pass"] else "FAIL", c["name"])
    return EXIT_OK if ok else EXIT_NUMERICAL


COMMANDS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "field": cmd_field,
    "kernel": cmd_kernel,
    "dtn": cmd_dtn,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="waveharm", description="Exterior Dirichlet Helmholtz solver (outgoing-wave basis).")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("config", help="JSON job document")
    p.add_argument("--out-dir", default=".", help="directory for result files (created if missing)")
    p.add_argument("--threads", type=int, default=None, help="worker threads (fallback: WAVEHARM_THREADS)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _threads(arg) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("WAVEHARM_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"WAVEHARM_THREADS: expected an integer, got {env!r}") from None
    return None


def _error(out: Path | None, code: int, exc: Exception) -> int:
    doc = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    print(json.dumps(doc), file=sys.stderr)
    if out is not None and out.is_dir():
        _write_json(out / "error.json", doc)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        threads = _threads(args.threads)
        kernels.set_threads(threads)
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg, out, threads)
    except (ConfigError, GeometryError) as exc:
        return _error(out, EXIT_CONFIG, exc)
    except (ConditioningError, GramAssemblyError, QuadratureError, DomainError, ArithmeticError) as exc:
        return _error(out, EXIT_NUMERICAL, exc)


if __name__ == "__main__":
    sys.exit(main())
