"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records one pass/fail line (printed in the terminal summary)
before asserting, so a failing criterion still reports its measured value.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE, make_cone, make_perturbed, make_sphere, make_tilted, random_exterior_points
from waveharm import kernels, oracle
from waveharm.cli import parse_config, run_sweep, validation_suite
from waveharm.gram import (
    BoundaryNodes,
    assemble_from_moments,
    compute_moments,
    gram_harmonic,
    gram_polyline,
    gram_quadrature,
    zonal_block,
)
from waveharm.indexing import rank
from waveharm.orthonorm import decay_report, orthonormalize
from waveharm.quadrature import default_rule
from waveharm.scattering import (
    ModeTrace,
    PlaneWave,
    boundary_residual,
    direct_sigma_T,
    dtn_apply,
    near_field,
    solve,
    total_cross_section,
    transport_cross_section,
)


def record(num: int, ok: bool, msg: str) -> None:
    ACCEPTANCE[num] = (bool(ok), msg)


def rel_fro(a, b) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_criterion_01_sphere_total_cross_section():
    kernels.set_threads(1)
    solve(make_sphere(), 1.0, (2, 2), PlaneWave())  # compile kernels outside the timed run
    t0 = time.perf_counter()
    sol = solve(make_sphere(1.0), 1.0, (12, 12), PlaneWave((0, 0, 1)))
    sigma = total_cross_section(sol.farfield)
    elapsed = time.perf_counter() - t0
    ref = oracle.sphere_plane_wave_sigma(1.0, 1.0)
    err = abs(sigma - ref) / ref
    ok = err <= 1e-6 and elapsed < 10.0
    record(1, ok, f"sigma_T={sigma:.12f} series={ref:.12f} rel={err:.2e} time={elapsed:.2f}s")
    assert err <= 1e-6
    assert elapsed < 10.0


def test_criterion_02_orthonormality_contract():
    worst = 0.0
    for surf in (make_sphere(), make_perturbed(), make_cone()):
        for k in (0.5, 1.0, 2.0):
            G = gram_quadrature(surf, k, (8, 8))
            T = orthonormalize(G)
            worst = max(worst, T.orthonormality_error(G))
    record(2, worst <= 1e-10, f"max ||C G C^H - I||_F = {worst:.2e} (3 surfaces x 3 k, L=(8,8))")
    assert worst <= 1e-10


def test_criterion_03_gram_path_equivalence():
    worst_mom = 0.0
    for surf, L in ((make_sphere(), (8, 8)), (make_perturbed(), (6, 6)), (make_cone(), (6, 6)), (make_tilted(), (4, 4))):
        nodes = BoundaryNodes.build(surf, L)
        mom = compute_moments(surf, nodes=nodes)
        for k in (0.5, 1.3, 2.0):
            worst_mom = max(
                worst_mom, rel_fro(assemble_from_moments(mom, k).matrix, gram_quadrature(None, k, nodes=nodes).matrix)
            )
    tilted = make_tilted()
    harm = rel_fro(gram_harmonic(tilted, 1.0, (4, 4)).matrix, gram_quadrature(tilted, 1.0, (4, 4)).matrix)
    cone = make_cone()
    poly = rel_fro(gram_polyline(cone, 1.0, 8).matrix, zonal_block(gram_quadrature(cone, 1.0, (8, 8)), 8).matrix)
    ok = worst_mom <= 1e-10 and harm <= 1e-8 and poly <= 1e-8
    record(3, ok, f"moments {worst_mom:.2e}, harmonic {harm:.2e}, polyline {poly:.2e}")
    assert worst_mom <= 1e-10
    assert harm <= 1e-8
    assert poly <= 1e-8


def test_criterion_04_single_mode_exactness(rng):
    k = 1.0
    sph = make_sphere()
    worst_A = worst_u = 0.0
    pts = random_exterior_points(rng, 100, 1.05, 5.0)
    for q in ((0, 0), (2, 1), (3, -2), (5, 4)):
        sol = solve(sph, k, (8, 8), ModeTrace(*q))
        e = np.zeros(sol.transform.count, dtype=complex)
        e[rank(*q)] = 1.0 / k
        worst_A = max(worst_A, float(np.abs(sol.farfield.A - e).max()))
        u = near_field(sol.expansion, sol.transform, sph, pts)
        ref = oracle.sphere_mode_solution(*q, 1.0, k, pts)
        worst_u = max(worst_u, float(np.abs(u - ref).max() / np.abs(ref).max()))
    ok = worst_A <= 1e-9 and worst_u <= 1e-9
    record(4, ok, f"max |A - delta/k| = {worst_A:.2e}, near field rel = {worst_u:.2e} (100 points)")
    assert worst_A <= 1e-9
    assert worst_u <= 1e-9


def test_criterion_05_sigma_double_path():
    worst = 0.0
    runs = 0
    for surf in (make_sphere(), make_perturbed(), make_cone(), make_tilted()):
        for k in (0.5, 1.0, 2.0):
            for data in (PlaneWave((0, 0, 1)), PlaneWave((1, 1, 0)), ModeTrace(2, 1)):
                sol = solve(surf, k, (6, 6), data)
                a = total_cross_section(sol.farfield)
                b = direct_sigma_T(sol.expansion, sol.transform)
                worst = max(worst, abs(a - b) / abs(a))
                runs += 1
    record(5, worst <= 1e-10, f"max relative gap {worst:.2e} over {runs} runs")
    assert worst <= 1e-10


def test_criterion_06_transport_cross_section():
    sol = solve(make_sphere(), 1.0, (12, 12), PlaneWave((0, 0, 1)))
    tr = transport_cross_section(sol.farfield)
    err = abs(tr.composed - tr.quadrature) / abs(tr.quadrature)
    literal_err = abs((tr.sigma_T - 2 * tr.literal_sum) - tr.quadrature) / abs(tr.quadrature)
    cfg = parse_config(
        {
            "geometry": {"type": "sphere", "radius": 1.0},
            "k": 1.0,
            "truncation": {"l_max": 12},
            "boundary": {"plane_wave": {"direction": [0, 0, 1]}},
        }
    )
    checks = {c["name"]: c for c in validation_suite(cfg)}
    in_report = checks.get("transport_composed_vs_quadrature", {}).get("pass", False)
    ok = err <= 1e-6 and in_report
    record(
        6,
        ok,
        f"composed R={tr.composed:.10f} quadrature={tr.quadrature:.10f} rel={err:.2e};"
        f" literal pairing off by {literal_err:.2e}; validate report entry={'yes' if in_report else 'no'}",
    )
    assert err <= 1e-6
    assert in_report


def test_criterion_07_dtn_sphere_eigenrelation():
    a, k = 1.0, 1.3
    sph = make_sphere(a)
    th = np.array([0.0, 0.3, 1.0, np.pi / 2, 2.2, 3.0, np.pi])
    ph = np.array([0.0, 1.1, 2.5, 4.0, 0.7, 5.9, 3.3])
    worst = 0.0
    for l in range(7):
        for m in range(-l, l + 1):
            sol = solve(sph, k, (8, 8), ModeTrace(l, m))
            got = dtn_apply(sol.expansion, sol.transform, sph, th, ph)
            ref = oracle.sphere_mode_dtn(l, m, a, k, th, ph)
            worst = max(worst, float(np.abs(got - ref).max() / np.abs(ref).max()))
    record(7, worst <= 1e-8, f"max relative DtN error {worst:.2e} for l <= 6, all m")
    assert worst <= 1e-8


def _monotone_growth(seq, rtol=1e-8) -> bool:
    tail = np.asarray(seq[-4:], float)
    return bool(np.all(tail[1:] > tail[:-1] * (1 + rtol)))


def test_criterion_08_estimate_monitors():
    failures = []
    summary = []
    for name, surf in (("sphere", make_sphere()), ("perturbed", make_perturbed()), ("cone", make_cone())):
        min_lam, col_sup = [], []
        for L in range(4, 11):
            sol = solve(surf, 1.0, (L, L), PlaneWave())
            rep = decay_report(sol.transform)
            min_lam.append(rep.min_lambda)
            col_sup.append(rep.C1)
            tail = sol.expansion.degree_norms()
        if not min(min_lam) > 0:
            failures.append(f"{name}: min lambda not positive")
        if _monotone_growth([1.0 / x for x in min_lam]):
            failures.append(f"{name}: min lambda shrinking")
        if _monotone_growth(col_sup):
            failures.append(f"{name}: column sup growing")
        if _monotone_growth(tail):
            failures.append(f"{name}: uhat tail growing")
        summary.append(f"{name} minlam={min(min_lam):.3f} C1={max(col_sup):.3f} tail={tail[-1]:.1e}")
    record(8, not failures, "; ".join(summary + failures))
    assert not failures


def test_criterion_09_boundary_reproduction():
    surf = make_perturbed()
    rule = default_rule(10, surf)
    nodes = BoundaryNodes.build(surf, (10, 10), rule)
    pw = PlaneWave((0, 0, 1))
    res = []
    for L in range(2, 11):
        sub = nodes.truncated((L + 1) ** 2)
        sol = solve(None, 2.0, (L, L), pw, nodes=sub)
        res.append(boundary_residual(sol.expansion, sol.transform, pw, nodes))
    res = np.array(res)
    ok = bool(np.all(np.diff(res) < 0))
    record(9, ok, "residuals L=2..10: " + " ".join(f"{r:.1e}" for r in res))
    assert ok


def test_criterion_10_sweep_amortization():
    doc = {
        "geometry": {"type": "harmonic", "coeffs": [{"l": 0, "m": 0, "re": math.sqrt(4 * math.pi)}, {"l": 2, "m": 0, "re": 0.1}]},
        "k": {"start": 0.5, "stop": 3.0, "count": 50, "spacing": "linear"},
        "truncation": {"l_max": 6},
    }
    cfg = parse_config(doc)
    rows, info = run_sweep(cfg)
    builds = info["moment_builds"]
    after = info["surface_evaluations_after_moment_build"]
    worst = 0.0
    surf = make_perturbed()
    for row in rows:
        ref = solve(surf, row["k"], (6, 6), PlaneWave())
        worst = max(worst, abs(row["sigma_T"] - total_cross_section(ref.farfield)) / row["sigma_T"])
    ok = builds == 1 and after == 0 and len(rows) == 50 and worst <= 1e-10
    record(10, ok, f"moment builds={builds}, surface evaluations after build={after}, max rel gap vs per-k solves={worst:.2e}")
    assert builds == 1
    assert after == 0
    assert worst <= 1e-10
