import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from waveharm import oracle
from waveharm.cli import ConfigError, main, parse_config, run_sweep

SPHERE = {"type": "sphere", "radius": 1.0}
PERTURBED = {"type": "harmonic", "coeffs": [{"l": 0, "m": 0, "re": math.sqrt(4 * math.pi)}, {"l": 2, "m": 0, "re": 0.1}]}


def run(tmp_path, command, doc, *extra):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out"
    code = main([command, str(cfg), "--out-dir", str(out), *extra])
    return code, out


def read_csv_header(path):
    first = path.read_text().splitlines()[0]
    assert first.startswith("# ")
    return json.loads(first[2:])


def test_solve_outputs(tmp_path):
    code, out = run(tmp_path, "solve", {"geometry": SPHERE, "k": 1.0, "truncation": {"l_max": 10}})
    assert code == 0
    doc = json.loads((out / "solve.json").read_text())
    sigma = doc["sigma_T"]["coefficient_sum"]
    assert sigma == pytest.approx(oracle.sphere_plane_wave_sigma(1.0), rel=1e-8)
    hdr = read_csv_header(out / "amplitudes.csv")
    assert hdr["command"] == "solve" and hdr["truncation"]["L"] == [10, 10]
    assert hdr["quadrature"]["n_phi"] > 0
    rows = np.loadtxt(out / "amplitudes.csv", delimiter=",", comments="#", skiprows=2)
    assert rows.shape == (121, 4)


def test_sweep_log_spacing_and_cache(tmp_path):
    doc = {
        "geometry": PERTURBED,
        "k": {"start": 0.5, "stop": 4.0, "count": 4, "spacing": "log"},
        "truncation": {"l_max": 4},
        "moment_cache": str(tmp_path / "mom.whm"),
    }
    code, out = run(tmp_path, "sweep", doc)
    assert code == 0
    res = json.loads((out / "sweep.json").read_text())
    ks = [r["k"] for r in res["rows"]]
    assert ks[0] == 0.5 and ks[-1] == 4.0
    assert ks[1] == pytest.approx(1.0) and ks[2] == pytest.approx(2.0)
    assert res["instrumentation"]["moment_builds"] == 1
    code, out2 = run(tmp_path, "sweep", doc)
    res2 = json.loads((out2 / "sweep.json").read_text())
    assert res2["instrumentation"]["moment_cache_hit"] is True
    assert [r["sigma_T"] for r in res2["rows"]] == [r["sigma_T"] for r in res["rows"]]


def test_sweep_threads_agree():
    cfg = parse_config({"geometry": PERTURBED, "k": {"start": 0.5, "stop": 2.0, "count": 5}, "truncation": 3})
    a, _ = run_sweep(cfg)
    b, _ = run_sweep(parse_config({"geometry": PERTURBED, "k": {"start": 0.5, "stop": 2.0, "count": 5}, "truncation": 3}), threads=3)
    assert [r["sigma_T"] for r in a] == [r["sigma_T"] for r in b]


def test_field_flags_interior(tmp_path):
    doc = {"geometry": SPHERE, "k": 1.0, "truncation": 4, "points": [[0, 0, 2.0], [0, 0, 0.5], [0, 0, 0]]}
    code, out = run(tmp_path, "field", doc)
    assert code == 0
    res = json.loads((out / "field.json").read_text())
    assert res["interior_rows"] == [1, 2]
    assert res["values"][1] is None and res["values"][0] is not None


def test_kernel_report(tmp_path):
    doc = {"geometry": PERTURBED, "k": 1.0, "truncation": 3, "r_points": [[0, 0, 2.0], [1.5, 0, 0]], "t_points": [[0, 2.0, 0.5]]}
    code, out = run(tmp_path, "kernel", doc)
    assert code == 0
    res = json.loads((out / "kernel.json").read_text())
    assert res["hermitian_max_abs_error"] == 0.0


def test_dtn_sphere_mode(tmp_path):
    doc = {"geometry": SPHERE, "k": 1.3, "truncation": 4, "boundary": {"mode_trace": {"l": 2, "m": 1}}, "boundary_points": [[0.7, 0.4]]}
    code, out = run(tmp_path, "dtn", doc)
    assert code == 0
    v = json.loads((out / "dtn.json").read_text())["values"][0]
    ref = oracle.sphere_mode_dtn(2, 1, 1.0, 1.3, 0.7, 0.4)
    assert complex(v["re"], v["im"]) == pytest.approx(complex(ref), rel=1e-9)


def test_validate_passes_and_tolerance_override(tmp_path):
    doc = {"geometry": SPHERE, "k": 1.0, "truncation": 6}
    code, out = run(tmp_path, "validate", doc)
    assert code == 0
    checks = json.loads((out / "validate.json").read_text())["checks"]
    assert all(c["pass"] for c in checks)
    doc["tolerances"] = {"gram_moments": 0.0}
    code, out = run(tmp_path, "validate", doc)
    res = json.loads((out / "validate.json").read_text())["checks"]
    by_name = {c["name"]: c for c in res}
    failing = [c for c in res if not c["pass"]]
    assert code == 1 and failing and all(c["tolerance"] == 0.0 for c in failing)
    assert any(n.startswith("gram") for n in by_name)


def test_invalid_geometry_exit_codes(tmp_path):
    bad = {"type": "harmonic", "coeffs": [{"l": 0, "m": 0, "re": math.sqrt(4 * math.pi)}, {"l": 1, "m": 0, "re": 10.0}]}
    code, out = run(tmp_path, "solve", {"geometry": bad, "k": 1.0, "truncation": 2})
    assert code == 2
    assert json.loads((out / "error.json").read_text())["error"]["exit_code"] == 2
    code, out = run(tmp_path, "validate", {"geometry": bad, "k": 1.0, "truncation": 2})
    assert code == 1


def test_malformed_config_exit_code(tmp_path, capsys):
    code, _ = run(tmp_path, "solve", {"geometry": {"type": "harmonic", "coeffs": [{"l": 0, "m": 0, "re": 3.0}, {"l": "x"}]}})
    assert code == 2
    assert "geometry.coeffs[1]" in capsys.readouterr().err


@pytest.mark.parametrize(
    "doc, where",
    [
        ({"geometry": SPHERE, "k": -1}, "k"),
        ({"geometry": SPHERE, "k": {"start": 1, "stop": 2}}, "k.count"),
        ({"geometry": SPHERE, "k": {"start": 1, "stop": 2, "count": 3, "spacing": "cubic"}}, "k.spacing"),
        ({"geometry": SPHERE, "truncation": {"l_max": -1}}, "truncation.l_max"),
        ({"geometry": SPHERE, "truncation": {"L": [2, 3]}}, "truncation.L"),
        ({"geometry": SPHERE, "boundary": {"mode_trace": {"l": 1}}}, "boundary.mode_trace.m"),
        ({"geometry": SPHERE, "tolerances": {"nope": 1}}, "tolerances.nope"),
        ({"geometry": SPHERE, "quadrature": {"n_r": 3}}, "quadrature.n_r"),
        ({"k": 1.0}, "geometry"),
    ],
)
def test_config_errors_name_the_field(doc, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.")):
        parse_config(doc)


def test_quadrature_override(tmp_path):
    doc = {"geometry": SPHERE, "k": 1.0, "truncation": 3, "quadrature": {"n_theta": 40, "n_phi": 20}}
    code, out = run(tmp_path, "solve", doc)
    hdr = read_csv_header(out / "amplitudes.csv")
    assert code == 0 and hdr["quadrature"]["n_theta"] == 40 and hdr["quadrature"]["n_phi"] == 20


def test_grid_file_boundary(tmp_path):
    th = np.linspace(0, np.pi, 61)
    ph = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    v = np.exp(1j * np.cos(TH))
    np.savetxt(tmp_path / "g.csv", np.column_stack([TH.ravel(), PH.ravel(), v.real.ravel(), v.imag.ravel()]), delimiter=",")
    code, out = run(tmp_path, "solve", {"geometry": SPHERE, "k": 1.0, "truncation": 6, "boundary": {"grid_file": "g.csv"}})
    assert code == 0
    doc = json.loads((out / "solve.json").read_text())
    sigma = doc["sigma_T"]["coefficient_sum"]
    assert sigma == pytest.approx(oracle.sphere_plane_wave_sigma(1.0), rel=1e-4)


@pytest.mark.slow
def test_console_script_and_threads_env(tmp_path):
    cfg = tmp_path / "job.json"
    cfg.write_text(json.dumps({"geometry": SPHERE, "k": 1.0, "truncation": 2}))
    env = dict(os.environ, WAVEHARM_THREADS="1")
    res = subprocess.run(
        [sys.executable, "-m", "waveharm.cli", "solve", str(cfg), "--out-dir", str(tmp_path / "o")],
        env=env, capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    hdr = read_csv_header(tmp_path / "o" / "amplitudes.csv")
    assert hdr["threads"] == 1
    env["WAVEHARM_THREADS"] = "many"
    res = subprocess.run([sys.executable, "-m", "waveharm.cli", "solve", str(cfg)], env=env, capture_output=True, text=True, cwd=tmp_path)
    assert res.returncode == 2
