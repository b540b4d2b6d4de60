"""End-to-end tests of the command-line harness.

Everything runs in-process through ``main(argv)`` so exit codes, the
stderr error JSON, and the written artifacts can all be checked without
spawning an interpreter.
"""

import hashlib
import json
import math

import numpy as np
import pytest

from plateflow.cli import CliError, load_config, main, parse_forcing
from plateflow.fields import PlateField, physical_samples
from plateflow.grid import TorusGrid
from plateflow.io import read_field, write_field

from conftest import poly_field

GRID = TorusGrid(5, 5, 8)


def run_cli(tmp_path, cfg_text, command, extra=(), out_name="out"):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(cfg_text)
    out = tmp_path / out_name
    code = main([command, "--config", str(cfg), "--out", str(out)]
                + list(extra))
    return code, out


def manifest_of(out_dir):
    return json.loads((out_dir / "manifest.json").read_text())


def error_payload(capsys):
    err = capsys.readouterr().err.strip().splitlines()[-1]
    doc = json.loads(err)
    assert set(doc) == {"error"}
    assert set(doc["error"]) == {"code", "kind", "message"}
    return doc["error"]


# ---- forcing expressions ---------------------------------------------------------


def test_zero_expression_gives_zero_momentum_field():
    f = parse_forcing("0", GRID, "f")
    assert f.components == 3
    assert not f.coeffs.any()


def test_single_expression_is_a_vertical_force():
    f = parse_forcing("0.001*cos(t)*sin(x1)", GRID, "f")
    vals = physical_samples(f)
    tt = GRID.t_samples[:, None, None, None]
    x1 = GRID.x_samples[None, :, None, None]
    want = 0.001 * np.cos(tt) * np.sin(x1)
    assert np.max(np.abs(vals[..., 0])) == 0.0
    assert np.max(np.abs(vals[..., 1])) == 0.0
    assert np.max(np.abs(vals[..., 2] - want)) < 1e-15
    # four lattice corners (k = +-1, xi1 = +-1); the layer axis is nodal,
    # so the z profile is the constant 1 at every node
    mode_mag = np.max(np.abs(f.coeffs[..., 2]), axis=3)
    support = set(map(tuple, np.argwhere(mode_mag > 1e-12)))
    assert support == {(it, i1, 2) for it in (1, 3) for i1 in (1, 3)}
    assert np.allclose(np.abs(f.coeffs[1, 1, 2, :, 2]), 0.00025)


def test_three_part_momentum_forcing():
    f = parse_forcing("sin(x1); 0; cos(2*x2)", GRID, "f")
    vals = physical_samples(f)
    x1 = GRID.x_samples[None, :, None, None]
    x2 = GRID.x_samples[None, None, :, None]
    assert np.max(np.abs(vals[..., 0] - np.sin(x1) * np.ones_like(vals[..., 0]))) < 1e-14
    assert np.max(np.abs(vals[..., 1])) == 0.0
    assert np.max(np.abs(vals[..., 2] - np.cos(2 * x2) * np.ones_like(vals[..., 2]))) < 1e-14


def test_plate_forcing_coefficients():
    h = parse_forcing("cos(t)*cos(x1)", GRID, "h")
    assert isinstance(h, PlateField)
    for it in (1, 3):
        for i1 in (1, 3):
            assert abs(h.coeffs[it, i1, 2] - 0.25) < 1e-15
    assert abs(h.coeffs[2, 2, 2]) < 1e-15


def test_scalar_datum_with_layer_profile():
    g = parse_forcing("exp(x3)*sin(x1)", GRID, "g")
    vals = physical_samples(g)
    x1 = GRID.x_samples[None, :, None, None]
    zz = GRID.nodes[None, None, None, :]
    assert np.max(np.abs(vals - np.exp(zz) * np.sin(x1))) < 1e-12


@pytest.mark.parametrize("expr,fragment", [
    ("cos(0.5*t)", "not an integer multiple"),
    ("exp(x1)", "never periodic"),
    ("t", "only inside sin/cos"),
    ("x1**2", "only inside sin/cos"),
    ("sin(x1*x1)", "must be affine"),
    ("1/x1", "divisor must be constant"),
    ("2**-1", "nonnegative integer"),
    ("cos(t", "forcing expression error"),
    ("tan(x1)", "only sin, cos and exp"),
    ("sin(x1); 0", "one expression or three"),
])
def test_rejected_expressions(expr, fragment):
    with pytest.raises(CliError) as exc:
        parse_forcing(expr, GRID, "f")
    assert exc.value.code == 1
    assert fragment in str(exc.value)


def test_plate_kind_rejects_layer_coordinate():
    with pytest.raises(CliError, match="unknown name 'x3'"):
        parse_forcing("x3", GRID, "h")


def test_harmonic_check_uses_grid_periods():
    fast = TorusGrid(5, 5, 8, t_period=math.pi)
    parse_forcing("cos(2*t)", fast, "h")  # base frequency 2. fine
    with pytest.raises(CliError, match="not an integer multiple"):
        parse_forcing("cos(t)", fast, "h")


def test_file_forcing_round_trip(tmp_path):
    g = poly_field(GRID, seed=5, components=1, scale=0.1)
    write_field(tmp_path / "g.plf", g)
    back = parse_forcing("file:g.plf", GRID, "g", base_dir=tmp_path)
    assert np.array_equal(back.coeffs, g.coeffs)


def test_file_forcing_wrong_domain(tmp_path):
    g = poly_field(GRID, seed=5, components=1)
    write_field(tmp_path / "g.plf", g)
    with pytest.raises(CliError) as exc:
        parse_forcing("file:g.plf", GRID, "h", base_dir=tmp_path)
    assert exc.value.code == 2
    assert exc.value.kind == "incompatible"


def test_file_forcing_wrong_component_count(tmp_path):
    g = poly_field(GRID, seed=5, components=1)
    write_field(tmp_path / "g.plf", g)
    with pytest.raises(CliError, match="3 components"):
        parse_forcing("file:g.plf", GRID, "f", base_dir=tmp_path)


def test_file_forcing_missing(tmp_path):
    with pytest.raises(CliError) as exc:
        parse_forcing("file:nowhere.plf", GRID, "g", base_dir=tmp_path)
    assert exc.value.code == 1


# ---- config files ----------------------------------------------------------------


def test_config_defaults_and_hash(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("# comment only\nmu_f = 2.0\n")
    cfg, raw = load_config(path)
    assert cfg.mu_f == 2.0
    assert cfg.n_t == 5 and cfg.route == "lift"
    assert raw == path.read_text()


@pytest.mark.parametrize("text,fragment", [
    ("bogus = 1\n", "unknown key"),
    ("mu_f = 1\nmu_f = 2\n", "duplicate key"),
    ("n_t = 4\n", "odd"),
    ("n_t = abc\n", "needs an integer"),
    ("mu_f = fast\n", "needs a number"),
    ("just words\n", "expected 'key = value'"),
    ("route = sideways\n", "route must be"),
    ("n_z = 2\n", "n_z"),
    ("eps = 0\n", "eps must be positive"),
    ("threads = 0\n", "threads"),
])
def test_config_rejections(tmp_path, text, fragment):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(CliError) as exc:
        load_config(path)
    assert exc.value.code == 1
    assert fragment in str(exc.value)


def test_missing_config_file(tmp_path, capsys):
    code = main(["validate", "--config", str(tmp_path / "none.cfg")])
    assert code == 1
    err = error_payload(capsys)
    assert err["kind"] == "config"
    assert "cannot read config" in err["message"]


def test_zero_damping_reserved_for_scans(tmp_path, capsys):
    code, out = run_cli(tmp_path, "mu_s = 0\n", "solve-linear")
    assert code == 1
    assert error_payload(capsys)["kind"] == "config"
    assert not (out / "manifest.json").exists()

    code, out = run_cli(tmp_path, "mu_s = 0\nk_max = 8\nxi_max = 4\n",
                        "multiplier-scan", out_name="scan0")
    assert code == 0
    assert math.isfinite(manifest_of(out)["scan"]["sup_weighted"])


# ---- solve-linear ----------------------------------------------------------------


def test_solve_linear_zero_data(tmp_path):
    code, out = run_cli(tmp_path, "n_z = 8\n", "solve-linear")
    assert code == 0
    doc = manifest_of(out)
    assert doc["command"] == "solve-linear"
    assert doc["empirical_constants"]["x_over_y_ratio"] is None
    assert doc["norms"]["x_norm_solution"] == 0.0
    assert max(doc["residuals"].values()) == 0.0
    u = read_field(out / "u.plf")
    assert not u.coeffs.any()
    lines = (out / "eta_samples.csv").read_text().splitlines()
    assert lines[0] == "t,x1,x2,eta"
    assert len(lines) == 1 + 5 * 5 * 5


def test_solve_linear_plate_forcing(tmp_path):
    cfg = "forcing_h = 0.001*cos(t)*cos(x1)\nn_z = 12\n"
    code, out = run_cli(tmp_path, cfg, "solve-linear")
    assert code == 0
    doc = manifest_of(out)
    assert max(doc["residuals"].values()) < 1e-9
    assert doc["norms"]["y_norm_data"] > 0
    ratio = doc["empirical_constants"]["x_over_y_ratio"]
    assert 0 < ratio < 10
    raw = (tmp_path / "run.cfg").read_text()
    assert doc["config_sha256"] == hashlib.sha256(raw.encode()).hexdigest()
    eta = read_field(out / "eta.plf")
    assert isinstance(eta, PlateField) and eta.coeffs.any()


def test_solve_linear_eps_scales_data(tmp_path):
    base = "forcing_h = cos(t)*cos(x1)\nn_z = 8\n"
    _, out1 = run_cli(tmp_path, base + "eps = 1.0\n", "solve-linear",
                      out_name="o1")
    _, out2 = run_cli(tmp_path, base + "eps = 2.0\n", "solve-linear",
                      out_name="o2")
    y1 = manifest_of(out1)["norms"]["y_norm_data"]
    y2 = manifest_of(out2)["norms"]["y_norm_data"]
    assert abs(y2 - 2.0 * y1) < 1e-12 * y1


def test_solve_linear_incompatible_datum(tmp_path, capsys):
    cfg = "forcing_g = 1\nroute = direct\nn_z = 8\n"
    code, out = run_cli(tmp_path, cfg, "solve-linear")
    assert code == 2
    err = error_payload(capsys)
    assert err["kind"] == "incompatible"
    assert not (out / "manifest.json").exists()


def test_manifests_reproducible_across_threads(tmp_path):
    cfg = "forcing_h = 0.01*cos(t)*cos(x1)\nforcing_f = sin(x1)\nn_z = 10\n"
    _, out1 = run_cli(tmp_path, cfg, "solve-linear", ("--threads", "1"),
                      out_name="t1")
    _, out2 = run_cli(tmp_path, cfg, "solve-linear", ("--threads", "2"),
                      out_name="t2")
    doc1, doc2 = manifest_of(out1), manifest_of(out2)
    ex1, ex2 = doc1.pop("execution"), doc2.pop("execution")
    assert ex1["threads"] == 1 and ex2["threads"] == 2
    assert doc1 == doc2
    assert (out1 / "u.plf").read_bytes() == (out2 / "u.plf").read_bytes()
    assert (out1 / "eta_samples.csv").read_text() \
        == (out2 / "eta_samples.csv").read_text()


# ---- solve-nonlinear -------------------------------------------------------------


def test_solve_nonlinear_small_forcing(tmp_path):
    cfg = ("forcing_h = cos(t)*cos(x1)\n"
           "eps = 0.001\nn_z = 12\n")
    code, out = run_cli(tmp_path, cfg, "solve-nonlinear")
    assert code == 0
    doc = manifest_of(out)
    assert doc["converged"] is True
    assert doc["iterations"] <= 10
    assert doc["in_ball"] is True
    assert doc["ball_radius"] == pytest.approx(math.sqrt(0.001))
    assert all(r < 0.5 for r in doc["contraction_ratios"])
    assert max(doc["residuals"].values()) < 1e-9
    assert doc["smallness_gate"]["passed"] is True
    lines = (out / "picard_trace.csv").read_text().splitlines()
    assert lines[0] == "iteration,x_norm,step,ratio,plate_norm,sup_eta"
    assert len(lines) == 1 + doc["iterations"]


def test_solve_nonlinear_divergence(tmp_path, capsys):
    cfg = ("forcing_h = 40*cos(t)*cos(x1)\n"
           "eps = 1.0\nmax_iter = 8\nn_z = 8\n")
    code, out = run_cli(tmp_path, cfg, "solve-nonlinear")
    assert code == 3
    err = error_payload(capsys)
    assert err["kind"] == "divergence"
    assert not (out / "manifest.json").exists()


# ---- scan and table --------------------------------------------------------------


def test_multiplier_scan_outputs(tmp_path):
    cfg = "k_max = 50\nxi_max = 10\n"
    code, out = run_cli(tmp_path, cfg, "multiplier-scan")
    assert code == 0
    doc = manifest_of(out)
    scan = doc["scan"]
    assert math.isfinite(scan["sup_weighted"]) and scan["sup_weighted"] > 0
    assert scan["decay_exponent_k"] < -1.5
    assert scan["decay_exponent_xi"] < -1.5
    assert doc["empirical_constants"]["sup_weighted_multiplier"] \
        == scan["sup_weighted"]
    lines = (out / "multiplier_rays.csv").read_text().splitlines()
    assert lines[0] == "ray,index,abs_m,abs_weighted"
    assert len(lines) > 20
    assert all(line.startswith(("k,", "xi,")) for line in lines[1:])


def test_resonance_report_defaults(tmp_path):
    code, out = run_cli(tmp_path, "", "resonance-report")
    assert code == 0
    doc = manifest_of(out)
    assert doc["counts"]["resonant"] == 12
    assert len(doc["resonant_points"]) == 12
    assert {"k": 1, "xi": [1, 0]} in doc["resonant_points"]
    text = (out / "resonance.csv").read_text()
    row = [ln for ln in text.splitlines() if ln.startswith("1,1,0,")]
    assert len(row) == 1 and row[0].endswith(",inf,resonant")


# ---- lift-div and validate -------------------------------------------------------


def test_lift_div_run(tmp_path):
    cfg = "forcing_g = 0.01*sin(x1)\nn_z = 12\n"
    code, out = run_cli(tmp_path, cfg, "lift-div")
    assert code == 0
    doc = manifest_of(out)
    assert doc["residuals"]["divergence"] < 1e-10
    assert doc["residuals"]["faces"] < 1e-12
    for key in ("gradient_ratio_l0", "gradient_ratio_l1", "dual_ratio"):
        assert doc["empirical_constants"][key] > 0
    w = read_field(out / "w.plf")
    assert w.components == 3 and w.coeffs.any()


def test_lift_div_incompatible(tmp_path, capsys):
    code, out = run_cli(tmp_path, "forcing_g = 1\n", "lift-div")
    assert code == 2
    assert error_payload(capsys)["kind"] == "incompatible"


def test_validate_suite(tmp_path):
    code, out = run_cli(tmp_path, "", "validate")
    assert code == 0
    suite = json.loads((out / "validation.json").read_text())
    assert suite["passed"] is True
    assert len(suite["checks"]) == 9
    assert all(c["passed"] for c in suite["checks"])
    names = {c["name"] for c in suite["checks"]}
    assert {"cross_validation_paths", "cross_validation_truth",
            "refinement_drop", "fd_check",
            "embedding_supnorm_case"} <= names
    lines = (out / "validation_summary.csv").read_text().splitlines()
    assert lines[0] == "check,passed,threshold"
    assert len(lines) == 10
    assert manifest_of(out)["validation"]["passed"] is True


# ---- thread and seed plumbing ----------------------------------------------------


def test_threads_environment_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("PLATEFLOW_THREADS", "3")
    code, out = run_cli(tmp_path, "", "resonance-report")
    assert code == 0
    assert manifest_of(out)["execution"]["threads"] == 3


def test_threads_flag_beats_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PLATEFLOW_THREADS", "7")
    code, out = run_cli(tmp_path, "", "resonance-report", ("--threads", "2"))
    assert code == 0
    assert manifest_of(out)["execution"]["threads"] == 2


def test_threads_environment_junk(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("PLATEFLOW_THREADS", "many")
    code, _ = run_cli(tmp_path, "", "resonance-report")
    assert code == 1
    assert "PLATEFLOW_THREADS" in error_payload(capsys)["message"]


def test_seed_flag_recorded(tmp_path):
    code, out = run_cli(tmp_path, "", "resonance-report", ("--seed", "42"))
    assert code == 0
    assert manifest_of(out)["seed"] == 42
