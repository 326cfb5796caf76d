"""Serialization formats and the command-line interface."""
import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ball_solution, get_seed
from midscribe.bodies import make_body
from midscribe.cli import main, parse_frame_spec, parse_marks
from midscribe.errors import MalformedSpec, StepUnderflow
from midscribe.io import (
    boundary_mesh,
    configuration_from_dict,
    configuration_to_dict,
    format_complex,
    sweep_csv_text,
    verify_report_to_dict,
)
from midscribe import parse_off, verify_configuration

REPORT_KEYS = {
    "max_tangency_residual", "max_incidence_residual", "combinatorics_ok",
    "convexity", "contact_graph_primal_ok", "contact_graph_dual_ok",
    "per_edge", "per_vertex",
}


def test_parse_marks_forms():
    assert parse_marks("0,1,i") == (0j, 1 + 0j, 1j)
    assert parse_marks("1+2i, -0.5-0.5i, 3i") == (1 + 2j, -0.5 - 0.5j, 3j)
    assert parse_marks("-i,2,-3.5") == (-1j, 2 + 0j, -3.5 + 0j)
    for bad in ("1,2", "1,2,3,4", "a,b,c", "1,2,2i+1", ""):
        with pytest.raises(MalformedSpec):
            parse_marks(bad)


@given(st.complex_numbers(allow_nan=False, allow_infinity=False,
                          max_magnitude=1e12))
@settings(max_examples=80, deadline=None)
def test_format_complex_round_trips(z):
    text = ",".join([format_complex(z)] * 3)
    back = parse_marks(text)[0]
    assert back == z


def test_parse_frame_spec():
    assert parse_frame_spec("0:0,3,5") == (0, (0, 3, 5))
    with pytest.raises(MalformedSpec):
        parse_frame_spec("0:0,3")
    with pytest.raises(MalformedSpec):
        parse_frame_spec("nope")


def test_verify_report_schema_keys():
    P, _, _ = get_seed("tetrahedron")
    cfg = ball_solution("tetrahedron")
    report = verify_configuration(cfg, make_body("ball"), P,
                                  with_packings=False)
    payload = verify_report_to_dict(report)
    assert set(payload.keys()) == REPORT_KEYS
    assert {row["edge"] for row in payload["per_edge"]} == set(range(P.n_edges))


def test_configuration_json_round_trip():
    P, _, _ = get_seed("cube")
    cfg = ball_solution("cube")
    blob = json.dumps(configuration_to_dict(cfg, P))
    cfg2, P2 = configuration_from_dict(json.loads(blob))
    assert P2.faces == P.faces
    assert np.array_equal(cfg2.normals, cfg.normals)
    assert np.array_equal(cfg2.offsets, cfg.offsets)
    assert np.array_equal(cfg2.vertices4, cfg.vertices4)
    assert np.array_equal(cfg2.tangents, cfg.tangents)
    assert cfg2.marked_edges == cfg.marked_edges


def test_configuration_from_dict_rejects_malformed():
    P, _, _ = get_seed("cube")
    cfg = ball_solution("cube")
    data = configuration_to_dict(cfg, P)
    del data["planes"]
    with pytest.raises(MalformedSpec):
        configuration_from_dict(data)


def test_sweep_csv_layout():
    rows = [(0j, 1 + 0j, 1j, "convex", 1e-12),
            (0j, 1 + 0j, -2 - 2j, "failed", float("nan"))]
    text = sweep_csv_text(rows)
    lines = text.strip().splitlines()
    assert lines[0] == "z1,z2,z3,classification,residual"
    assert len(lines) == 3
    z1, z2, z3, cls, res = lines[1].split(",")
    assert parse_marks("%s,%s,%s" % (z1, z2, z3)) == (0j, 1 + 0j, 1j)
    assert cls == "convex"
    assert float(res) == 1e-12
    assert math.isnan(float(lines[2].split(",")[4]))


def test_boundary_mesh_on_body():
    body = make_body("superellipsoid:p=4,a=1,b=1")
    verts, faces = boundary_mesh(body, n=12)
    worst = max(abs(body.value(np.asarray(v))) for v in verts)
    assert worst < 1e-9
    nv = len(verts)
    assert all(0 <= i < nv for f in faces for i in f)


def run_cli(*argv):
    return main(list(argv))


def test_cli_pack_and_determinism(tmp_path):
    out = tmp_path / "pattern.json"
    assert run_cli("pack", "--complex", "cube", "--out", str(out)) == 0
    first = json.loads(out.read_text())
    assert run_cli("pack", "--complex", "cube", "--out", str(out)) == 0
    second = json.loads(out.read_text())
    first["manifest"].pop("wall_time_s")
    second["manifest"].pop("wall_time_s")
    assert first == second
    assert "vertex_caps" in first and "face_caps" in first
    assert len(first["marks"]["edges"]) == 3


def test_cli_midscribe_verify_round_trip(tmp_path):
    off = tmp_path / "solved.off"
    report_path = tmp_path / "solved.json"
    code = run_cli("midscribe", "--complex", "cube",
                   "--body", "ellipsoid:a=1.2,b=1.0",
                   "--marks", "0.4+0.3i,1.6,-0.5+1.1i",
                   "--out", str(off), "--report", str(report_path))
    assert code == 0
    assert off.exists()
    payload = json.loads(report_path.read_text())
    assert set(REPORT_KEYS) <= set(payload["verify"].keys())
    assert payload["solve"]["converged"] is True
    assert payload["solve"]["final_residual"] < 1e-9
    faces, verts = parse_off(off.read_text())
    assert len(verts) == 8 and len(faces) == 6

    code = run_cli("verify", str(report_path),
                   "--body", "ellipsoid:a=1.2,b=1.0")
    assert code == 0
    # without --body the descriptor comes from the embedded manifest
    assert run_cli("verify", str(report_path)) == 0
    # forcing the wrong body must fail
    assert run_cli("verify", str(report_path), "--body", "ball") == 4

    # corrupt one plane offset: verification must fail with exit 4
    payload["planes"][0][3] += 1e-3
    bad_path = tmp_path / "bad.json"
    bad_path.write_text(json.dumps(payload))
    assert run_cli("verify", str(bad_path),
                   "--body", "ellipsoid:a=1.2,b=1.0") == 4


def test_cli_midscribe_rigidity_block(tmp_path):
    report_path = tmp_path / "r.json"
    code = run_cli("midscribe", "--complex", "tetrahedron",
                   "--marks", "0.2+0.1i,1.4,-0.4+1.0i",
                   "--starts", "3",
                   "--out", str(tmp_path / "t.off"),
                   "--report", str(report_path))
    assert code == 0
    payload = json.loads(report_path.read_text())
    assert payload["rigidity"]["n_converged"] == 3
    assert payload["rigidity"]["max_pairwise_distance"] < 1e-6


def test_cli_export_body(tmp_path):
    out = tmp_path / "body.off"
    assert run_cli("export-body", "--body", "ellipsoid:a=1.2,b=1.0",
                   "--grid", "10", "--out", str(out)) == 0
    faces, verts = parse_off(out.read_text())
    body = make_body("ellipsoid:a=1.2,b=1.0")
    worst = max(abs(body.value(np.asarray(v))) for v in verts)
    assert worst < 1e-9


def test_cli_input_errors(tmp_path):
    assert run_cli("midscribe", "--complex", "cube",
                   "--body", "torus:r=2") == 3
    assert run_cli("midscribe", "--complex", "cube",
                   "--marks", "1,2") == 3
    assert run_cli("midscribe", "--complex", str(tmp_path / "nope.off")) == 3
    assert run_cli("pack", "--complex", "cube", "--frame", "junk") == 3
    assert run_cli("pack", "--complex", "cube", "--frame", "0:0,1,9",
                   "--out", str(tmp_path / "p.json")) == 3


def test_cli_solver_failure_exit_code(monkeypatch, tmp_path):
    import midscribe.cli as cli_mod

    def boom(*args, **kwargs):
        raise StepUnderflow("stuck", last_good_s=0.3, report=None)

    monkeypatch.setattr(cli_mod, "continue_to_body", boom)
    code = run_cli("midscribe", "--complex", "cube",
                   "--out", str(tmp_path / "x.off"))
    assert code == 2


def test_cli_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv("MIDSCRIBE_THREADS", "1")
    out = tmp_path / "grid.csv"
    code = run_cli("sweep", "--complex", "tetrahedron",
                   "--body", "ellipsoid:a=1.2,b=1.0",
                   "--marks", "0.2+0.1i,1.4,-0.4+1.0i",
                   "--grid", "3", "--grid-box=-1,1,0.5,1.5",
                   "--out", str(out))
    assert code == 0
    text = out.read_text()
    lines = text.strip().splitlines()
    assert lines[0] == "z1,z2,z3,classification,residual"
    assert len(lines) == 1 + 9
    allowed = {"convex", "convex-marginal", "nonconvex", "nonconvex-marginal",
               "projective-degenerate", "failed"}
    for line in lines[1:]:
        z1, z2, z3, cls, res = line.split(",")
        assert cls in allowed
        assert parse_marks("%s,%s,%s" % (z1, z2, z3))[:2] == \
            (0.2 + 0.1j, 1.4 + 0j)
    # byte-identical on rerun
    code = run_cli("sweep", "--complex", "tetrahedron",
                   "--body", "ellipsoid:a=1.2,b=1.0",
                   "--marks", "0.2+0.1i,1.4,-0.4+1.0i",
                   "--grid", "3", "--grid-box=-1,1,0.5,1.5",
                   "--out", str(out))
    assert code == 0
    assert out.read_text() == text
