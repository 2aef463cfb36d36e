"""CLI subcommands end to end, plus the artifact writers they drive."""
import json

import numpy as np
import pytest

from magchain import (
    RodShape,
    UniformField,
    design_from_table,
    experimental_ball_chain,
    shape_csv,
    shape_rows,
    shape_svg,
    solve_shape,
    workspace_summary_csv,
)
from magchain.cli import main
from magchain.outputs import CSV_HEADER, SUMMARY_HEADER, energy_json

DESIGN = experimental_ball_chain()


def read_csv(path):
    lines = path.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    return [list(map(float, ln.split(","))) for ln in lines[1:]]


# -- artifact writers ------------------------------------------------------------


def test_shape_csv_negative_zero_scrubbed():
    res = solve_shape(DESIGN, UniformField((0.04, 0.0, 0.0)), ball_count=3)
    text = shape_csv(res.config, DESIGN)
    assert "-0.000000" not in text
    assert text.count("\n") == 4          # header + 3 balls


def test_rod_rows_tip_magnet_appends_magnet_row():
    design = design_from_table("tip_magnet")
    rod = RodShape.straight(9e-3, 0.5e-3)
    rows = shape_rows(rod, design)
    assert len(rows) == rod.segment_count + 2      # nodes + magnet center
    p, m = rows[-1]
    np.testing.assert_allclose(m, [1.0, 0.0, 0.0])
    assert p[0] == pytest.approx(9.5)              # 9 mm + half of 1 mm magnet
    assert all(np.all(mm == 0.0) for _, mm in rows[:-1])


def test_rod_rows_distributed_carry_tangents():
    design = design_from_table("distributed")
    rod = RodShape.straight(10e-3, 0.5e-3)
    rows = shape_rows(rod, design)
    assert len(rows) == rod.segment_count + 1
    for _, m in rows:
        np.testing.assert_allclose(m, [1.0, 0.0, 0.0])


def test_energy_json_sums_terms():
    res = solve_shape(DESIGN, UniformField((0.04, 0.0, 0.0)), ball_count=4)
    rep = json.loads(energy_json(res))
    parts = (rep["pair_J"] + rep["applied_J"] + rep["bending_J"]
             + rep["gravity_J"] + rep["wall_J"] + rep["contact_J"])
    assert rep["total_J"] == pytest.approx(parts, rel=1e-12)
    assert rep["converged"] is True


def test_shape_svg_is_byte_stable():
    res = solve_shape(DESIGN, UniformField((0.02, 0.0, 0.0346)), ball_count=6)
    a = shape_svg([("run", res.config, DESIGN)])
    b = shape_svg([("run", res.config, DESIGN)])
    assert a == b and a.startswith("<svg") and "x [mm]" in a


# -- solve subcommand ------------------------------------------------------------


def test_solve_aligned_preset_collinear(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["solve", "--scenario", "aligned_field", "--out", str(out)]) == 0
    rows = read_csv(out / "shape.csv")
    assert len(rows) == 10
    for r in rows:
        assert r[2] == 0.0 and r[3] == 0.0         # y and z exactly zero
    xs = [r[1] for r in rows]
    assert xs == sorted(xs)
    assert (out / "energy.json").exists() and (out / "side_view.svg").exists()


def test_solve_outputs_byte_stable(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["solve", "--scenario", "aligned_field",
                     "--out", str(out)]) == 0
    for name in ("shape.csv", "energy.json", "side_view.svg"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_solve_missing_design_key_exits_nonzero(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"kind": "solve", "name": "x",
                             "field": {"type": "uniform", "mT": 40.0},
                             "ball_count": 5}))
    assert main(["solve", "--scenario", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "design" in capsys.readouterr().err


def test_solve_unknown_scenario_exits_nonzero(capsys):
    assert main(["solve", "--scenario", "nope_nothing"]) == 2
    assert "presets" in capsys.readouterr().err


def test_solve_design_flag_overrides(tmp_path):
    out = tmp_path / "o"
    assert main(["solve", "--scenario", "aligned_field", "--design",
                 "ball_chain", "--out", str(out)]) == 0
    rows = read_csv(out / "shape.csv")
    assert rows[1][1] == pytest.approx(0.9)        # 0.9 mm balls, not 3.175


def test_solve_bench_downward_family(tmp_path):
    """Swinging the actuator from 30 to 90 deg pulls the tip further down,
    with the 90 deg pose lowest of the four."""
    out = tmp_path / "bench"
    assert main(["solve", "--scenario", "bench_magnet_downward",
                 "--out", str(out)]) == 0
    tips = []
    for label in ("psi030p0", "psi060p0", "psi075p0", "psi090p0"):
        rep = json.loads((out / f"energy_{label}.json").read_text())
        assert rep["converged"]
        tips.append(rep["tip_mm"])
    zs = [t[2] for t in tips]
    assert all(z < 0 for z in zs)                  # all deflect downward
    assert zs == sorted(zs, reverse=True)          # monotone deeper with psi
    assert zs[-1] == min(zs)


def test_solve_upward_family_differs_at_equal_angle(tmp_path):
    """Flipped actuator moment reaches a different equilibrium at the same
    psi: the two experiment families are distinct branches."""
    down, up = tmp_path / "down", tmp_path / "up"
    assert main(["solve", "--scenario", "bench_magnet_downward",
                 "--out", str(down)]) == 0
    assert main(["solve", "--scenario", "bench_magnet_upward",
                 "--out", str(up)]) == 0
    for label in ("psi030p0", "psi060p0", "psi075p0", "psi090p0"):
        td = json.loads((down / f"energy_{label}.json").read_text())["tip_mm"]
        tu = json.loads((up / f"energy_{label}.json").read_text())["tip_mm"]
        assert abs(td[2] - tu[2]) > 1.0            # mm; branches well separated
        assert tu[2] > td[2]                       # upward family sits higher


# -- workspace subcommand --------------------------------------------------------


def test_workspace_coarse_grid(tmp_path, capsys):
    p = tmp_path / "ws.json"
    p.write_text(json.dumps({
        "kind": "workspace", "name": "ws", "designs": ["tip_magnet"],
        "angles_deg": {"start": 0.0, "stop": 180.0, "step": 30.0},
        "lengths_mm": [5.0, 10.0, 15.0, 20.0]}))
    out = tmp_path / "o"
    assert main(["workspace", "--scenario", str(p), "--out", str(out)]) == 0
    summary = (out / "summary.csv").read_text().strip().split("\n")
    assert summary[0] == SUMMARY_HEADER
    design, area, vol, polar, bound, within = summary[1].split(",")
    assert design == "tip_magnet" and within == "yes"
    assert 0.0 < float(area) <= float(bound) == 628.3
    scan = json.loads((out / "scan_tip_magnet.json").read_text())
    assert np.array(scan["tips_mm"]).shape == (7, 4, 3)
    assert (out / "workspace.svg").read_text().startswith("<svg")


def test_workspace_single_angle_degenerate(tmp_path, capsys):
    p = tmp_path / "ws.json"
    p.write_text(json.dumps({
        "kind": "workspace", "name": "ws", "designs": ["tip_magnet"],
        "angles_deg": [90.0], "lengths_mm": [5.0, 10.0]}))
    assert main(["workspace", "--scenario", str(p),
                 "--out", str(tmp_path / "o")]) == 0
    captured = capsys.readouterr()
    assert "degenerate" in captured.err
    row = (tmp_path / "o" / "summary.csv").read_text().strip().split("\n")[1]
    assert row.split(",")[1] == "0.00"


# -- navigate subcommand ---------------------------------------------------------


def test_navigate_preset_reaches_branch(tmp_path, capsys):
    out = tmp_path / "nav"
    assert main(["navigate", "--scenario", "navigate_turn90",
                 "--out", str(out)]) == 0
    assert "PASS" in capsys.readouterr().out
    lines = (out / "session.jsonl").read_text().strip().split("\n")
    final = json.loads(lines[-1])
    assert final["in_branch"]["branch"] and not final["in_branch"]["main"]


def test_navigate_failed_assertion_exits_one(tmp_path, capsys):
    p = tmp_path / "nav.json"
    p.write_text(json.dumps({
        "kind": "navigate", "name": "n", "scene": "turn90",
        "commands": [{"advance_mm": 3.175}], "assert_branch": "branch"}))
    assert main(["navigate", "--scenario", str(p),
                 "--out", str(tmp_path / "o")]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_navigate_empty_command_list_logs_initial_state(tmp_path):
    p = tmp_path / "nav.json"
    p.write_text(json.dumps({"kind": "navigate", "name": "n",
                             "scene": "turn90", "commands": []}))
    out = tmp_path / "o"
    assert main(["navigate", "--scenario", str(p), "--out", str(out)]) == 0
    lines = (out / "session.jsonl").read_text().strip().split("\n")
    assert len(lines) == 1
    state = json.loads(lines[0])
    assert state["step"] == 0 and state["command"] is None
    assert state["ball_count"] == 0


def test_navigate_kind_mismatch(capsys):
    assert main(["navigate", "--scenario", "aligned_field"]) == 2
    assert "kind" in capsys.readouterr().err


# -- verify subcommand -----------------------------------------------------------


def test_verify_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out


# -- summary table ---------------------------------------------------------------


def test_summary_csv_header_and_bound_column():
    text = workspace_summary_csv([])
    assert text == SUMMARY_HEADER + "\n"
