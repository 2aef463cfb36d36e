"""Command line front end.

    magchain solve --scenario bench_magnet_downward --out runs/bench
    magchain workspace --scenario workspace_three_designs --parallel 8
    magchain navigate --scenario navigate_turn90
    magchain serve --port 8700
    magchain verify

Scenarios are JSON files (or packaged preset names); all file units are
mm / mT / deg.  Exit status: 0 ok, 1 failed check or failed branch
assertion, 2 invalid input.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .chain import Gravity, experimental_ball_chain, total_energy
from .errors import ScenarioError, SimulationError
from .magnetics import MU0, UniformField
from .navigation import NavigationSession, WallPenalty, builtin_script, load_scene
from .outputs import (
    energy_json,
    scan_json,
    shape_csv,
    shape_svg,
    workspace_summary_csv,
)
from .scenario import (
    NavigateScenario,
    SolveScenario,
    WorkspaceScenario,
    list_presets,
    load_scenario,
    named_design,
)
from .solver import SolveOptions, solve_shape, verify_gradient
from .workspace import scan, svg_overlay


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def run_solve(scn: SolveScenario, out: Path, *, seed: int | None = None,
              no_skin: bool = False) -> int:
    design = scn.design()
    gravity = Gravity(up=scn.gravity_up) if scn.gravity_on else None
    kwargs = dict(
        gravity=gravity,
        include_skin=scn.include_skin and not no_skin,
        base_position=np.asarray(scn.base_mm) * 1e-3,
        base_tangent=scn.base_tangent,
        clamped_base=scn.clamped_base,
        options=scn.solver,
        seed=scn.seed if seed is None else seed,
    )
    if scn.ball_count is not None:
        kwargs["ball_count"] = scn.ball_count
    else:
        kwargs["length"] = scn.length_mm * 1e-3
    solves = []
    prev = None
    status = 0
    for label, source in scn.field_sources():
        res = solve_shape(design, source, init=prev, **kwargs)
        prev = res.config if res.converged else None
        suffix = f"_{label}" if label else ""
        _write(out / f"shape{suffix}.csv", shape_csv(res.config, design))
        _write(out / f"energy{suffix}.json", energy_json(res))
        solves.append((label, res.config, design))
        tip = ", ".join(f"{v * 1e3:.3f}" for v in res.tip)
        print(f"{label or scn.name}: converged={res.converged} "
              f"iterations={res.iterations} tip_mm=({tip})")
        if not res.converged:
            status = 1
            print(f"warning: {label or scn.name} did not converge", file=sys.stderr)
    if scn.svg:
        _write(out / "side_view.svg", shape_svg(solves, title=scn.name))
    return status


def run_workspace(scn: WorkspaceScenario, out: Path, *, seed: int | None = None,
                  no_skin: bool = False, parallel: int | None = None) -> int:
    if len(scn.angles_deg) == 1:
        print("warning: single-angle grid sweeps no area; the planar area "
              "will be degenerate (0)", file=sys.stderr)
    scans = []
    for name in scn.designs:
        s = scan(named_design(name),
                 field_magnitude=scn.field_mT * 1e-3,
                 angles_deg=np.asarray(scn.angles_deg),
                 lengths_mm=np.asarray(scn.lengths_mm),
                 include_skin=scn.include_skin and not no_skin,
                 parallel=parallel if parallel is not None else scn.parallel)
        scans.append(s)
        _write(out / f"scan_{name}.json", scan_json(s))
        print(f"{name}: area {s.planar_area_mm2():.2f} mm2, "
              f"volume {s.revolved_volume_mm3():.0f} mm3, "
              f"max polar {s.max_tip_polar_angle_deg():.2f} deg")
    _write(out / "workspace.svg", svg_overlay(scans, title=scn.name))
    _write(out / "summary.csv", workspace_summary_csv(scans))
    return 0


def run_navigate(scn: NavigateScenario, out: Path) -> int:
    scene = load_scene(scn.scene)
    commands = builtin_script(scene.name) if scn.use_builtin else list(scn.commands)
    session = NavigationSession(scene, scn.design())
    session.run(commands)
    _write(out / "session.jsonl", session.log_lines())
    final = session.log[-1]
    jams = sum(1 for s in session.log if s.get("jammed"))
    if jams:
        print(f"warning: {jams} jammed states in the log", file=sys.stderr)
    print(f"{scene.name}: {len(session.log)} states, ball_count "
          f"{final['ball_count']}, tip_mm {final['tip_mm']}, "
          f"in_branch {final['in_branch']}")
    if scn.assert_branch is not None:
        ok = bool(final["in_branch"].get(scn.assert_branch, False))
        print(f"{'PASS' if ok else 'FAIL'} tip in branch {scn.assert_branch!r}")
        return 0 if ok else 1
    return 0


def run_serve(host: str, port: int) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def _check(name: str, fn) -> bool:
    try:
        detail = fn()
        print(f"PASS {name}: {detail}")
        return True
    except Exception as exc:
        print(f"FAIL {name}: {exc}")
        return False


def run_verify() -> int:
    """Fast independent cross-checks of the energy model and solver."""
    design = experimental_ball_chain()
    d, m = design.ball_diameter, design.ball_moment

    def coaxial_pair():
        from .chain import ChainConfig
        cfg = ChainConfig.straight(2, d)
        got = total_energy(cfg, design, None, self_contact=False).pair
        want = -2.0 * (MU0 / (4 * np.pi)) * m * m / d**3
        rel = abs(got - want) / abs(want)
        if rel > 1e-12:
            raise AssertionError(f"closed form mismatch {rel:.2e}")
        return f"aligned pair energy matches closed form (rel {rel:.1e})"

    def gradients():
        worst = 0.0
        field = UniformField((0.02, 0.0, 0.0346410161513775))  # 40 mT at 60 deg
        for kwargs in (
            dict(ball_count=3), dict(ball_count=5), dict(ball_count=10),
            dict(ball_count=6, gravity=Gravity(), include_skin=False),
        ):
            worst = max(worst, verify_gradient(design, field, **kwargs))
        for name, kw in (("ball_chain", dict(ball_count=5)),
                         ("tip_magnet", dict(length=10e-3)),
                         ("distributed", dict(length=12e-3))):
            worst = max(worst, verify_gradient(named_design(name), field, **kw))
        if worst > 1e-6:
            raise AssertionError(f"analytic vs finite difference mismatch {worst:.2e}")
        return f"analytic gradients match finite differences (worst {worst:.1e})"

    def straight_fixed_point():
        res = solve_shape(design, UniformField((0.04, 0.0, 0.0)), ball_count=10)
        off = float(np.abs(res.config.positions()[:, 1:]).max())
        if not res.converged or off > 1e-9:
            raise AssertionError(f"converged={res.converged}, off-axis {off:.2e} m")
        return f"aligned field keeps the chain straight (off-axis {off:.1e} m)"

    def wall_gradient():
        wall = WallPenalty(load_scene("turn90"), d)
        pts = np.array([[-10e-3, 0.0, 2.1e-3], [1e-3, 0.5e-3, 2.3e-3],
                        [16e-3, 0.0, 1.0e-3]])
        _, grad = wall.penalty_and_grads(pts)
        h = 1e-8
        worst = 0.0
        for i in range(len(pts)):
            for j in range(3):
                p = pts.copy(); p[i, j] += h
                up = wall.penalty_and_grads(p)[0]
                p[i, j] -= 2 * h
                um = wall.penalty_and_grads(p)[0]
                fd = (up - um) / (2 * h)
                worst = max(worst, abs(fd - grad[i, j]) / max(abs(fd), 1e-9))
        if worst > 1e-5:
            raise AssertionError(f"wall gradient mismatch {worst:.2e}")
        return f"wall penalty gradient matches finite differences (worst {worst:.1e})"

    def determinism():
        field = UniformField((0.0, 0.0, 0.04))
        opts = SolveOptions(restarts=2)
        runs = [solve_shape(design, field, ball_count=8, options=opts, seed=11)
                for _ in range(2)]
        a, b = (shape_csv(r.config, design) for r in runs)
        if a != b:
            raise AssertionError("repeated solve produced different bytes")
        return "repeated seeded solves are byte-identical"

    ok = True
    for name, fn in (("pair-energy", coaxial_pair),
                     ("gradients", gradients),
                     ("straight-chain", straight_fixed_point),
                     ("wall-gradient", wall_gradient),
                     ("determinism", determinism)):
        ok = _check(name, fn) and ok
    return 0 if ok else 1


def _apply_design_flag(scn, flag: str | None):
    if flag is None:
        return scn
    named_design(flag)                       # validate before replacing
    if isinstance(scn, WorkspaceScenario):
        return replace(scn, designs=(flag,))
    return replace(scn, design_spec=flag)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magchain",
        description="Equilibrium shapes and channel navigation for magnetic "
                    "ball-chain robot tips.")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_flags(p, kinds: str):
        p.add_argument("--scenario", required=True,
                       help=f"JSON scenario file or preset name ({kinds}); "
                            f"presets: {', '.join(list_presets())}")
        p.add_argument("--out", help="output directory (default: scenario name)")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        p.add_argument("--design", help="override the scenario design by name")

    p = sub.add_parser("solve", help="single equilibrium or field sweep")
    scenario_flags(p, "kind=solve")
    p.add_argument("--no-skin", action="store_true", help="drop elastic bending")

    p = sub.add_parser("workspace", help="tip workspace scan per design")
    scenario_flags(p, "kind=workspace")
    p.add_argument("--no-skin", action="store_true", help="drop elastic bending")
    p.add_argument("--parallel", type=int, metavar="K",
                   help="worker processes for independent lengths")

    p = sub.add_parser("navigate", help="headless scripted channel run")
    scenario_flags(p, "kind=navigate")

    p = sub.add_parser("serve", help="HTTP API for the steering UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)

    sub.add_parser("verify", help="fast independent model cross-checks")
    return parser


_EXPECTED_KIND = {"solve": SolveScenario, "workspace": WorkspaceScenario,
                  "navigate": NavigateScenario}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return run_serve(args.host, args.port)
        if args.command == "verify":
            return run_verify()
        scn = load_scenario(args.scenario)
        want = _EXPECTED_KIND[args.command]
        if not isinstance(scn, want):
            raise ScenarioError(
                f"{args.scenario}: scenario kind is "
                f"{scn.to_dict()['kind']!r}, but this is the {args.command} command")
        scn = _apply_design_flag(scn, args.design)
        out = Path(args.out) if args.out else Path(scn.name)
        if args.command == "solve":
            return run_solve(scn, out, seed=args.seed, no_skin=args.no_skin)
        if args.command == "workspace":
            return run_workspace(scn, out, seed=args.seed, no_skin=args.no_skin,
                                 parallel=args.parallel)
        return run_navigate(scn, out)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        where = getattr(exc, "filename", None)
        print(f"error: {where or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
