"""HTTP layer for the steering UI: stateless solves plus navigation sessions.

Bodies and responses reuse the scenario/session JSON schemas; there is no
separate wire format.  Sessions live in process memory only and expire after
30 idle minutes; each session takes one command at a time (a second writer
gets 409).  Scenes are restricted to the built-ins so HTTP clients cannot
point the loader at arbitrary files.
"""
from __future__ import annotations

import secrets
import threading
import time

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import PlainTextResponse

from .chain import Gravity
from .errors import ScenarioError, SingularityError
from .navigation import BUILTIN_TURNS_DEG, ChannelScene, NavigationSession, load_scene
from .outputs import energy_report, shape_csv, shape_rows
from .scenario import SolveScenario, resolve_design, scenario_from_dict
from .solver import solve_shape

SESSION_IDLE_SECONDS = 30 * 60

app = FastAPI(title="magchain", description="equilibrium solves and channel "
              "navigation for magnetic ball-chain tips")
app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                   allow_headers=["*"])


# -- stateless solve ---------------------------------------------------------


@app.post("/solve")
def post_solve(body: dict):
    raw = dict(body)
    raw.setdefault("kind", "solve")
    raw.setdefault("name", "api")
    try:
        scn = scenario_from_dict(raw, where="body")
    except ScenarioError as exc:
        raise HTTPException(400, str(exc)) from None
    if not isinstance(scn, SolveScenario):
        raise HTTPException(400, "body: kind must be 'solve'")
    design = scn.design()
    kwargs = dict(
        gravity=Gravity(up=scn.gravity_up) if scn.gravity_on else None,
        include_skin=scn.include_skin,
        base_position=np.asarray(scn.base_mm) * 1e-3,
        base_tangent=scn.base_tangent,
        clamped_base=scn.clamped_base,
        options=scn.solver, seed=scn.seed,
    )
    if scn.ball_count is not None:
        kwargs["ball_count"] = scn.ball_count
    else:
        kwargs["length"] = scn.length_mm * 1e-3
    solves = []
    prev = None
    for label, source in scn.field_sources():
        try:
            res = solve_shape(design, source, init=prev, **kwargs)
        except SingularityError as exc:
            raise HTTPException(422, str(exc)) from None
        if not res.converged and res.iterations >= scn.solver.max_iterations:
            raise HTTPException(504, f"iteration budget ({scn.solver.max_iterations}) "
                                     "exhausted before convergence")
        prev = res.config if res.converged else None
        rows = shape_rows(res.config, design)
        solves.append({
            "label": label,
            "converged": bool(res.converged),
            "iterations": int(res.iterations),
            "positions_mm": [np.round(p, 6).tolist() for p, _ in rows],
            "dipole_dirs": [np.round(m, 9).tolist() for _, m in rows],
            "tip_mm": np.round(np.asarray(res.tip) * 1e3, 6).tolist(),
            "energy": energy_report(res),
            "csv": shape_csv(res.config, design),
        })
    return {"name": scn.name, "solves": solves}


# -- navigation sessions -----------------------------------------------------


class ApiSession:
    def __init__(self, nav: NavigationSession):
        self.nav = nav
        self.lock = threading.Lock()
        self.last_activity = time.monotonic()


_sessions: dict[str, ApiSession] = {}
_registry_lock = threading.Lock()


def _expire_idle() -> None:
    now = time.monotonic()
    with _registry_lock:
        for sid in [s for s, a in _sessions.items()
                    if now - a.last_activity > SESSION_IDLE_SECONDS]:
            del _sessions[sid]


def _get_session(sid: str) -> ApiSession:
    _expire_idle()
    try:
        return _sessions[sid]
    except KeyError:
        raise HTTPException(404, f"unknown session {sid!r}") from None


def scene_payload(scene: ChannelScene) -> dict:
    return {
        "name": scene.name,
        "width_mm": scene.width * 1e3,
        "entry_mm": np.round(scene.entry * 1e3, 6).tolist(),
        "axis": np.round(scene.axis, 9).tolist(),
        "segments_mm": np.round(scene.segments * 1e3, 6).tolist(),
        "branches": dict(scene.branches),
    }


@app.get("/scenes")
def get_scenes():
    return {"scenes": [scene_payload(load_scene(name))
                       for name in sorted(BUILTIN_TURNS_DEG)]}


@app.post("/sessions", status_code=201)
def create_session(body: dict):
    _expire_idle()
    unknown = body.keys() - {"scene", "design", "field_mT", "field_angle_deg", "prime"}
    if unknown:
        raise HTTPException(400, f"unknown keys {sorted(unknown)}")
    name = body.get("scene")
    if name not in BUILTIN_TURNS_DEG:
        raise HTTPException(404, f"unknown scene {name!r}; "
                                 f"available: {', '.join(sorted(BUILTIN_TURNS_DEG))}")
    try:
        design, _ = resolve_design(body.get("design", "experimental"), "design")
    except ScenarioError as exc:
        raise HTTPException(400, str(exc)) from None
    scene = load_scene(name)
    nav = NavigationSession(scene, design,
                            field_mT=float(body.get("field_mT", 40.0)),
                            field_angle_deg=float(body.get("field_angle_deg", 0.0)))
    if body.get("prime", True):
        # one ball waiting at the entry gives the UI something to steer
        nav.step({"advance_mm": design.ball_diameter * 1e3})
    sid = secrets.token_hex(8)
    with _registry_lock:
        _sessions[sid] = ApiSession(nav)
    return {"id": sid, "scene": scene_payload(scene),
            "ball_diameter_mm": design.ball_diameter * 1e3,
            "state": nav.log[-1]}


@app.get("/sessions/{sid}")
def get_session(sid: str):
    s = _get_session(sid)
    s.last_activity = time.monotonic()
    return {"id": sid, "scene": scene_payload(s.nav.scene),
            "ball_diameter_mm": s.nav.design.ball_diameter * 1e3,
            "state": s.nav.log[-1], "step_count": len(s.nav.log)}


@app.get("/sessions/{sid}/log", response_class=PlainTextResponse)
def get_session_log(sid: str):
    s = _get_session(sid)
    s.last_activity = time.monotonic()
    return s.nav.log_lines()


@app.post("/sessions/{sid}/step")
def step_session(sid: str, body: dict):
    s = _get_session(sid)
    if not s.lock.acquire(blocking=False):
        raise HTTPException(409, "a step is already in flight for this session")
    try:
        s.last_activity = time.monotonic()
        try:
            state = s.nav.step(body)
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from None
        return {"state": state}
    finally:
        s.lock.release()


@app.delete("/sessions/{sid}", status_code=204)
def delete_session(sid: str):
    _get_session(sid)
    with _registry_lock:
        _sessions.pop(sid, None)
