"""Quasi-static navigation of a ball chain through planar bifurcating channels.

A scene is a union of capsules: centerline segments in the x-z plane swept by
the channel width.  Walls act on the solver as a soft unilateral penalty on
each ball center; with channel width w and ball diameter d, a center may roam
a free radius (w - d)/2 around the nearest centerline before the penalty
engages, so penetration depth is

    delta_i = max(0, dist(p_i, centerline) - (w - d)/2).

Insertion grows the chain: with inserted length l the chain carries
floor(l / d) balls, the proximal one held by a rigid clamp at the entry point
(the pusher that feeds the physical chain is not modeled as an elastic body).
Feeding one ball diameter therefore pops one ball into play; the material
already in the channel keeps its shape and the new length extends past the old
tip, which is exactly how the warm start seeds each re-solve.  Every command
appends one JSON-serializable state to the session log.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .chain import ChainConfig, DesignSpec, experimental_ball_chain
from .errors import SimulationError
from .magnetics import ExternalMagnet, UniformField
from .solver import SolveOptions, solve_shape

BUILTIN_TURNS_DEG = {
    "turn90": 90.0,
    "turn120": 120.0,
    "turn135": 135.0,
    "turn150": 150.0,
    "turn165": 165.0,
}
DEFAULT_WIDTH = 5e-3
# wall stiffness, quoted per mm of ball diameter so penalty forces track the
# magnetic loads when the chain is scaled
WALL_STIFFNESS_PER_MM = 1.0e3
# sessions run stiffer walls than the bare penalty default: at 40 mT the
# contact force where the chain folds into a branch is ~0.5 N, and 2.5x keeps
# the resulting penetration under 5% of the ball radius without making the
# energy landscape too stiff to minimize
SESSION_STIFFNESS_FACTOR = 2.5


@dataclass(frozen=True)
class ChannelScene:
    """Planar channel network: capsule corridors plus named branch targets."""

    name: str
    width: float                      # m
    entry: np.ndarray                 # (3,) entry point on the centerline
    axis: np.ndarray                  # (3,) unit insertion direction
    segments: np.ndarray              # (S, 2, 3) centerline segments
    branches: dict                    # branch name -> segment index

    def __post_init__(self):
        object.__setattr__(self, "entry", np.asarray(self.entry, dtype=float).reshape(3))
        ax = np.asarray(self.axis, dtype=float).reshape(3)
        object.__setattr__(self, "axis", ax / np.linalg.norm(ax))
        segs = np.asarray(self.segments, dtype=float)
        if segs.ndim != 3 or segs.shape[1:] != (2, 3) or len(segs) == 0:
            raise ValueError("segments must have shape (S, 2, 3) with S >= 1")
        object.__setattr__(self, "segments", segs)
        if self.width <= 0.0:
            raise ValueError("channel width must be positive")
        for name, idx in self.branches.items():
            if not 0 <= int(idx) < len(segs):
                raise ValueError(f"branch {name!r} refers to missing segment {idx}")
        if not _connected(segs, self.width):
            raise ValueError("channel segments do not form a connected corridor")

    def centerline_distances(self, points: np.ndarray):
        """Distance from each point to the nearest centerline segment.

        Returns (dist (n,), away (n, 3) unit vectors from the nearest segment
        toward each point; zero rows for points on a centerline).
        """
        p = np.atleast_2d(points)[:, None, :]               # (n, 1, 3)
        a = self.segments[None, :, 0, :]                     # (1, S, 3)
        ab = self.segments[None, :, 1, :] - a
        denom = np.maximum(np.einsum("nsk,nsk->ns", ab, ab), 1e-300)
        t = np.clip(np.einsum("nsk,nsk->ns", p - a, ab) / denom, 0.0, 1.0)
        diff = p - (a + t[..., None] * ab)                   # (n, S, 3)
        rho = np.linalg.norm(diff, axis=2)
        best = np.argmin(rho, axis=1)
        rows = np.arange(len(rho))
        d_best = rho[rows, best]
        away = np.zeros((len(rho), 3))
        ok = d_best > 1e-12
        away[ok] = diff[rows[ok], best[ok]] / d_best[ok, None]
        return d_best, away

    def contains(self, point, margin: float = 0.0) -> bool:
        d, _ = self.centerline_distances(np.asarray(point, dtype=float).reshape(1, 3))
        return bool(d[0] <= self.width / 2.0 - margin)

    def in_branch(self, name: str, point) -> bool:
        """Is the point inside the distal half of the named branch capsule?"""
        if name not in self.branches:
            raise KeyError(f"unknown branch {name!r}")
        a, b = self.segments[self.branches[name]]
        mid = 0.5 * (a + b)
        p = np.asarray(point, dtype=float).reshape(3)
        return _point_segment_distance(p, mid, b) <= self.width / 2.0


def _point_segment_distance(p, a, b) -> float:
    ab = b - a
    t = float(np.clip(np.dot(p - a, ab) / max(np.dot(ab, ab), 1e-300), 0.0, 1.0))
    return float(np.linalg.norm(p - (a + t * ab)))


def _connected(segments: np.ndarray, width: float) -> bool:
    """Do the capsules form one connected free region?"""
    n = len(segments)
    seen = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for j in range(n):
            if j in seen:
                continue
            if _segments_gap(segments[i], segments[j]) < width:
                seen.add(j)
                frontier.append(j)
    return len(seen) == n


def _segments_gap(s1, s2) -> float:
    # sampled min distance is plenty for scene validation
    t = np.linspace(0.0, 1.0, 17)
    pts1 = s1[0] + t[:, None] * (s1[1] - s1[0])
    return min(_point_segment_distance(p, s2[0], s2[1]) for p in pts1)


def bifurcation_scene(name: str, turn_deg: float, *, width: float = DEFAULT_WIDTH,
                      entry_length: float = 25e-3, main_length: float = 15e-3,
                      branch_length: float = 20e-3) -> ChannelScene:
    """Straight approach with one junction; the branch leaves at turn_deg.

    The entry corridor is long enough that the fed chain is fully axis-aligned
    well before the junction, which sits at the origin.
    """
    junction = np.zeros(3)
    entry = np.array([-entry_length, 0.0, 0.0])
    t = math.radians(turn_deg)
    branch_end = branch_length * np.array([math.cos(t), 0.0, math.sin(t)])
    segments = np.array([
        [entry, junction],
        [junction, [main_length, 0.0, 0.0]],
        [junction, branch_end],
    ])
    return ChannelScene(name=name, width=width, entry=entry, axis=(1.0, 0.0, 0.0),
                        segments=segments, branches={"main": 1, "branch": 2})


def load_scene(name_or_path: str) -> ChannelScene:
    """A built-in scene by name, or a scene parsed from a JSON file."""
    if name_or_path in BUILTIN_TURNS_DEG:
        return bifurcation_scene(name_or_path, BUILTIN_TURNS_DEG[name_or_path])
    try:
        with open(name_or_path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ValueError(
            f"unknown scene {name_or_path!r}: not a built-in "
            f"({', '.join(sorted(BUILTIN_TURNS_DEG))}) and no such file") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"scene file {name_or_path}: invalid JSON ({exc})") from None
    return scene_from_dict(raw, where=name_or_path)


def scene_from_dict(raw: dict, where: str = "scene") -> ChannelScene:
    """Scene from a JSON dict; lengths in the file carry mm suffixes."""
    required = {"name", "width_mm", "entry_mm", "axis", "segments_mm", "branches"}
    missing = required - raw.keys()
    unknown = raw.keys() - required
    if missing:
        raise ValueError(f"{where}: missing keys {sorted(missing)}")
    if unknown:
        raise ValueError(f"{where}: unknown keys {sorted(unknown)}")
    segs = np.asarray(raw["segments_mm"], dtype=float)
    if segs.ndim != 3 or segs.shape[1] != 2 or segs.shape[2] not in (2, 3):
        raise ValueError(f"{where}: segments_mm must be a list of [[x,z],[x,z]] pairs")
    if segs.shape[2] == 2:                      # planar file: lift into x-z
        segs = np.stack([segs[..., 0], np.zeros(segs.shape[:2]), segs[..., 1]], axis=-1)
    entry = np.asarray(raw["entry_mm"], dtype=float)
    if entry.shape == (2,):
        entry = np.array([entry[0], 0.0, entry[1]])
    return ChannelScene(
        name=str(raw["name"]), width=float(raw["width_mm"]) * 1e-3,
        entry=entry * 1e-3, axis=raw["axis"], segments=segs * 1e-3,
        branches={str(k): int(v) for k, v in raw["branches"].items()})


class WallPenalty:
    """Soft unilateral wall constraint for ball centers inside a scene."""

    def __init__(self, scene: ChannelScene, ball_diameter: float,
                 stiffness: float | None = None):
        if scene.width <= ball_diameter:
            raise ValueError(
                f"channel width {scene.width * 1e3:g} mm does not admit "
                f"{ball_diameter * 1e3:g} mm balls")
        self.scene = scene
        self.free_radius = 0.5 * (scene.width - ball_diameter)
        self.stiffness = (WALL_STIFFNESS_PER_MM * (ball_diameter / 1e-3)
                          if stiffness is None else stiffness)

    def penetrations(self, positions: np.ndarray):
        dist, away = self.scene.centerline_distances(positions)
        return np.maximum(0.0, dist - self.free_radius), away

    def penalty_and_grads(self, positions: np.ndarray):
        delta, away = self.penetrations(positions)
        U = 0.5 * self.stiffness * float(np.sum(delta * delta))
        grad = self.stiffness * delta[:, None] * away
        return U, grad

    def max_penetration(self, positions: np.ndarray) -> float:
        return float(self.penetrations(positions)[0].max(initial=0.0))


class NavigationSession:
    """Stateful insertion of one chain into one scene under a steerable field.

    Commands are dicts with keys from one group:
      {"advance_mm": x} | {"retract_mm": x}
      {"field_mT": b} and/or {"field_angle_deg": a}     (uniform field)
      {"magnet": {"position_mm": [x,y,z], "moment_Am2": [mx,my,mz]}}
    Every step re-solves the equilibrium and appends one state to .log; the
    log opens with state 0, the empty session before any command.
    """

    def __init__(self, scene: ChannelScene, design: DesignSpec | None = None, *,
                 field_mT: float = 40.0, field_angle_deg: float = 0.0,
                 options: SolveOptions | None = None):
        self.scene = scene
        self.design = design or experimental_ball_chain()
        d = self.design.ball_diameter
        self.wall = WallPenalty(
            scene, d,
            stiffness=SESSION_STIFFNESS_FACTOR * WALL_STIFFNESS_PER_MM * (d / 1e-3))
        # folded shapes pressed against walls take far more iterations than
        # free-space solves
        self.options = options or SolveOptions(max_iterations=8000)
        self.field_mT = float(field_mT)
        self.field_angle_deg = float(field_angle_deg)
        self.magnet: ExternalMagnet | None = None
        self.inserted_length = 0.0
        self.result = None
        self.log: list[dict] = []
        self._step = 0
        # state 0 records the scene before any command so a log replays from
        # a known start
        self.log.append(self._solve_state(None))
        self._step = 1

    @property
    def ball_count(self) -> int:
        """Balls in play: one per full diameter of inserted length."""
        return int(math.floor(self.inserted_length / self.design.ball_diameter
                              + 1e-9))

    # -- field state ----------------------------------------------------------

    def current_field(self):
        if self.magnet is not None:
            return self.magnet
        a = math.radians(self.field_angle_deg)
        b = self.field_mT * 1e-3
        return UniformField((b * math.cos(a), 0.0, b * math.sin(a)))

    # -- stepping -------------------------------------------------------------

    _COMMAND_KEYS = {"advance_mm", "retract_mm", "field_mT", "field_angle_deg", "magnet"}

    def step(self, command: dict) -> dict:
        unknown = command.keys() - self._COMMAND_KEYS
        if unknown:
            raise ValueError(f"unknown command keys {sorted(unknown)}")
        if not command:
            raise ValueError("empty command")
        if "advance_mm" in command and "retract_mm" in command:
            raise ValueError("advance and retract in one command")
        moves = {"advance_mm", "retract_mm"} & command.keys()
        if moves and len(command) > 1:
            raise ValueError("feed commands cannot be combined with field changes")
        if "magnet" in command and len(command) > 1:
            raise ValueError("magnet pose replaces the field; set it alone")

        d_mm = self.design.ball_diameter * 1e3
        if "advance_mm" in command:
            dl = float(command["advance_mm"])
            if dl <= 0.0:
                raise ValueError("advance_mm must be positive")
            if dl > d_mm * (1 + 1e-9):
                raise ValueError(
                    f"advance_mm at most one ball diameter ({d_mm:g} mm) per "
                    "step; larger moves are not quasi-static")
            self.inserted_length += dl * 1e-3
        elif "retract_mm" in command:
            dl = float(command["retract_mm"])
            if dl <= 0.0:
                raise ValueError("retract_mm must be positive")
            if dl > d_mm * (1 + 1e-9):
                raise ValueError(
                    f"retract_mm at most one ball diameter ({d_mm:g} mm) per "
                    "step; larger moves are not quasi-static")
            self.inserted_length = max(0.0, self.inserted_length - dl * 1e-3)
        elif "magnet" in command:
            pose = command["magnet"]
            self.magnet = ExternalMagnet(
                position=np.asarray(pose["position_mm"], dtype=float) * 1e-3,
                moment=np.asarray(pose["moment_Am2"], dtype=float))
        else:
            if "field_mT" in command:
                self.field_mT = float(command["field_mT"])
            if "field_angle_deg" in command:
                self.field_angle_deg = float(command["field_angle_deg"])
            self.magnet = None

        state = self._solve_state(command)
        self.log.append(state)
        self._step += 1
        return state

    def run(self, commands) -> list[dict]:
        return [self.step(dict(c)) for c in commands]

    # -- solving --------------------------------------------------------------

    def _warm_start(self) -> ChainConfig | None:
        """Previous equilibrium, grown or trimmed at the tip to the new count.

        Material already in the channel keeps its shape; feeding extends the
        chain past the old tip along the old tip heading, so a bend seated at
        the junction stays seated instead of the whole shape translating.
        """
        prev = self.result.config if self.result is not None else None
        if prev is None or prev.ball_count == 0:
            return None
        n = self.ball_count
        d = self.design.ball_diameter
        grow = n - prev.ball_count
        if grow <= 0:
            links = prev.link_dirs[:max(0, n - 1)]
            dips = prev.dipole_dirs[:n]
        else:
            heading = (prev.link_dirs[-1] if prev.ball_count > 1
                       else np.asarray(self.scene.axis))
            links = np.vstack([prev.link_dirs, np.tile(heading, (grow, 1))])
            dips = np.vstack([prev.dipole_dirs,
                              np.tile(prev.dipole_dirs[-1], (grow, 1))])
        return ChainConfig(ball_count=n, ball_diameter=d, link_dirs=links,
                           dipole_dirs=dips, base_position=self.scene.entry)

    def _solve_state(self, command: dict) -> dict:
        d = self.design.ball_diameter
        n = self.ball_count
        state = {
            "step": self._step,
            "command": command,
            "inserted_mm": round(self.inserted_length * 1e3, 9),
            "ball_count": n,
            "field": self._field_state(),
        }
        if n == 0:
            self.result = None
            state.update(converged=True, jammed=False, collision=False,
                         max_penetration_mm=0.0, energy_J=0.0, positions_mm=[],
                         dipole_dirs=[], tip_mm=None,
                         in_branch={name: False for name in self.scene.branches})
            return state
        kwargs = dict(ball_count=n, base_position=self.scene.entry,
                      base_tangent=self.scene.axis, clamped_base=True,
                      wall=self.wall, include_skin=False, options=self.options)
        reseeded = False
        try:
            res = solve_shape(self.design, self.current_field(),
                              init=self._warm_start(), **kwargs)
        except SimulationError:
            # extending past a tightly folded tip can land the new ball on the
            # chain; a straight seed is always geometrically valid here
            res = solve_shape(self.design, self.current_field(), init=None, **kwargs)
            reseeded = True
        self.result = res
        pos = res.config.positions()
        pen = self.wall.max_penetration(pos)
        state.update(
            converged=bool(res.converged),
            jammed=not res.converged,
            collision=bool(pen > 0.25 * d),       # half the ball radius
            max_penetration_mm=pen * 1e3,
            energy_J=res.energy.total,
            positions_mm=np.round(pos * 1e3, 6).tolist(),
            dipole_dirs=np.round(res.config.dipole_dirs, 9).tolist(),
            tip_mm=np.round(res.tip * 1e3, 6).tolist(),
            in_branch={name: self.scene.in_branch(name, res.tip)
                       for name in self.scene.branches},
        )
        messages = list(res.messages)
        if reseeded:
            messages.insert(0, "warm start self-intersected; reseeded from straight")
        if messages:
            state["messages"] = messages
        return state

    def _field_state(self) -> dict:
        if self.magnet is not None:
            return {"magnet": {
                "position_mm": np.round(self.magnet.position * 1e3, 6).tolist(),
                "moment_Am2": np.round(self.magnet.moment, 9).tolist()}}
        return {"mT": self.field_mT, "angle_deg": self.field_angle_deg}

    # -- logging ----------------------------------------------------------------

    def log_lines(self) -> str:
        """Session log as JSON lines, one state per step."""
        return "".join(json.dumps(s, separators=(",", ":")) + "\n" for s in self.log)

    def write_log(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.log_lines())


def builtin_script(scene_name: str) -> list[dict]:
    """Scripted field/feed commands that steer into the turned branch.

    Mirrors manual operation: feed until the tip is just short of the
    junction, rotate the field to the branch heading in 15 degree increments
    so the lead balls pre-bend, then keep feeding until the tip seats deep in
    the branch.  Sharper turns steer one ball earlier: the hairpin fold needs
    backspace.  Feeding stops before the branch dead end; pushing further
    only crushes the chain against it.
    """
    if scene_name not in BUILTIN_TURNS_DEG:
        raise ValueError(f"no built-in script for {scene_name!r}")
    turn = BUILTIN_TURNS_DEG[scene_name]
    d_mm = experimental_ball_chain().ball_diameter * 1e3
    approach = 7 if turn >= 150.0 else 8
    total = 13
    cmds: list[dict] = [{"field_mT": 40.0, "field_angle_deg": 0.0}]
    cmds += [{"advance_mm": d_mm} for _ in range(approach)]
    ang = 15.0
    while ang < turn - 1e-9:
        cmds.append({"field_angle_deg": ang})
        ang += 15.0
    cmds.append({"field_angle_deg": turn})
    cmds += [{"advance_mm": d_mm} for _ in range(total - approach)]
    return cmds


def run_script(scene: ChannelScene | str, commands=None,
               design: DesignSpec | None = None,
               options: SolveOptions | None = None) -> NavigationSession:
    """Headless scripted run; returns the finished session."""
    if isinstance(scene, str):
        name = scene
        scene = load_scene(scene)
    else:
        name = scene.name
    if commands is None:
        commands = builtin_script(name)
    session = NavigationSession(scene, design=design, options=options)
    session.run(commands)
    return session
