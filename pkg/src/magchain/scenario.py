"""Scenario files: strict JSON run configs with explicit units (mm, mT, deg).

File keys carry unit suffixes and all conversion to SI happens here, at the
boundary; the math core never sees a millimetre.  Unknown keys are rejected
so that typos fail loudly instead of silently running defaults.  Bare names
(no path separator, no extension) resolve against the packaged presets.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .chain import (
    DesignSpec,
    cylinder_moment,
    design_from_table,
    experimental_ball_chain,
    sphere_moment,
)
from .errors import ScenarioError
from .magnetics import ExternalMagnet, UniformField
from .solver import SolveOptions

PRESET_DIR = Path(__file__).parent / "presets"

DESIGN_NAMES = ("ball_chain", "tip_magnet", "distributed", "experimental")

# bench actuator: N52 cylinder, 76.2 mm diameter x 38.1 mm long
ACTUATOR_DIAMETER = 76.2e-3
ACTUATOR_LENGTH = 38.1e-3
ACTUATOR_REMANENCE = 1.48


def named_design(name: str) -> DesignSpec:
    if name == "experimental":
        return experimental_ball_chain()
    if name in DESIGN_NAMES:
        return design_from_table(name)
    raise ScenarioError(
        f"unknown design {name!r}; expected one of {', '.join(DESIGN_NAMES)}")


# overrides a scenario may apply on top of a named design; each maps a
# unit-suffixed file key to the DesignSpec field and its SI factor
_OVERRIDE_FIELDS = {
    "ball_diameter_mm": ("ball_diameter", 1e-3),
    "remanence_T": ("remanence", 1.0),
    "ball_mass_mg": ("ball_mass", 1e-6),
    "pitch_mm": ("pitch", 1e-3),
}


def resolve_design(spec, where: str = "design"):
    """(DesignSpec, canonical file form) from a name or {base, overrides}."""
    if isinstance(spec, str):
        return named_design(spec), spec
    if not isinstance(spec, dict):
        raise ScenarioError(f"{where}: expected a design name or object")
    _check_keys(spec, {"base"}, set(_OVERRIDE_FIELDS), where)
    design = named_design(str(spec["base"]))
    fields = {}
    for key, (attr, factor) in _OVERRIDE_FIELDS.items():
        if key in spec:
            fields[attr] = float(spec[key]) * factor
    if {"ball_diameter", "remanence"} & fields.keys():
        d = fields.get("ball_diameter", design.ball_diameter)
        br = fields.get("remanence", design.remanence)
        if d is None or br is None:
            raise ScenarioError(f"{where}: ball overrides on a rod design")
        fields["ball_moment"] = sphere_moment(d, br)
    canonical = {"base": str(spec["base"])}
    canonical.update({k: float(spec[k]) for k in _OVERRIDE_FIELDS if k in spec})
    return design.with_overrides(**fields), canonical


def actuator_moment() -> float:
    """Dipole strength of the bench actuator magnet [A m^2]."""
    return cylinder_moment(ACTUATOR_DIAMETER, ACTUATOR_LENGTH, ACTUATOR_REMANENCE)


def magnet_pose_from_psi(psi_deg: float, v1: float = 0.15, v2: float = 0.20,
                         v3: float = 0.35, moment_sign: int = 1) -> ExternalMagnet:
    """Actuator pose on the gimbal arc: angle psi, arm v1, pivot at (v3, -v2).

    The magnet rides a circle of radius v1 around the pivot, its dipole along
    +x (moment_sign=+1) or -x (-1).  psi=0 parks it below the workspace tip;
    psi=90 swings it behind the chain.
    """
    a = math.radians(psi_deg)
    position = (v3 - v1 * math.sin(a), 0.0, v1 * math.cos(a) - v2)
    moment = (moment_sign * actuator_moment(), 0.0, 0.0)
    return ExternalMagnet(position=np.array(position), moment=np.array(moment),
                          diameter=ACTUATOR_DIAMETER)


# -- strict parsing helpers ------------------------------------------------------


def _check_keys(raw: dict, required: set, optional: set, where: str) -> None:
    missing = required - raw.keys()
    unknown = raw.keys() - required - optional
    if missing:
        raise ScenarioError(f"{where}: missing keys {sorted(missing)}")
    if unknown:
        raise ScenarioError(f"{where}: unknown keys {sorted(unknown)}")


def _vec3(raw, where: str) -> tuple:
    v = np.asarray(raw, dtype=float)
    if v.shape != (3,):
        raise ScenarioError(f"{where}: expected 3 numbers")
    return tuple(float(x) for x in v)


def _grid(raw, where: str) -> tuple:
    """Explicit list or {start, stop, step}; canonical form is the tuple."""
    if isinstance(raw, dict):
        _check_keys(raw, {"start", "stop", "step"}, set(), where)
        start, stop, step = (float(raw[k]) for k in ("start", "stop", "step"))
        if step <= 0:
            raise ScenarioError(f"{where}: step must be positive")
        count = int(round((stop - start) / step))
        values = tuple(start + k * step for k in range(count + 1))
    else:
        values = tuple(float(x) for x in raw)
    if len(values) == 0:
        raise ScenarioError(f"{where}: empty grid")
    return values


def _field_spec(raw: dict, where: str) -> dict:
    """Validate a field source; canonical form keeps file units."""
    if not isinstance(raw, dict) or "type" not in raw:
        raise ScenarioError(f"{where}: expected an object with a 'type'")
    kind = raw["type"]
    if kind == "uniform":
        _check_keys(raw, {"type", "mT"}, {"angle_deg"}, where)
        return {"type": "uniform", "mT": float(raw["mT"]),
                "angle_deg": float(raw.get("angle_deg", 0.0))}
    if kind == "magnet":
        _check_keys(raw, {"type", "position_mm", "moment_Am2"}, set(), where)
        return {"type": "magnet",
                "position_mm": list(_vec3(raw["position_mm"], where)),
                "moment_Am2": list(_vec3(raw["moment_Am2"], where))}
    if kind == "psi":
        _check_keys(raw, {"type", "deg"},
                    {"v1_cm", "v2_cm", "v3_cm", "moment_sign"}, where)
        deg = raw["deg"]
        degs = [float(deg)] if isinstance(deg, (int, float)) else [float(x) for x in deg]
        if not degs:
            raise ScenarioError(f"{where}: empty psi list")
        sign = int(raw.get("moment_sign", 1))
        if sign not in (-1, 1):
            raise ScenarioError(f"{where}: moment_sign must be +1 or -1")
        return {"type": "psi", "deg": degs,
                "v1_cm": float(raw.get("v1_cm", 15.0)),
                "v2_cm": float(raw.get("v2_cm", 20.0)),
                "v3_cm": float(raw.get("v3_cm", 35.0)),
                "moment_sign": sign}
    raise ScenarioError(f"{where}: unknown field type {kind!r}")


def _solver_options(raw: dict, where: str) -> SolveOptions:
    _check_keys(raw, set(), {"max_iterations", "restarts", "perturbation"}, where)
    kwargs = {}
    if "max_iterations" in raw:
        kwargs["max_iterations"] = int(raw["max_iterations"])
    if "restarts" in raw:
        kwargs["restarts"] = int(raw["restarts"])
    if "perturbation" in raw:
        kwargs["perturbation"] = float(raw["perturbation"])
    return SolveOptions(**kwargs)


def _solver_dict(options: SolveOptions) -> dict:
    return {"max_iterations": options.max_iterations,
            "restarts": options.restarts,
            "perturbation": options.perturbation}


# -- scenario types --------------------------------------------------------------


@dataclass(frozen=True)
class SolveScenario:
    """One equilibrium solve, or a continuation family over actuator angles."""

    name: str
    design_spec: object                  # canonical: name or {base, overrides}
    field: dict                          # canonical field spec, file units
    ball_count: int | None = None
    length_mm: float | None = None
    base_mm: tuple = (0.0, 0.0, 0.0)
    base_tangent: tuple = (1.0, 0.0, 0.0)
    clamped_base: bool = False
    include_skin: bool = True
    gravity_on: bool = False
    gravity_up: tuple = (0.0, 0.0, 1.0)
    solver: SolveOptions = dataclass_field(default_factory=SolveOptions)
    seed: int = 0
    svg: bool = True

    def design(self) -> DesignSpec:
        return resolve_design(self.design_spec)[0]

    def field_sources(self) -> list:
        """(label, FieldSource) pairs; sweeps solve in list order."""
        f = self.field
        if f["type"] == "uniform":
            a = math.radians(f["angle_deg"])
            b = f["mT"] * 1e-3
            return [("", UniformField((b * math.cos(a), 0.0, b * math.sin(a))))]
        if f["type"] == "magnet":
            return [("", ExternalMagnet(
                position=np.asarray(f["position_mm"]) * 1e-3,
                moment=np.asarray(f["moment_Am2"])))]
        pairs = []
        for deg in f["deg"]:
            magnet = magnet_pose_from_psi(
                deg, v1=f["v1_cm"] * 1e-2, v2=f["v2_cm"] * 1e-2,
                v3=f["v3_cm"] * 1e-2, moment_sign=f["moment_sign"])
            pairs.append((f"psi{deg:05.1f}".replace(".", "p"), magnet))
        return pairs

    def to_dict(self) -> dict:
        out = {"kind": "solve", "name": self.name, "design": self.design_spec,
               "field": self.field}
        if self.ball_count is not None:
            out["ball_count"] = self.ball_count
        if self.length_mm is not None:
            out["length_mm"] = self.length_mm
        out.update(base_mm=list(self.base_mm), base_tangent=list(self.base_tangent),
                   clamped_base=self.clamped_base, include_skin=self.include_skin,
                   gravity={"on": self.gravity_on, "up": list(self.gravity_up)},
                   solver=_solver_dict(self.solver), seed=self.seed, svg=self.svg)
        return out


@dataclass(frozen=True)
class WorkspaceScenario:
    """Angle x length tip scan over one or more designs."""

    name: str
    designs: tuple
    angles_deg: tuple
    lengths_mm: tuple
    field_mT: float = 40.0
    include_skin: bool = True
    parallel: int | None = None
    seed: int = 0

    def to_dict(self) -> dict:
        out = {"kind": "workspace", "name": self.name,
               "designs": list(self.designs), "field_mT": self.field_mT,
               "angles_deg": list(self.angles_deg),
               "lengths_mm": list(self.lengths_mm),
               "include_skin": self.include_skin, "seed": self.seed}
        if self.parallel is not None:
            out["parallel"] = self.parallel
        return out


@dataclass(frozen=True)
class NavigateScenario:
    """Headless scripted channel run; commands may come from the scene's
    built-in autopilot, an inline list, or a side file."""

    name: str
    scene: str
    commands: tuple                      # () with use_builtin means autopilot
    use_builtin: bool = False
    design_spec: object = "experimental"
    assert_branch: str | None = None

    def design(self) -> DesignSpec:
        return resolve_design(self.design_spec)[0]

    def to_dict(self) -> dict:
        out = {"kind": "navigate", "name": self.name, "scene": self.scene,
               "commands": "builtin" if self.use_builtin else list(self.commands),
               "design": self.design_spec}
        if self.assert_branch is not None:
            out["assert_branch"] = self.assert_branch
        return out


# -- parsing ---------------------------------------------------------------------


def scenario_from_dict(raw: dict, where: str = "scenario",
                       base_dir: Path | None = None):
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: expected a JSON object")
    kind = raw.get("kind")
    if kind == "solve":
        return _parse_solve(raw, where)
    if kind == "workspace":
        return _parse_workspace(raw, where)
    if kind == "navigate":
        return _parse_navigate(raw, where, base_dir)
    raise ScenarioError(
        f"{where}: kind must be 'solve', 'workspace' or 'navigate', got {kind!r}")


def _parse_solve(raw: dict, where: str) -> SolveScenario:
    _check_keys(raw, {"kind", "name", "design", "field"},
                {"ball_count", "length_mm", "base_mm", "base_tangent",
                 "clamped_base", "include_skin", "gravity", "solver", "seed",
                 "svg"}, where)
    design, canonical = resolve_design(raw["design"], f"{where}.design")
    ball_count = raw.get("ball_count")
    length_mm = raw.get("length_mm")
    if (ball_count is None) == (length_mm is None):
        raise ScenarioError(f"{where}: give exactly one of ball_count, length_mm")
    gravity_on, gravity_up = False, (0.0, 0.0, 1.0)
    if "gravity" in raw:
        g = raw["gravity"]
        _check_keys(g, {"on"}, {"up"}, f"{where}.gravity")
        gravity_on = bool(g["on"])
        if "up" in g:
            gravity_up = _vec3(g["up"], f"{where}.gravity.up")
    return SolveScenario(
        name=str(raw["name"]), design_spec=canonical,
        field=_field_spec(raw["field"], f"{where}.field"),
        ball_count=None if ball_count is None else int(ball_count),
        length_mm=None if length_mm is None else float(length_mm),
        base_mm=_vec3(raw.get("base_mm", (0.0, 0.0, 0.0)), f"{where}.base_mm"),
        base_tangent=_vec3(raw.get("base_tangent", (1.0, 0.0, 0.0)),
                           f"{where}.base_tangent"),
        clamped_base=bool(raw.get("clamped_base", False)),
        include_skin=bool(raw.get("include_skin", True)),
        gravity_on=gravity_on, gravity_up=gravity_up,
        solver=_solver_options(raw.get("solver", {}), f"{where}.solver"),
        seed=int(raw.get("seed", 0)), svg=bool(raw.get("svg", True)))


def _parse_workspace(raw: dict, where: str) -> WorkspaceScenario:
    _check_keys(raw, {"kind", "name", "designs", "angles_deg", "lengths_mm"},
                {"field_mT", "include_skin", "parallel", "seed"}, where)
    designs = tuple(str(d) for d in raw["designs"])
    if not designs:
        raise ScenarioError(f"{where}: designs list is empty")
    for d in designs:
        named_design(d)                  # fail fast on unknown names
    return WorkspaceScenario(
        name=str(raw["name"]), designs=designs,
        angles_deg=_grid(raw["angles_deg"], f"{where}.angles_deg"),
        lengths_mm=_grid(raw["lengths_mm"], f"{where}.lengths_mm"),
        field_mT=float(raw.get("field_mT", 40.0)),
        include_skin=bool(raw.get("include_skin", True)),
        parallel=None if raw.get("parallel") is None else int(raw["parallel"]),
        seed=int(raw.get("seed", 0)))


def _parse_navigate(raw: dict, where: str,
                    base_dir: Path | None) -> NavigateScenario:
    _check_keys(raw, {"kind", "name", "scene"},
                {"commands", "commands_file", "design", "assert_branch"}, where)
    if "commands" in raw and "commands_file" in raw:
        raise ScenarioError(f"{where}: give commands or commands_file, not both")
    commands: tuple = ()
    use_builtin = False
    if "commands_file" in raw:
        path = Path(raw["commands_file"])
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        try:
            listed = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ScenarioError(f"{where}: commands file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"{where}: commands file {path}: {exc}") from None
        commands = _command_list(listed, f"{where}.commands_file")
    elif "commands" in raw:
        if raw["commands"] == "builtin":
            use_builtin = True
        else:
            commands = _command_list(raw["commands"], f"{where}.commands")
    else:
        use_builtin = True
    _, canonical = resolve_design(raw.get("design", "experimental"),
                                  f"{where}.design")
    return NavigateScenario(
        name=str(raw["name"]), scene=str(raw["scene"]), commands=commands,
        use_builtin=use_builtin, design_spec=canonical,
        assert_branch=(None if raw.get("assert_branch") is None
                       else str(raw["assert_branch"])))


def _command_list(raw, where: str) -> tuple:
    if not isinstance(raw, list) or not all(isinstance(c, dict) for c in raw):
        raise ScenarioError(f"{where}: expected a list of command objects")
    return tuple(dict(c) for c in raw)


def list_presets() -> list:
    return sorted(p.stem for p in PRESET_DIR.glob("*.json"))


def load_scenario(path_or_name: str):
    """Scenario from a JSON file path, or a packaged preset by bare name."""
    path = Path(path_or_name)
    if not path.exists():
        candidate = PRESET_DIR / f"{path_or_name}.json"
        if "/" not in str(path_or_name) and candidate.exists():
            path = candidate
        else:
            raise ScenarioError(
                f"no scenario file {path_or_name!r}; presets: "
                + ", ".join(list_presets()))
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno} "
                            f"column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(raw, where=path.name, base_dir=path.parent)
