"""Quasi-static simulation of magnetic ball-chain and magnet-tipped guidewire tips.

Equilibrium shapes are found by minimizing total potential energy: dipole
pair interactions within the chain, interaction with an applied field (uniform
or from an external permanent magnet), elastic bending of an optional polymer
skin, and gravity.  Continuation sweeps over field angle map reachable
workspaces; a channel-navigation layer adds soft wall contact and incremental
feeding for steering studies.
"""
from .chain import (
    ChainConfig,
    DesignKind,
    DesignSpec,
    EnergyBreakdown,
    Gravity,
    RodShape,
    design_from_table,
    experimental_ball_chain,
    rod_energy,
    total_energy,
)
from .errors import DegenerateGeometryError, ScenarioError, SimulationError, SingularityError
from .magnetics import (
    MU0,
    Dipole,
    DipoleApproximationWarning,
    ExternalMagnet,
    UniformField,
    chain_pair_energy,
    dipole_energy,
    dipole_field,
    external_magnet_energy,
    field_at,
)
from .mechanics import (
    MassPoint,
    annulus_second_moment,
    bend_angle,
    curvature_radius,
    gravity_energy,
    segment_bend_energy,
    solid_circle_second_moment,
    total_skin_energy,
)
from .navigation import (
    BUILTIN_TURNS_DEG,
    ChannelScene,
    NavigationSession,
    WallPenalty,
    bifurcation_scene,
    builtin_script,
    load_scene,
    run_script,
    scene_from_dict,
)
from .outputs import (
    energy_json,
    energy_report,
    scan_json,
    scan_to_dict,
    shape_csv,
    shape_rows,
    shape_svg,
    workspace_summary_csv,
)
from .scenario import (
    NavigateScenario,
    SolveScenario,
    WorkspaceScenario,
    list_presets,
    load_scenario,
    magnet_pose_from_psi,
    named_design,
    resolve_design,
    scenario_from_dict,
)
from .solver import SolveOptions, SolveResult, continuation_sweep, solve_shape, verify_gradient
from .workspace import (
    HALF_DISK_BOUND_MM2,
    WorkspaceScan,
    planar_area,
    revolved_volume,
    scan,
    svg_overlay,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_TURNS_DEG",
    "HALF_DISK_BOUND_MM2",
    "MU0",
    "ChainConfig",
    "ChannelScene",
    "DesignKind",
    "DesignSpec",
    "Dipole",
    "DipoleApproximationWarning",
    "DegenerateGeometryError",
    "EnergyBreakdown",
    "ExternalMagnet",
    "Gravity",
    "MassPoint",
    "NavigateScenario",
    "NavigationSession",
    "RodShape",
    "ScenarioError",
    "SimulationError",
    "SingularityError",
    "SolveOptions",
    "SolveResult",
    "SolveScenario",
    "UniformField",
    "WallPenalty",
    "WorkspaceScan",
    "WorkspaceScenario",
    "annulus_second_moment",
    "bend_angle",
    "bifurcation_scene",
    "builtin_script",
    "chain_pair_energy",
    "continuation_sweep",
    "curvature_radius",
    "design_from_table",
    "dipole_energy",
    "dipole_field",
    "energy_json",
    "energy_report",
    "experimental_ball_chain",
    "external_magnet_energy",
    "field_at",
    "gravity_energy",
    "list_presets",
    "load_scenario",
    "load_scene",
    "magnet_pose_from_psi",
    "named_design",
    "planar_area",
    "resolve_design",
    "revolved_volume",
    "rod_energy",
    "run_script",
    "scan",
    "scan_json",
    "scan_to_dict",
    "scenario_from_dict",
    "scene_from_dict",
    "segment_bend_energy",
    "shape_csv",
    "shape_rows",
    "shape_svg",
    "solid_circle_second_moment",
    "solve_shape",
    "svg_overlay",
    "total_energy",
    "total_skin_energy",
    "verify_gradient",
    "workspace_summary_csv",
]
