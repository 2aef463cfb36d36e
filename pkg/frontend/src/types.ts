/** Wire types for the magchain HTTP API. Field names mirror the JSON. */

export type Vec3 = [number, number, number];

export interface SceneInfo {
  name: string;
  width_mm: number;
  entry_mm: Vec3;
  axis: Vec3;
  /** Channel centerline segments, [[start, end], ...] in mm. */
  segments_mm: [Vec3, Vec3][];
  /** Branch name -> index into segments_mm. */
  branches: Record<string, number>;
}

export interface MagnetPose {
  position_mm: number[];
  moment_Am2: number[];
}

export type FieldState = { mT: number; angle_deg: number } | { magnet: MagnetPose };

/** One step command. The server accepts exactly one movement key per step;
 * field keys may be combined, a magnet pose must stand alone. */
export interface StepCommand {
  advance_mm?: number;
  retract_mm?: number;
  field_mT?: number;
  field_angle_deg?: number;
  magnet?: MagnetPose;
}

/** One line of a session log: the equilibrium after a command. */
export interface SessionState {
  step: number;
  command: StepCommand | null;
  inserted_mm: number;
  ball_count: number;
  field: FieldState;
  converged: boolean;
  jammed: boolean;
  collision: boolean;
  max_penetration_mm: number;
  energy_J: number;
  positions_mm: number[][];
  dipole_dirs: number[][];
  tip_mm: number[] | null;
  in_branch: Record<string, boolean>;
  messages?: string[];
}

export interface SessionCreated {
  id: string;
  scene: SceneInfo;
  ball_diameter_mm: number;
  state: SessionState;
}

export interface SessionSnapshot extends SessionCreated {
  step_count: number;
}

export interface SolveEntry {
  label: string;
  converged: boolean;
  iterations: number;
  positions_mm: number[][];
  dipole_dirs: number[][];
  tip_mm: number[];
  energy: Record<string, unknown>;
  csv: string;
}

export interface SolveResponse {
  name: string;
  solves: SolveEntry[];
}
