import type { MagnetPose } from "./types.js";

/** Bench actuator geometry: a cylindrical magnet rides a pivoted arm.
 *
 * The arm pivot sits v2 below and v3 along the channel axis from the base;
 * the magnet sits at radius v1 from the pivot at elevation angle psi. This
 * is an input-device model (where the user's dial puts the magnet), not
 * chain physics; the commanded pose is solved entirely server-side.
 */
export const ARM_RADIUS_M = 0.15; // v1
export const ARM_DROP_M = 0.2; // v2
export const ARM_OFFSET_M = 0.35; // v3

// N52 cylinder, 76.2 mm diameter x 38.1 mm: |m| = Br * V / mu0
const MAGNET_DIAMETER_M = 76.2e-3;
const MAGNET_LENGTH_M = 38.1e-3;
const MAGNET_REMANENCE_T = 1.48;
const MU0 = 4e-7 * Math.PI;

export function actuatorMomentAm2(): number {
  const volume = (Math.PI / 4) * MAGNET_DIAMETER_M ** 2 * MAGNET_LENGTH_M;
  return (MAGNET_REMANENCE_T * volume) / MU0;
}

/** Magnet pose for arm angle psi (deg). momentSign +1 points the moment
 * along +x (pulls the tip down past the arm), -1 along -x. */
export function magnetPoseFromPsi(psiDeg: number, momentSign: 1 | -1): MagnetPose {
  const psi = (psiDeg * Math.PI) / 180;
  const x = ARM_OFFSET_M - ARM_RADIUS_M * Math.sin(psi);
  const z = ARM_RADIUS_M * Math.cos(psi) - ARM_DROP_M;
  return {
    position_mm: [x * 1e3, 0, z * 1e3],
    moment_Am2: [momentSign * actuatorMomentAm2(), 0, 0],
  };
}
