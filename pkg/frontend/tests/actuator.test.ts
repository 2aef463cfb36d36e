import { describe, expect, test } from "vitest";

import { actuatorMomentAm2, magnetPoseFromPsi } from "../src/actuator.js";

describe("arm magnet pose", () => {
  test("moment magnitude matches the cylinder's Br V / mu0", () => {
    expect(actuatorMomentAm2()).toBeCloseTo(204.6335, 3);
  });

  test("psi = 0 parks the magnet ahead of and below the arm pivot", () => {
    const { position_mm } = magnetPoseFromPsi(0, 1);
    expect(position_mm[0]).toBeCloseTo(350, 9);
    expect(position_mm[1]).toBeCloseTo(0, 12);
    expect(position_mm[2]).toBeCloseTo(-50, 9);
  });

  test("psi = 90 swings the magnet in and down", () => {
    const { position_mm } = magnetPoseFromPsi(90, 1);
    expect(position_mm[0]).toBeCloseTo(200, 9);
    expect(position_mm[2]).toBeCloseTo(-200, 9);
  });

  test("moment sign selects the +x / -x families", () => {
    expect(magnetPoseFromPsi(45, 1).moment_Am2[0]).toBeGreaterThan(0);
    expect(magnetPoseFromPsi(45, -1).moment_Am2[0]).toBeLessThan(0);
    expect(magnetPoseFromPsi(45, 1).moment_Am2[0]).toBeCloseTo(
      -magnetPoseFromPsi(45, -1).moment_Am2[0],
      12,
    );
  });

  test("pose is continuous in psi", () => {
    const a = magnetPoseFromPsi(30, 1).position_mm;
    const b = magnetPoseFromPsi(30.001, 1).position_mm;
    expect(Math.hypot(a[0] - b[0], a[2] - b[2])).toBeLessThan(0.01);
  });
});
