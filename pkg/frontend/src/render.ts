import type { SceneInfo } from "./types.js";
import type { ViewState } from "./controller.js";

/** The part of CanvasRenderingContext2D the renderer touches; tests pass a
 * recording fake. */
export interface Draw2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  lineCap: CanvasLineCap;
  globalAlpha: number;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
}

export interface ViewTransform {
  scale: number; // px per mm
  x(worldXmm: number): number;
  y(worldZmm: number): number;
}

/** Equal-aspect world(mm, x-z) -> pixel transform covering the scene with a
 * margin. Everything on screen derives from scene metadata through this. */
export function fitTransform(
  scene: SceneInfo,
  viewW: number,
  viewH: number,
  marginPx = 48,
): ViewTransform {
  const xs: number[] = [];
  const zs: number[] = [];
  for (const [a, b] of scene.segments_mm) {
    xs.push(a[0], b[0]);
    zs.push(a[2], b[2]);
  }
  const half = scene.width_mm / 2;
  const minX = Math.min(...xs) - half;
  const maxX = Math.max(...xs) + half;
  const minZ = Math.min(...zs) - half;
  const maxZ = Math.max(...zs) + half;
  const spanX = Math.max(maxX - minX, scene.width_mm);
  const spanZ = Math.max(maxZ - minZ, scene.width_mm);
  const scale = Math.min((viewW - 2 * marginPx) / spanX, (viewH - 2 * marginPx) / spanZ);
  const cx = (minX + maxX) / 2;
  const cz = (minZ + maxZ) / 2;
  return {
    scale,
    x: (wx) => viewW / 2 + (wx - cx) * scale,
    // screen y grows downward; world z grows upward
    y: (wz) => viewH / 2 - (wz - cz) * scale,
  };
}

const BAR_LADDER = [1, 2, 5, 10, 20, 50];

/** Scale-bar length in mm: the largest nice value drawing at most maxPx. */
export function scaleBarMm(scale: number, maxPx = 120): number {
  let pick = BAR_LADDER[0];
  for (const mm of BAR_LADDER) if (mm * scale <= maxPx) pick = mm;
  return pick;
}

function arrow(ctx: Draw2D, x0: number, y0: number, x1: number, y1: number, headPx: number): void {
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  const a = Math.atan2(y1 - y0, x1 - x0);
  for (const side of [-1, 1]) {
    ctx.moveTo(x1, y1);
    ctx.lineTo(
      x1 - headPx * Math.cos(a + (side * Math.PI) / 7),
      y1 - headPx * Math.sin(a + (side * Math.PI) / 7),
    );
  }
  ctx.stroke();
}

const GRID_MM = 5;

function drawGrid(ctx: Draw2D, t: ViewTransform, scene: SceneInfo, w: number, h: number): void {
  const xs = scene.segments_mm.flatMap(([a, b]) => [a[0], b[0]]);
  const zs = scene.segments_mm.flatMap(([a, b]) => [a[2], b[2]]);
  const half = scene.width_mm / 2 + GRID_MM;
  ctx.globalAlpha = 0.18;
  ctx.strokeStyle = "#3c4a5a";
  ctx.lineWidth = 1;
  const x0 = Math.ceil((Math.min(...xs) - half) / GRID_MM) * GRID_MM;
  const x1 = Math.max(...xs) + half;
  for (let gx = x0; gx <= x1; gx += GRID_MM) {
    ctx.beginPath();
    ctx.moveTo(t.x(gx), 0);
    ctx.lineTo(t.x(gx), h);
    ctx.stroke();
  }
  const z0 = Math.ceil((Math.min(...zs) - half) / GRID_MM) * GRID_MM;
  const z1 = Math.max(...zs) + half;
  for (let gz = z0; gz <= z1; gz += GRID_MM) {
    ctx.beginPath();
    ctx.moveTo(0, t.y(gz));
    ctx.lineTo(w, t.y(gz));
    ctx.stroke();
  }
  ctx.globalAlpha = 1;
}

/** Top view of the whole panel. Draws only what the last acknowledged
 * server state says; no client-side physics. */
export function draw(ctx: Draw2D, viewW: number, viewH: number, view: ViewState): void {
  ctx.clearRect(0, 0, viewW, viewH);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, viewW, viewH);
  ctx.textBaseline = "alphabetic";

  if (view.banner !== null) {
    ctx.fillStyle = "#e2554a";
    ctx.font = "16px system-ui";
    ctx.textAlign = "center";
    ctx.fillText(view.banner, viewW / 2, 24);
  }
  if (view.scene === null || view.state === null) {
    ctx.fillStyle = "#8a93a3";
    ctx.font = "14px system-ui";
    ctx.textAlign = "center";
    ctx.fillText("no session", viewW / 2, viewH / 2);
    return;
  }
  const scene = view.scene;
  const state = view.state;
  const t = fitTransform(scene, viewW, viewH);

  drawGrid(ctx, t, scene, viewW, viewH);

  // channel: each centerline swept by the width; round caps merge segments
  ctx.strokeStyle = "#26344a";
  ctx.lineCap = "round";
  ctx.lineWidth = scene.width_mm * t.scale;
  for (const [a, b] of scene.segments_mm) {
    ctx.beginPath();
    ctx.moveTo(t.x(a[0]), t.y(a[2]));
    ctx.lineTo(t.x(b[0]), t.y(b[2]));
    ctx.stroke();
  }
  ctx.lineCap = "butt";

  // branch names at their segment ends
  ctx.fillStyle = "#5d6b7e";
  ctx.font = "12px system-ui";
  ctx.textAlign = "center";
  for (const [name, idx] of Object.entries(scene.branches)) {
    const seg = scene.segments_mm[idx];
    if (seg) ctx.fillText(name, t.x(seg[1][0]), t.y(seg[1][2]) - 8);
  }
  ctx.fillText("entry", t.x(scene.entry_mm[0]), t.y(scene.entry_mm[2]) + 22);

  // balls with dipole arrows, both straight from the state
  const rPx = (view.ballDiameterMm / 2) * t.scale;
  for (let i = 0; i < state.positions_mm.length; i++) {
    const p = state.positions_mm[i];
    ctx.beginPath();
    ctx.arc(t.x(p[0]), t.y(p[2]), rPx, 0, 2 * Math.PI);
    ctx.fillStyle = state.collision ? "#b08a5a" : "#cfd6e1";
    ctx.fill();
    ctx.strokeStyle = "#10141a";
    ctx.lineWidth = 1;
    ctx.stroke();
    const m = state.dipole_dirs[i];
    if (m) {
      ctx.strokeStyle = "#e2554a";
      ctx.lineWidth = 1.5;
      const len = 0.45 * view.ballDiameterMm;
      arrow(
        ctx,
        t.x(p[0] - m[0] * len),
        t.y(p[2] - m[2] * len),
        t.x(p[0] + m[0] * len),
        t.y(p[2] + m[2] * len),
        0.35 * rPx,
      );
    }
  }

  // field glyph, top right
  ctx.font = "13px system-ui";
  ctx.textAlign = "right";
  const gx = viewW - 70;
  const gy = 40;
  if ("mT" in state.field) {
    const a = (state.field.angle_deg * Math.PI) / 180;
    ctx.strokeStyle = "#5aa9e2";
    ctx.lineWidth = 2;
    arrow(
      ctx,
      gx - 18 * Math.cos(a),
      gy + 18 * Math.sin(a),
      gx + 18 * Math.cos(a),
      gy - 18 * Math.sin(a),
      6,
    );
    ctx.fillStyle = "#5aa9e2";
    ctx.fillText(
      `${state.field.mT.toFixed(1)} mT @ ${state.field.angle_deg.toFixed(0)}°`,
      viewW - 12,
      gy + 26,
    );
  } else {
    const pos = state.field.magnet.position_mm;
    ctx.fillStyle = "#5aa9e2";
    ctx.fillText(`magnet at (${pos.map((v) => v.toFixed(0)).join(", ")}) mm`, viewW - 12, gy + 26);
  }

  // status and live readouts, top/bottom left
  ctx.textAlign = "left";
  ctx.font = "14px system-ui";
  if (state.jammed) {
    ctx.fillStyle = "#e2554a";
    ctx.fillText("JAMMED", 12, 24);
  } else if (state.collision) {
    ctx.fillStyle = "#e2a04a";
    ctx.fillText("CONTACT", 12, 24);
  } else {
    ctx.fillStyle = "#5ae28a";
    ctx.fillText(view.busy ? "solving…" : "ok", 12, 24);
  }
  ctx.fillStyle = "#cfd6e1";
  ctx.font = "13px system-ui";
  ctx.fillText(`U = ${(state.energy_J * 1e6).toFixed(3)} µJ`, 12, viewH - 34);
  ctx.fillText(
    `${state.ball_count} balls, ${state.inserted_mm.toFixed(2)} mm inserted`,
    12,
    viewH - 16,
  );
  if (state.messages) {
    ctx.fillStyle = "#e2a04a";
    state.messages.forEach((msg, i) => ctx.fillText(msg, 12, 44 + 16 * i));
  }

  // scale bar from the live transform, bottom right
  const barMm = scaleBarMm(t.scale);
  const barPx = barMm * t.scale;
  const bx = viewW - 20;
  const by = viewH - 22;
  ctx.strokeStyle = "#cfd6e1";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(bx - barPx, by);
  ctx.lineTo(bx, by);
  ctx.stroke();
  ctx.textAlign = "right";
  ctx.fillStyle = "#cfd6e1";
  ctx.fillText(`${barMm} mm`, bx, by - 8);
}
