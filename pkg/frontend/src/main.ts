import { ApiClient } from "./api.js";
import { SteeringController } from "./controller.js";
import { draw } from "./render.js";

function $<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (el === null) throw new Error(`missing element #${id}`);
  return el as T;
}

const apiBase =
  new URLSearchParams(location.search).get("api") ?? "http://127.0.0.1:8700";
const client = new ApiClient(apiBase);
const controller = new SteeringController(client);

const canvas = $<HTMLCanvasElement>("view");
const sceneSel = $<HTMLSelectElement>("scene");
const startBtn = $<HTMLButtonElement>("start");
const angleIn = $<HTMLInputElement>("angle");
const angleOut = $<HTMLElement>("angle-readout");
const magIn = $<HTMLInputElement>("magnitude");
const magOut = $<HTMLElement>("magnitude-readout");
const modeSel = $<HTMLSelectElement>("mode");
const psiIn = $<HTMLInputElement>("psi");
const psiOut = $<HTMLElement>("psi-readout");
const psiSign = $<HTMLSelectElement>("psi-sign");
const advanceBtn = $<HTMLButtonElement>("advance");
const retractBtn = $<HTMLButtonElement>("retract");
const stepSel = $<HTMLSelectElement>("step-size");
const exportBtn = $<HTMLButtonElement>("export");
const retryBtn = $<HTMLButtonElement>("retry");
const statusOut = $<HTMLElement>("status");

function render(): void {
  const ctx = canvas.getContext("2d");
  if (ctx === null) return;
  const w = canvas.clientWidth;
  const h = canvas.clientHeight;
  const dpr = window.devicePixelRatio || 1;
  if (canvas.width !== w * dpr || canvas.height !== h * dpr) {
    canvas.width = w * dpr;
    canvas.height = h * dpr;
  }
  ctx.setTransform(dpr, 0, 0, dpr, 0, 0);
  draw(ctx, w, h, controller.view);
}

function syncControls(): void {
  const view = controller.view;
  const dead = controller.controlsDisabled();
  const uniform = modeSel.value === "uniform";
  for (const el of [angleIn, magIn, advanceBtn, retractBtn, stepSel, modeSel, psiIn, psiSign])
    el.disabled = dead;
  angleIn.disabled ||= !uniform;
  magIn.disabled ||= !uniform;
  psiIn.disabled ||= uniform;
  psiSign.disabled ||= uniform;
  exportBtn.disabled = view.sessionId === null;
  retryBtn.hidden = view.error === null;
  if (view.error !== null) {
    statusOut.textContent = `command failed (${view.error.status}): ${view.error.detail}`;
  } else if (view.banner !== null) {
    statusOut.textContent = view.banner;
  } else if (view.flash !== null) {
    statusOut.textContent = view.flash;
    setTimeout(() => controller.clearFlash(), 800);
  } else {
    statusOut.textContent = view.busy ? "solving…" : "";
  }
}

controller.subscribe(() => {
  syncControls();
  requestAnimationFrame(render);
});

async function populateScenes(): Promise<void> {
  try {
    const scenes = await client.scenes();
    sceneSel.replaceChildren(
      ...scenes.map((s) => new Option(`${s.name} (${s.width_mm} mm wide)`, s.name)),
    );
  } catch {
    controller.view.banner = "server unreachable";
    syncControls();
    requestAnimationFrame(render);
  }
}

startBtn.addEventListener("click", () => {
  void controller
    .start(sceneSel.value, {
      fieldMT: Number(magIn.value),
      fieldAngleDeg: Number(angleIn.value),
    })
    .then(() => {
      const d = controller.view.ballDiameterMm;
      stepSel.replaceChildren(
        new Option(`${(d / 4).toFixed(3)} mm (d/4)`, String(d / 4)),
        new Option(`${(d / 2).toFixed(3)} mm (d/2)`, String(d / 2)),
        new Option(`${d.toFixed(3)} mm (d)`, String(d), true, true),
      );
      controller.setStepSize(d);
    })
    .catch(() => {
      /* banner already raised by the controller */
    });
});

angleIn.addEventListener("input", () => {
  angleOut.textContent = `${angleIn.value}°`;
  void controller.setFieldAngle(Number(angleIn.value));
});
magIn.addEventListener("input", () => {
  magOut.textContent = `${magIn.value} mT`;
  void controller.setFieldMagnitude(Number(magIn.value));
});
psiIn.addEventListener("input", () => {
  psiOut.textContent = `ψ = ${psiIn.value}°`;
  void controller.setMagnetPsi(Number(psiIn.value), psiSign.value === "-1" ? -1 : 1);
});
stepSel.addEventListener("change", () => controller.setStepSize(Number(stepSel.value)));
advanceBtn.addEventListener("click", () => void controller.advance());
retractBtn.addEventListener("click", () => void controller.retract());
retryBtn.addEventListener("click", () => void controller.retry());

exportBtn.addEventListener("click", () => {
  const blob = new Blob([controller.exportCommandLog()], { type: "application/json" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = `${controller.view.scene?.name ?? "session"}-commands.json`;
  a.click();
  URL.revokeObjectURL(a.href);
});

void populateScenes();
syncControls();
requestAnimationFrame(render);
