/** Live round trip against the real server: spawns `python3 -m magchain serve`,
 * steers a session through the controller exactly as the panel would, then
 * replays the exported command log headlessly and compares logs byte for byte.
 */
import { execFileSync, spawn } from "node:child_process";
import type { ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import { SteeringController } from "../src/controller.js";
import type { StepOutcome } from "../src/controller.js";
import type { SessionState } from "../src/types.js";

const PORT = 8719;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let serverErr = "";

async function waitReady(): Promise<void> {
  for (let i = 0; i < 60; i++) {
    try {
      const res = await fetch(`${BASE}/scenes`);
      if (res.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error(`server did not come up on ${BASE}\n${serverErr}`);
}

beforeAll(async () => {
  server = spawn("python3", ["-m", "magchain", "serve", "--port", String(PORT)], {
    stdio: ["ignore", "ignore", "pipe"],
  });
  server.stderr?.on("data", (chunk: Buffer) => {
    serverErr += chunk.toString();
  });
  await waitReady();
}, 60_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

function okState(outcome: StepOutcome): SessionState {
  expect(outcome.status).toBe("ok");
  if (outcome.status !== "ok") throw new Error("unreachable");
  return outcome.state;
}

test("interactive solve answers well under 200 ms at n = 10", async () => {
  const client = new ApiClient(BASE);
  const body = {
    design: "experimental",
    ball_count: 10,
    field: { type: "uniform", mT: 40.0, angle_deg: 90.0 },
  };
  await client.solve(body); // warm the process once
  const t0 = performance.now();
  const res = await client.solve({ ...body, field: { type: "uniform", mT: 40.0, angle_deg: 60.0 } });
  const elapsed = performance.now() - t0;
  expect(res.solves[0].converged).toBe(true);
  expect(res.solves[0].positions_mm).toHaveLength(10);
  expect(elapsed).toBeLessThan(200);
}, 30_000);

test(
  "a scripted driver steers turn165 into the branch and the exported log replays identically",
  async () => {
    const client = new ApiClient(BASE);
    const c = new SteeringController(client);
    await c.start("turn165", { prime: false });
    const d = c.view.ballDiameterMm;
    c.setStepSize(d);

    // drive it like an operator: set the field, feed to the junction,
    // sweep the dial to the branch heading, keep feeding
    okState(await c.applyField(40, 0));
    for (let i = 0; i < 7; i++) okState(await c.advance());
    for (let a = 15; a <= 165; a += 15) okState(await c.setFieldAngle(a));
    let final: SessionState | null = null;
    for (let i = 0; i < 6; i++) final = okState(await c.advance());

    expect(final).not.toBeNull();
    expect(final?.ball_count).toBe(13);
    expect(final?.jammed).toBe(false);
    expect(final?.in_branch["branch"]).toBe(true); // branch completion

    // the exported command file replays headlessly to the same log bytes
    const apiLog = await c.fetchSessionLog();
    const dir = mkdtempSync(join(tmpdir(), "steering-ui-"));
    writeFileSync(join(dir, "commands.json"), c.exportCommandLog());
    writeFileSync(
      join(dir, "replay.json"),
      JSON.stringify({
        kind: "navigate",
        name: "replay",
        scene: "turn165",
        commands_file: "commands.json",
        assert_branch: "branch",
      }),
    );
    execFileSync(
      "python3",
      ["-m", "magchain", "navigate", "--scenario", join(dir, "replay.json"), "--out", join(dir, "out")],
      { stdio: ["ignore", "pipe", "pipe"] },
    );
    const headlessLog = readFileSync(join(dir, "out", "session.jsonl"), "utf-8");
    expect(apiLog).toBe(headlessLog); // identical final state, and then some

    const lastApi = JSON.parse(apiLog.trimEnd().split("\n").at(-1) ?? "{}") as SessionState;
    expect(lastApi.tip_mm).toEqual(final?.tip_mm);
    await c.end();
  },
  180_000,
);

test("the busy contract surfaces concurrent writers as a flash, not an error", async () => {
  const client = new ApiClient(BASE);
  const c = new SteeringController(client);
  await c.start("turn90");
  // fire a raw concurrent step around the controller to provoke the 409
  const slow = c.advance();
  let got409 = false;
  for (let i = 0; i < 50 && !got409; i++) {
    const res = await fetch(`${BASE}/sessions/${c.view.sessionId}/step`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ advance_mm: c.view.ballDiameterMm }),
    });
    if (res.status === 409) got409 = true;
    else await res.body?.cancel();
    if ((await Promise.race([slow, Promise.resolve(null)])) !== null) break;
  }
  await slow;
  // whichever writer lost, the session is intact and steppable afterwards
  const after = await c.advance();
  expect(after.status).toBe("ok");
  await c.end();
}, 60_000);
