import { ApiError } from "./api.js";
import type { CreateSessionRequest } from "./api.js";
import { magnetPoseFromPsi } from "./actuator.js";
import type { SceneInfo, SessionCreated, SessionState, StepCommand } from "./types.js";

/** The slice of the API the controller needs; ApiClient satisfies it and
 * tests substitute a fake. */
export interface SessionApi {
  createSession(req: CreateSessionRequest): Promise<SessionCreated>;
  step(id: string, command: StepCommand): Promise<SessionState>;
  sessionLog(id: string): Promise<string>;
  deleteSession(id: string): Promise<void>;
}

export interface FailedCommand {
  status: number;
  detail: string;
  command: StepCommand;
}

/** Everything the renderer needs. `state` is always the last state the
 * server acknowledged; the UI never extrapolates physics. */
export interface ViewState {
  sessionId: string | null;
  scene: SceneInfo | null;
  ballDiameterMm: number;
  state: SessionState | null;
  stepSizeMm: number;
  busy: boolean;
  /** Transient notice, e.g. a refused concurrent step. */
  flash: string | null;
  /** Fatal connectivity banner; controls disable while set. */
  banner: string | null;
  /** Last failed command, offered for retry. */
  error: FailedCommand | null;
}

export type ChangeReason = "session" | "state" | "busy" | "flash" | "banner" | "error";
export type Listener = (view: ViewState, reason: ChangeReason) => void;

export type StepOutcome =
  | { status: "ok"; state: SessionState }
  | { status: "dropped" } // superseded while waiting in the one-slot queue
  | { status: "rejected"; error: FailedCommand }
  | { status: "unreachable" };

interface QueuedCommand {
  command: StepCommand;
  resolve: (outcome: StepOutcome) => void;
}

/** Session state machine: one command in flight, at most one queued.
 *
 * Every acknowledged (2xx) command lands in `commandLog` in order, so an
 * export of the log replays headlessly to the same final state. Commands
 * the server refused never enter the log.
 */
export class SteeringController {
  readonly view: ViewState = {
    sessionId: null,
    scene: null,
    ballDiameterMm: 0,
    state: null,
    stepSizeMm: 0,
    busy: false,
    flash: null,
    banner: null,
    error: null,
  };
  private readonly log: StepCommand[] = [];
  private readonly listeners: Listener[] = [];
  private pending: QueuedCommand | null = null;
  private inFlight = false;

  constructor(private readonly client: SessionApi) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      const i = this.listeners.indexOf(listener);
      if (i >= 0) this.listeners.splice(i, 1);
    };
  }

  private emit(reason: ChangeReason): void {
    for (const fn of [...this.listeners]) fn(this.view, reason);
  }

  get commandLog(): readonly StepCommand[] {
    return this.log;
  }

  /** Acknowledged commands as JSON, the replay file format. */
  exportCommandLog(): string {
    return JSON.stringify(this.log, null, 1) + "\n";
  }

  controlsDisabled(): boolean {
    return this.view.banner !== null || this.view.sessionId === null;
  }

  async start(
    scene: string,
    opts: { prime?: boolean; fieldMT?: number; fieldAngleDeg?: number; design?: string } = {},
  ): Promise<void> {
    const req: CreateSessionRequest = { scene };
    if (opts.prime !== undefined) req.prime = opts.prime;
    if (opts.fieldMT !== undefined) req.field_mT = opts.fieldMT;
    if (opts.fieldAngleDeg !== undefined) req.field_angle_deg = opts.fieldAngleDeg;
    if (opts.design !== undefined) req.design = opts.design;
    let created: SessionCreated;
    try {
      created = await this.client.createSession(req);
    } catch (err) {
      if (!(err instanceof ApiError)) {
        this.view.banner = "server unreachable";
        this.emit("banner");
      }
      throw err;
    }
    this.view.sessionId = created.id;
    this.view.scene = created.scene;
    this.view.ballDiameterMm = created.ball_diameter_mm;
    this.view.state = created.state;
    this.view.stepSizeMm = created.ball_diameter_mm;
    this.view.banner = null;
    this.view.error = null;
    this.log.length = 0;
    // priming is a server-side advance of one diameter; mirror it in the
    // log so a replay feeds the same ball
    if (opts.prime !== false) this.log.push({ advance_mm: created.ball_diameter_mm });
    this.emit("session");
  }

  /** Issue one command. While a command is in flight the newest caller
   * waits in the single queue slot; anything it displaces is dropped. */
  dispatch(command: StepCommand): Promise<StepOutcome> {
    if (this.view.sessionId === null) {
      return Promise.reject(new Error("no active session"));
    }
    if (this.inFlight) {
      if (this.pending !== null) this.pending.resolve({ status: "dropped" });
      return new Promise((resolve) => {
        this.pending = { command, resolve };
      });
    }
    return this.send(command);
  }

  private async send(command: StepCommand): Promise<StepOutcome> {
    this.inFlight = true;
    this.view.busy = true;
    this.emit("busy");
    let outcome: StepOutcome;
    try {
      const state = await this.client.step(this.view.sessionId as string, command);
      this.view.state = state;
      this.view.error = null;
      this.view.flash = null;
      this.log.push(structuredClone(command));
      outcome = { status: "ok", state };
    } catch (err) {
      if (err instanceof ApiError) {
        const failed: FailedCommand = {
          status: err.status,
          detail: err.detail,
          command,
        };
        if (err.status === 409) {
          // another writer holds the session; notify and move on
          this.view.flash = "busy";
        } else {
          this.view.error = failed;
        }
        outcome = { status: "rejected", error: failed };
      } else {
        this.view.banner = "server unreachable";
        outcome = { status: "unreachable" };
      }
    }
    this.inFlight = false;
    this.view.busy = false;
    if (outcome.status === "ok") this.emit("state");
    else if (outcome.status === "unreachable") this.emit("banner");
    else if (this.view.flash !== null) this.emit("flash");
    else this.emit("error");
    const next = this.pending;
    if (next !== null) {
      this.pending = null;
      this.send(next.command).then(next.resolve);
    }
    return outcome;
  }

  /** Re-issue the last failed command. */
  retry(): Promise<StepOutcome> {
    const failed = this.view.error;
    if (failed === null) return Promise.reject(new Error("nothing to retry"));
    this.view.error = null;
    return this.dispatch(failed.command);
  }

  clearFlash(): void {
    if (this.view.flash !== null) {
      this.view.flash = null;
      this.emit("flash");
    }
  }

  // -- control events ----------------------------------------------------------

  setStepSize(mm: number): void {
    this.view.stepSizeMm = mm;
  }

  advance(): Promise<StepOutcome> {
    return this.dispatch({ advance_mm: this.view.stepSizeMm });
  }

  retract(): Promise<StepOutcome> {
    return this.dispatch({ retract_mm: this.view.stepSizeMm });
  }

  setFieldAngle(deg: number): Promise<StepOutcome> {
    return this.dispatch({ field_angle_deg: deg });
  }

  setFieldMagnitude(mT: number): Promise<StepOutcome> {
    return this.dispatch({ field_mT: mT });
  }

  applyField(mT: number, angleDeg: number): Promise<StepOutcome> {
    return this.dispatch({ field_mT: mT, field_angle_deg: angleDeg });
  }

  setMagnetPsi(psiDeg: number, momentSign: 1 | -1): Promise<StepOutcome> {
    return this.dispatch({ magnet: magnetPoseFromPsi(psiDeg, momentSign) });
  }

  fetchSessionLog(): Promise<string> {
    if (this.view.sessionId === null) return Promise.reject(new Error("no active session"));
    return this.client.sessionLog(this.view.sessionId);
  }

  async end(): Promise<void> {
    if (this.view.sessionId === null) return;
    await this.client.deleteSession(this.view.sessionId);
    this.view.sessionId = null;
    this.view.state = null;
    this.view.scene = null;
    this.emit("session");
  }
}
