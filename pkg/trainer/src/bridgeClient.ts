/**
 * JSON-lines TCP client for the simulator bridge.
 *
 * The wire protocol is strictly serial: one request line out, one reply line
 * back, in order.  Requests are queued so callers can fire-and-await without
 * worrying about interleaving.
 */
import * as net from "node:net";

export interface EpisodeStatsWire {
  n_total: number;
  n_picked: number;
  n_missed: number;
  completion_time: number;
  picks_per_minute: number;
  reward_weighted_rate: number;
  total_return: number;
  reward_sum_picked: number;
  reward_sum_total: number;
}

export interface StepInfo {
  sim_time: number;
  deciding_robot: number;
  n_picked: number;
  n_missed: number;
  noop?: boolean;
  stats?: EpisodeStatsWire;
}

export interface Step {
  obs: number[];
  mask: number[];
  reward: number;
  done: boolean;
  info: StepInfo;
}

export type PatternRef = string | Record<string, unknown>;

export class BridgeProtocolError extends Error {
  constructor(
    public readonly code: string,
    detail?: string,
  ) {
    super(detail ? `${code}: ${detail}` : code);
    this.name = "BridgeProtocolError";
  }
}

interface Pending {
  resolve: (reply: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

export function obsWidth(actionSlots: number, nRobots: number): number {
  // 4 features per candidate slot, 2 per robot, plus the mask echoed as floats
  return 5 * actionSlots + 2 * nRobots;
}

export class BridgeClient {
  private buffer = "";
  private pending: Pending[] = [];
  private closed = false;

  private constructor(private readonly socket: net.Socket) {
    socket.setEncoding("utf8");
    socket.on("data", (chunk: string) => this.onData(chunk));
    socket.on("error", (err) => this.failAll(err));
    socket.on("close", () => {
      if (!this.closed) {
        this.failAll(new Error("bridge connection closed unexpectedly"));
      }
    });
  }

  static connect(host: string, port: number): Promise<BridgeClient> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      socket.once("connect", () => {
        socket.removeListener("error", reject);
        resolve(new BridgeClient(socket));
      });
      socket.once("error", reject);
    });
  }

  private onData(chunk: string): void {
    this.buffer += chunk;
    let nl: number;
    while ((nl = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, nl).trim();
      this.buffer = this.buffer.slice(nl + 1);
      if (!line) continue;
      const waiter = this.pending.shift();
      if (waiter === undefined) continue; // unsolicited line; drop
      let reply: Record<string, unknown>;
      try {
        reply = JSON.parse(line);
      } catch {
        waiter.reject(new BridgeProtocolError("parse", line.slice(0, 80)));
        continue;
      }
      if (typeof reply.error === "string") {
        waiter.reject(
          new BridgeProtocolError(reply.error, reply.detail as string | undefined),
        );
      } else {
        waiter.resolve(reply);
      }
    }
  }

  private failAll(err: Error): void {
    const waiting = this.pending;
    this.pending = [];
    for (const w of waiting) w.reject(err);
  }

  request(msg: Record<string, unknown>): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new Error("client is closed"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.socket.write(JSON.stringify(msg) + "\n");
    });
  }

  async reset(pattern: PatternRef, seed?: number): Promise<Step> {
    const msg: Record<string, unknown> = { cmd: "reset", pattern };
    if (seed !== undefined) msg.seed = seed;
    const reply = await this.request(msg);
    return reply as unknown as Step;
  }

  async act(slot: number): Promise<Step> {
    const reply = await this.request({ cmd: "act", slot });
    return reply as unknown as Step;
  }

  async close(): Promise<void> {
    if (this.closed) return;
    const goodbye = this.request({ cmd: "close" }).catch(() => undefined);
    this.closed = true; // new requests are refused while the goodbye is in flight
    const patience = new Promise<void>((resolve) => {
      const t = setTimeout(resolve, 1000);
      t.unref();
    });
    // the server may hang up first or never answer; closing is best-effort
    await Promise.race([goodbye, patience]);
    this.socket.end();
    this.socket.destroy();
    this.failAll(new Error("client is closed"));
  }
}
