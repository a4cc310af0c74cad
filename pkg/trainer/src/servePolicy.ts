/** Line-JSON decision server so the bench harness can call a trained policy. */
import * as net from "node:net";

import { ActorCritic, policyStep } from "./model.js";
import { greedyMasked } from "./ppo.js";

export interface PolicyServer {
  host: string;
  port: number;
  close: () => Promise<void>;
}

function decide(ac: ActorCritic, obsWidth: number, msg: unknown): number {
  if (typeof msg !== "object" || msg === null) return -1;
  const m = msg as Record<string, unknown>;
  if (m.cmd !== "decide" || !Array.isArray(m.obs) || !Array.isArray(m.mask)) return -1;
  const obs = m.obs as number[];
  const mask = m.mask as number[];
  if (obs.length !== obsWidth || obs.some((v) => typeof v !== "number")) return -1;
  if (mask.every((v) => !v)) return -1;
  const { logits } = policyStep(ac, obs);
  return greedyMasked(logits, mask);
}

export function servePolicy(
  ac: ActorCritic,
  obsWidth: number,
  host: string,
  port: number,
): Promise<PolicyServer> {
  const server = net.createServer((socket) => {
    socket.setEncoding("utf8");
    let buffer = "";
    socket.on("data", (chunk: string) => {
      buffer += chunk;
      let nl: number;
      while ((nl = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, nl).trim();
        buffer = buffer.slice(nl + 1);
        if (!line) continue;
        let slot = -1;
        try {
          slot = decide(ac, obsWidth, JSON.parse(line));
        } catch {
          slot = -1;
        }
        socket.write(JSON.stringify({ slot }) + "\n");
      }
    });
    socket.on("error", () => socket.destroy());
  });
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(port, host, () => {
      const addr = server.address() as net.AddressInfo;
      resolve({
        host: addr.address,
        port: addr.port,
        close: () =>
          new Promise<void>((res) => {
            server.close(() => res());
          }),
      });
    });
  });
}
