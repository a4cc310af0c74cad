#!/usr/bin/env node
import * as fs from "node:fs";

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { BridgeClient } from "./bridgeClient.js";
import { defaultTrainerConfig, expectedObsWidth, loadTrainerConfig, validateTrainerConfig } from "./config.js";
import { evaluatePatterns, rowsToCsv } from "./evaluate.js";
import { Checkpoint, fromCheckpoint } from "./model.js";
import { servePolicy } from "./servePolicy.js";
import { curveToCsv, train, writeJsonAtomic } from "./train.js";

function parseBridge(text: string): { host: string; port: number } {
  const idx = text.lastIndexOf(":");
  if (idx <= 0) throw new Error(`--bridge needs host:port, got ${JSON.stringify(text)}`);
  const host = text.slice(0, idx);
  const port = Number(text.slice(idx + 1));
  if (!Number.isInteger(port) || port < 0 || port > 65535) {
    throw new Error(`bad bridge port in ${JSON.stringify(text)}`);
  }
  return { host, port };
}

function readCheckpoint(path: string): Checkpoint {
  return JSON.parse(fs.readFileSync(path, "utf8")) as Checkpoint;
}

async function cmdTrain(argv: {
  bridge: string;
  config?: string;
  checkpoint: string;
  curve?: string;
  resume?: string;
  totalSteps?: number;
  seed?: number;
}): Promise<void> {
  let cfg = argv.config ? loadTrainerConfig(argv.config) : defaultTrainerConfig();
  if (argv.totalSteps !== undefined) cfg = { ...cfg, totalSteps: argv.totalSteps };
  if (argv.seed !== undefined) cfg = { ...cfg, seed: argv.seed };
  validateTrainerConfig(cfg);

  const { host, port } = parseBridge(argv.bridge);
  const client = await BridgeClient.connect(host, port);
  try {
    const resumeFrom = argv.resume ? readCheckpoint(argv.resume) : undefined;
    const result = await train(cfg, client, {
      checkpointPath: argv.checkpoint,
      curvePath: argv.curve,
      resumeFrom,
      log: (line) => process.stderr.write(line + "\n"),
    });
    writeJsonAtomic(argv.checkpoint, result.checkpoint);
    if (argv.curve) fs.writeFileSync(argv.curve, curveToCsv(result.curve));
    process.stderr.write(
      `done: ${result.checkpoint.sidecar.trainedSteps} env steps, ` +
        `${result.curve.length} updates, checkpoint at ${argv.checkpoint}\n`,
    );
  } finally {
    await client.close();
  }
}

async function cmdEvaluate(argv: {
  bridge: string;
  checkpoint: string;
  patterns?: string;
  out?: string;
  seed?: number;
  name?: string;
}): Promise<void> {
  const ckpt = readCheckpoint(argv.checkpoint);
  const ac = fromCheckpoint(ckpt, ckpt.sidecar.actionSlots);
  const patterns = (argv.patterns ?? "grid-s0.15,grid-s0.3,poisson-r0.2,poisson-r0.3")
    .split(",")
    .map((p) => p.trim())
    .filter((p) => p.length > 0);
  const controller = argv.name ?? "ppo";

  const { host, port } = parseBridge(argv.bridge);
  const client = await BridgeClient.connect(host, port);
  try {
    const { rows } = await evaluatePatterns(
      ac,
      client,
      controller,
      patterns,
      argv.seed,
      ckpt.sidecar.obsWidth,
    );
    const csv = rowsToCsv(rows);
    if (argv.out) {
      fs.writeFileSync(argv.out, csv);
      process.stderr.write(`wrote ${rows.length} rows to ${argv.out}\n`);
    } else {
      process.stdout.write(csv);
    }
  } finally {
    await client.close();
  }
}

async function cmdServe(argv: { checkpoint: string; host: string; port: number }): Promise<void> {
  const ckpt = readCheckpoint(argv.checkpoint);
  const ac = fromCheckpoint(ckpt, ckpt.sidecar.actionSlots);
  const server = await servePolicy(ac, ckpt.sidecar.obsWidth, argv.host, argv.port);
  // the bench side parses this line to find the ephemeral port
  process.stderr.write(`policy server on ${server.host}:${server.port}\n`);
  await new Promise(() => undefined); // runs until killed
}

export async function main(args: string[]): Promise<void> {
  await yargs(args)
    .scriptName("beltsort-trainer")
    .command(
      "train",
      "train a picking policy against a running bridge",
      (y) =>
        y
          .option("bridge", { type: "string", demandOption: true, describe: "bridge host:port" })
          .option("config", { type: "string", describe: "trainer config JSON" })
          .option("checkpoint", {
            type: "string",
            default: "checkpoint.json",
            describe: "where to write the model checkpoint",
          })
          .option("curve", { type: "string", describe: "training curve CSV path" })
          .option("resume", { type: "string", describe: "checkpoint to continue from" })
          .option("total-steps", { type: "number", describe: "override configured env steps" })
          .option("seed", { type: "number", describe: "override configured seed" }),
      (argv) => cmdTrain(argv as never),
    )
    .command(
      "evaluate",
      "greedy rollouts on named patterns, bench-style CSV out",
      (y) =>
        y
          .option("bridge", { type: "string", demandOption: true, describe: "bridge host:port" })
          .option("checkpoint", { type: "string", demandOption: true })
          .option("patterns", { type: "string", describe: "comma-separated pattern names" })
          .option("out", { type: "string", describe: "CSV output path (default stdout)" })
          .option("seed", { type: "number", describe: "override pattern seeds" })
          .option("name", { type: "string", describe: "controller column value" }),
      (argv) => cmdEvaluate(argv as never),
    )
    .command(
      "serve",
      "answer bench decide requests with a trained policy",
      (y) =>
        y
          .option("checkpoint", { type: "string", demandOption: true })
          .option("host", { type: "string", default: "127.0.0.1" })
          .option("port", { type: "number", default: 0 }),
      (argv) => cmdServe(argv as never),
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      process.stderr.write(`${msg ?? err?.message ?? "unknown error"}\n`);
      process.exit(2);
    })
    .parseAsync();
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === `file://${process.argv[1]}`;
if (invokedDirectly) {
  main(hideBin(process.argv)).catch((err) => {
    process.stderr.write(`${err instanceof Error ? err.message : String(err)}\n`);
    process.exit(1);
  });
}
