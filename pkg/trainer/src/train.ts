/** Rollout collection and the update loop, from first reset to checkpoint. */
import * as fs from "node:fs";
import * as path from "node:path";

import { BridgeClient, Step } from "./bridgeClient.js";
import { TrainerConfig, expectedObsWidth } from "./config.js";
import { stageAt } from "./curriculum.js";
import {
  ActorCritic,
  Checkpoint,
  buildActorCritic,
  fromCheckpoint,
  policyStep,
  toCheckpoint,
} from "./model.js";
import { PPO, RolloutBatch, computeGae, sampleMasked } from "./ppo.js";
import { mulberry32 } from "./rng.js";

export class ObsWidthMismatchError extends Error {
  constructor(expected: number, got: number) {
    super(`bridge observation width ${got} does not match the configured ${expected}`);
    this.name = "ObsWidthMismatchError";
  }
}

export interface CurveRow {
  update: number;
  envSteps: number;
  stage: string;
  meanReturn: number;
  episodes: number;
  policyLoss: number;
  valueLoss: number;
  entropy: number;
}

export interface TrainResult {
  checkpoint: Checkpoint;
  curve: CurveRow[];
}

export interface TrainOptions {
  checkpointPath?: string;
  curvePath?: string;
  resumeFrom?: Checkpoint;
  log?: (line: string) => void;
}

interface EpisodeCursor {
  step: Step;
  ret: number;
  episodeIndex: number;
}

export function curveToCsv(rows: CurveRow[]): string {
  const header = "update,env_steps,stage,mean_return,episodes,policy_loss,value_loss,entropy";
  const lines = rows.map((r) =>
    [
      r.update,
      r.envSteps,
      r.stage,
      r.meanReturn,
      r.episodes,
      r.policyLoss,
      r.valueLoss,
      r.entropy,
    ].join(","),
  );
  return [header, ...lines].join("\n") + "\n";
}

export async function train(
  cfg: TrainerConfig,
  client: BridgeClient,
  opts: TrainOptions = {},
): Promise<TrainResult> {
  const log = opts.log ?? (() => undefined);
  const expected = expectedObsWidth(cfg);

  let ac: ActorCritic;
  let startSteps = 0;
  if (opts.resumeFrom) {
    ac = fromCheckpoint(opts.resumeFrom, cfg.actionSlots);
    startSteps = opts.resumeFrom.sidecar.trainedSteps;
    log(`resumed at ${startSteps} steps`);
  } else {
    ac = buildActorCritic(expected, cfg.actionSlots, cfg.seed);
  }
  const ppo = new PPO(ac, {
    clipRatio: cfg.clipRatio,
    learningRate: cfg.learningRate,
    epochs: cfg.epochs,
    batchSize: cfg.batchSize,
    entropyCoef: cfg.entropyCoef,
    valueCoef: cfg.valueCoef,
  });
  const rng = mulberry32(cfg.seed * 9187 + 17);

  let episodeIndex = 0;
  const startEpisode = async (envSteps: number): Promise<EpisodeCursor> => {
    const stage = stageAt(cfg.curriculum, envSteps, cfg.totalSteps);
    const pattern = stage.patterns[episodeIndex % stage.patterns.length];
    const seed = cfg.seed * 100_003 + episodeIndex;
    episodeIndex += 1;
    const step = await client.reset(pattern, seed);
    if (step.obs.length !== expected) {
      throw new ObsWidthMismatchError(expected, step.obs.length);
    }
    return { step, ret: step.reward, episodeIndex: episodeIndex - 1 };
  };

  const curve: CurveRow[] = [];
  let envSteps = startSteps;
  let cursor = await startEpisode(envSteps);
  let update = 0;
  while (envSteps - startSteps < cfg.totalSteps) {
    const obs: number[][] = [];
    const masks: number[][] = [];
    const actions: number[] = [];
    const logProbs: number[] = [];
    const rewards: number[] = [];
    const values: number[] = [];
    const dones: boolean[] = [];
    const episodeReturns: number[] = [];

    while (obs.length < cfg.stepsPerUpdate) {
      if (cursor.step.done) {
        episodeReturns.push(cursor.ret);
        cursor = await startEpisode(envSteps);
        continue;
      }
      const { logits, value } = policyStep(ac, cursor.step.obs);
      const slot = sampleMasked(logits, cursor.step.mask, rng);
      const masked = Array.from(cursor.step.mask);
      obs.push(cursor.step.obs);
      masks.push(masked);
      actions.push(slot);
      values.push(value);
      logProbs.push(logProbFromSample(logits, masked, slot));

      const next = await client.act(slot);
      rewards.push(next.reward);
      dones.push(next.done);
      cursor.step = next;
      cursor.ret += next.reward;
      envSteps += 1;
    }

    let lastValue = 0;
    if (!cursor.step.done) {
      lastValue = policyStep(ac, cursor.step.obs).value;
    }
    const { advantages, returns } = computeGae(
      rewards,
      values,
      dones,
      lastValue,
      cfg.gamma,
      cfg.gaeLambda,
    );
    const batch: RolloutBatch = { obs, actions, masks, logProbs, advantages, returns };
    const metrics = ppo.update(batch, rng);

    update += 1;
    const stage = stageAt(cfg.curriculum, envSteps, cfg.totalSteps);
    const meanReturn =
      episodeReturns.length > 0
        ? episodeReturns.reduce((a, b) => a + b, 0) / episodeReturns.length
        : NaN;
    const row: CurveRow = {
      update,
      envSteps: envSteps - startSteps,
      stage: stage.name,
      meanReturn,
      episodes: episodeReturns.length,
      policyLoss: metrics.policyLoss,
      valueLoss: metrics.valueLoss,
      entropy: metrics.entropy,
    };
    curve.push(row);
    log(
      `update ${row.update}: steps=${row.envSteps} stage=${row.stage} ` +
        `return=${Number.isNaN(row.meanReturn) ? "n/a" : row.meanReturn.toFixed(3)} ` +
        `episodes=${row.episodes}`,
    );

    const checkpoint = toCheckpoint(ac, {
      obsWidth: expected,
      actionSlots: cfg.actionSlots,
      nRobots: cfg.nRobots,
      gamma: cfg.gamma,
      trainedSteps: envSteps,
      seed: cfg.seed,
      stage: stage.name,
    });
    if (opts.checkpointPath) {
      writeJsonAtomic(opts.checkpointPath, checkpoint);
    }
    if (opts.curvePath) {
      fs.writeFileSync(opts.curvePath, curveToCsv(curve));
    }
  }

  const finalStage = stageAt(cfg.curriculum, envSteps, cfg.totalSteps);
  const checkpoint = toCheckpoint(ac, {
    obsWidth: expected,
    actionSlots: cfg.actionSlots,
    nRobots: cfg.nRobots,
    gamma: cfg.gamma,
    trainedSteps: envSteps,
    seed: cfg.seed,
    stage: finalStage.name,
  });
  return { checkpoint, curve };
}

function logProbFromSample(logits: Float32Array, mask: number[], action: number): number {
  // recomputed here instead of importing to keep the hot path allocation-free
  let max = -Infinity;
  for (let i = 0; i < logits.length; i++) {
    const v = mask[i] ? logits[i] : -1e9;
    if (v > max) max = v;
  }
  let sum = 0;
  for (let i = 0; i < logits.length; i++) {
    const v = mask[i] ? logits[i] : -1e9;
    sum += Math.exp(v - max);
  }
  const chosen = mask[action] ? logits[action] : -1e9;
  return chosen - max - Math.log(sum);
}

export function writeJsonAtomic(filePath: string, value: unknown): void {
  const tmp = path.join(
    path.dirname(filePath),
    `.${path.basename(filePath)}.tmp-${process.pid}`,
  );
  fs.writeFileSync(tmp, JSON.stringify(value));
  fs.renameSync(tmp, filePath);
}
