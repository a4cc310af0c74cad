import * as fs from "node:fs";

import { Stage, defaultCurriculum, validateCurriculum } from "./curriculum.js";
import { obsWidth } from "./bridgeClient.js";

export interface TrainerConfig {
  totalSteps: number;
  stepsPerUpdate: number;
  batchSize: number;
  /** Discount for the long-horizon picking return. */
  gamma: number;
  gaeLambda: number;
  clipRatio: number;
  learningRate: number;
  /** Gradient passes over each rollout. */
  epochs: number;
  entropyCoef: number;
  valueCoef: number;
  /** Environment geometry the bridge is expected to expose. */
  actionSlots: number;
  nRobots: number;
  curriculum: Stage[];
  /** Held-out named patterns; never fed to the curriculum. */
  evalPatterns: string[];
  seed: number;
}

export function defaultTrainerConfig(): TrainerConfig {
  return {
    totalSteps: 300_000,
    stepsPerUpdate: 2048,
    batchSize: 64,
    gamma: 0.9995,
    gaeLambda: 0.95,
    clipRatio: 0.2,
    learningRate: 3e-4,
    epochs: 10,
    entropyCoef: 0.0,
    valueCoef: 0.5,
    actionSlots: 10,
    nRobots: 2,
    curriculum: defaultCurriculum(),
    evalPatterns: ["grid-s0.15", "grid-s0.3", "poisson-r0.2", "poisson-r0.3"],
    seed: 0,
  };
}

export function validateTrainerConfig(cfg: TrainerConfig): TrainerConfig {
  if (!(cfg.gamma > 0 && cfg.gamma < 1)) {
    throw new Error(`gamma must be in (0, 1), got ${cfg.gamma}`);
  }
  if (cfg.stepsPerUpdate % cfg.batchSize !== 0) {
    throw new Error(
      `stepsPerUpdate ${cfg.stepsPerUpdate} must be divisible by batchSize ${cfg.batchSize}`,
    );
  }
  if (cfg.totalSteps < cfg.stepsPerUpdate) {
    throw new Error("totalSteps must cover at least one update");
  }
  if (cfg.actionSlots < 1 || cfg.nRobots < 1) {
    throw new Error("actionSlots and nRobots must be >= 1");
  }
  if (!(cfg.gaeLambda >= 0 && cfg.gaeLambda <= 1)) {
    throw new Error(`gaeLambda must be in [0, 1], got ${cfg.gaeLambda}`);
  }
  validateCurriculum(cfg.curriculum);
  return cfg;
}

export function expectedObsWidth(cfg: TrainerConfig): number {
  return obsWidth(cfg.actionSlots, cfg.nRobots);
}

/** Load a config file; missing fields fall back to the defaults. */
export function loadTrainerConfig(path: string): TrainerConfig {
  const raw = JSON.parse(fs.readFileSync(path, "utf8"));
  const cfg = { ...defaultTrainerConfig(), ...raw };
  return validateTrainerConfig(cfg);
}
