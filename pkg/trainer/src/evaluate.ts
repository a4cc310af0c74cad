/** Greedy policy rollouts over named patterns, reported in the bench CSV layout. */
import { BridgeClient, EpisodeStatsWire } from "./bridgeClient.js";
import { ActorCritic, policyStep } from "./model.js";
import { greedyMasked } from "./ppo.js";

export interface EvalRow {
  controller: string;
  pattern: string;
  metric: string;
  value: number;
}

export interface EpisodeOutcome {
  pattern: string;
  stats: EpisodeStatsWire;
  totalReward: number;
  steps: number;
}

export async function rolloutGreedy(
  ac: ActorCritic,
  client: BridgeClient,
  pattern: string,
  seed: number | undefined,
  expectedObsWidth: number,
): Promise<EpisodeOutcome> {
  let step = await client.reset(pattern, seed);
  if (step.obs.length !== expectedObsWidth) {
    throw new Error(
      `bridge observation width ${step.obs.length} does not match the ` +
        `checkpoint's ${expectedObsWidth}`,
    );
  }
  let totalReward = step.reward;
  let steps = 0;
  while (!step.done) {
    const { logits } = policyStep(ac, step.obs);
    const slot = greedyMasked(logits, step.mask);
    step = await client.act(slot);
    totalReward += step.reward;
    steps += 1;
  }
  const stats = step.info.stats;
  if (!stats) {
    throw new Error("terminal step carried no episode stats");
  }
  return { pattern, stats, totalReward, steps };
}

export function outcomeToRows(controller: string, outcome: EpisodeOutcome): EvalRow[] {
  const s = outcome.stats;
  const pickedPct = s.n_total > 0 ? (100.0 * s.n_picked) / s.n_total : 100.0;
  return [
    { controller, pattern: outcome.pattern, metric: "picked_pct", value: pickedPct },
    { controller, pattern: outcome.pattern, metric: "completion_s", value: s.completion_time },
    { controller, pattern: outcome.pattern, metric: "picks_per_min", value: s.picks_per_minute },
  ];
}

export function rowsToCsv(rows: EvalRow[]): string {
  const header = "controller,pattern,metric,value";
  const lines = rows.map((r) => [r.controller, r.pattern, r.metric, String(r.value)].join(","));
  return [header, ...lines].join("\n") + "\n";
}

export async function evaluatePatterns(
  ac: ActorCritic,
  client: BridgeClient,
  controller: string,
  patterns: string[],
  seed: number | undefined,
  expectedObsWidth: number,
): Promise<{ rows: EvalRow[]; outcomes: EpisodeOutcome[] }> {
  const rows: EvalRow[] = [];
  const outcomes: EpisodeOutcome[] = [];
  for (const pattern of patterns) {
    const outcome = await rolloutGreedy(ac, client, pattern, seed, expectedObsWidth);
    outcomes.push(outcome);
    rows.push(...outcomeToRows(controller, outcome));
  }
  return { rows, outcomes };
}
