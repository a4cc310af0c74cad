/**
 * Clipped-surrogate policy optimization over masked discrete actions.
 *
 * Invalid candidate slots are excluded from the distribution by pushing their
 * logits to -1e9 before the softmax, so they carry zero probability mass and
 * are never sampled while at least one valid slot exists.
 */
import * as tf from "@tensorflow/tfjs";

import { ActorCritic } from "./model.js";
import { PRNG, shuffled } from "./rng.js";

const MASK_PENALTY = 1e9;

export function maskLogitsRow(logits: Float32Array, mask: number[]): Float32Array {
  const out = Float32Array.from(logits);
  for (let i = 0; i < out.length; i++) {
    if (!mask[i]) out[i] = -MASK_PENALTY;
  }
  return out;
}

function softmaxRow(logits: Float32Array): Float32Array {
  let max = -Infinity;
  for (const v of logits) max = Math.max(max, v);
  const exps = new Float32Array(logits.length);
  let sum = 0;
  for (let i = 0; i < logits.length; i++) {
    exps[i] = Math.exp(logits[i] - max);
    sum += exps[i];
  }
  for (let i = 0; i < exps.length; i++) exps[i] /= sum;
  return exps;
}

export function sampleMasked(logits: Float32Array, mask: number[], rng: PRNG): number {
  if (!mask.some((m) => m !== 0)) {
    throw new Error("cannot sample: every slot is masked");
  }
  const probs = softmaxRow(maskLogitsRow(logits, mask));
  let u = rng();
  let last = 0;
  for (let i = 0; i < probs.length; i++) {
    if (!mask[i]) continue;
    last = i;
    u -= probs[i];
    if (u <= 0) return i;
  }
  return last; // numerical leftovers land on the final valid slot
}

export function greedyMasked(logits: Float32Array, mask: number[]): number {
  let best = -1;
  let bestLogit = -Infinity;
  for (let i = 0; i < logits.length; i++) {
    if (!mask[i]) continue;
    if (logits[i] > bestLogit) {
      best = i;
      bestLogit = logits[i];
    }
  }
  if (best < 0) {
    throw new Error("cannot act greedily: every slot is masked");
  }
  return best;
}

export function logProbMasked(logits: Float32Array, mask: number[], action: number): number {
  const masked = maskLogitsRow(logits, mask);
  let max = -Infinity;
  for (const v of masked) max = Math.max(max, v);
  let sum = 0;
  for (const v of masked) sum += Math.exp(v - max);
  return masked[action] - max - Math.log(sum);
}

/** Generalized advantage estimation over one rollout segment. */
export function computeGae(
  rewards: number[],
  values: number[],
  dones: boolean[],
  lastValue: number,
  gamma: number,
  lambda: number,
): { advantages: Float32Array; returns: Float32Array } {
  const n = rewards.length;
  const advantages = new Float32Array(n);
  const returns = new Float32Array(n);
  let gae = 0;
  for (let t = n - 1; t >= 0; t--) {
    const nextValue = dones[t] ? 0 : t === n - 1 ? lastValue : values[t + 1];
    const nonTerminal = dones[t] ? 0 : 1;
    const delta = rewards[t] + gamma * nextValue - values[t];
    gae = delta + gamma * lambda * nonTerminal * gae;
    advantages[t] = gae;
    returns[t] = gae + values[t];
  }
  return { advantages, returns };
}

export interface RolloutBatch {
  obs: number[][];
  actions: number[];
  masks: number[][];
  logProbs: number[];
  advantages: Float32Array;
  returns: Float32Array;
}

export interface UpdateMetrics {
  policyLoss: number;
  valueLoss: number;
  entropy: number;
  clipFraction: number;
}

export interface PPOParams {
  clipRatio: number;
  learningRate: number;
  epochs: number;
  batchSize: number;
  entropyCoef: number;
  valueCoef: number;
}

export class PPO {
  private readonly optimizer: tf.Optimizer;

  constructor(
    private readonly ac: ActorCritic,
    private readonly params: PPOParams,
  ) {
    this.optimizer = tf.train.adam(params.learningRate);
  }

  /** One full pass of minibatch gradient updates over a rollout. */
  update(batch: RolloutBatch, rng: PRNG): UpdateMetrics {
    const n = batch.actions.length;
    const { batchSize, epochs } = this.params;

    // advantage normalization stabilizes the tiny-batch desk runs
    const adv = Float32Array.from(batch.advantages);
    let mean = 0;
    for (const a of adv) mean += a / n;
    let variance = 0;
    for (const a of adv) variance += ((a - mean) * (a - mean)) / n;
    const std = Math.sqrt(variance) + 1e-8;
    for (let i = 0; i < n; i++) adv[i] = (adv[i] - mean) / std;

    const metrics = { policyLoss: 0, valueLoss: 0, entropy: 0, clipFraction: 0 };
    let nBatches = 0;
    for (let epoch = 0; epoch < epochs; epoch++) {
      const order = shuffled(n, rng);
      for (let start = 0; start < n; start += batchSize) {
        const idx = order.slice(start, start + batchSize);
        const m = this.minibatchStep(batch, adv, idx);
        metrics.policyLoss += m.policyLoss;
        metrics.valueLoss += m.valueLoss;
        metrics.entropy += m.entropy;
        metrics.clipFraction += m.clipFraction;
        nBatches++;
      }
    }
    metrics.policyLoss /= nBatches;
    metrics.valueLoss /= nBatches;
    metrics.entropy /= nBatches;
    metrics.clipFraction /= nBatches;
    return metrics;
  }

  private minibatchStep(
    batch: RolloutBatch,
    normAdv: Float32Array,
    idx: number[],
  ): UpdateMetrics {
    const { clipRatio, entropyCoef, valueCoef } = this.params;
    const b = idx.length;
    const obs = tf.tensor2d(
      idx.map((i) => batch.obs[i]),
      [b, this.ac.obsDim],
    );
    const maskPenalty = tf.tensor2d(
      idx.map((i) => batch.masks[i].map((m) => (m ? 0 : -MASK_PENALTY))),
      [b, this.ac.nActions],
    );
    const actions = tf.tensor1d(idx.map((i) => batch.actions[i]), "int32");
    const oldLogProbs = tf.tensor1d(idx.map((i) => batch.logProbs[i]));
    const advantages = tf.tensor1d(idx.map((i) => normAdv[i]));
    const returns = tf.tensor1d(idx.map((i) => batch.returns[i]));

    let policyLoss = 0;
    let valueLoss = 0;
    let entropy = 0;
    let clipFraction = 0;

    // LayerVariable.val is typed protected but is the only route to the
    // underlying tf.Variable that minimize() can update
    const toVars = (weights: unknown[]) =>
      weights.map((w) => (w as { val: tf.Variable }).val);
    const vars = [
      ...toVars(this.ac.actor.trainableWeights),
      ...toVars(this.ac.critic.trainableWeights),
    ];
    this.optimizer.minimize(
      () =>
        tf.tidy(() => {
          const logits = tf.add(this.ac.actor.apply(obs) as tf.Tensor2D, maskPenalty);
          const logProbsAll = tf.logSoftmax(logits);
          const actionMask = tf.oneHot(actions, this.ac.nActions);
          const logProbs = tf.sum(tf.mul(logProbsAll, actionMask), 1);
          const ratio = tf.exp(tf.sub(logProbs, oldLogProbs));
          const clipped = tf.clipByValue(ratio, 1 - clipRatio, 1 + clipRatio);
          const surrogate = tf.neg(
            tf.mean(tf.minimum(tf.mul(ratio, advantages), tf.mul(clipped, advantages))),
          );

          const probs = tf.softmax(logits);
          const entropyT = tf.neg(tf.mean(tf.sum(tf.mul(probs, logProbsAll), 1)));

          const values = tf.squeeze(this.ac.critic.apply(obs) as tf.Tensor2D, [1]);
          const vLoss = tf.mean(tf.square(tf.sub(values, returns)));

          policyLoss = surrogate.dataSync()[0];
          valueLoss = vLoss.dataSync()[0];
          entropy = entropyT.dataSync()[0];
          clipFraction = tf
            .mean(tf.cast(tf.greater(tf.abs(tf.sub(ratio, 1)), clipRatio), "float32"))
            .dataSync()[0];

          return tf.add(
            tf.sub(surrogate, tf.mul(entropyT, entropyCoef)),
            tf.mul(vLoss, valueCoef),
          ) as tf.Scalar;
        }),
      false,
      vars,
    );

    obs.dispose();
    maskPenalty.dispose();
    actions.dispose();
    oldLogProbs.dispose();
    advantages.dispose();
    returns.dispose();
    return { policyLoss, valueLoss, entropy, clipFraction };
  }
}
