/** Actor-critic pair: two small MLPs over the flat bridge observation. */
import * as tf from "@tensorflow/tfjs";

export interface ActorCritic {
  actor: tf.LayersModel;
  critic: tf.LayersModel;
  obsDim: number;
  nActions: number;
}

const HIDDEN = [64, 64];

function mlp(obsDim: number, outDim: number, seed: number): tf.LayersModel {
  const model = tf.sequential();
  let first = true;
  for (const units of HIDDEN) {
    model.add(
      tf.layers.dense({
        units,
        activation: "tanh",
        inputShape: first ? [obsDim] : undefined,
        kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }),
      }),
    );
    first = false;
  }
  model.add(
    tf.layers.dense({
      units: outDim,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed++ }),
    }),
  );
  return model;
}

export function buildActorCritic(obsDim: number, nActions: number, seed: number): ActorCritic {
  return {
    actor: mlp(obsDim, nActions, seed * 1000 + 1),
    critic: mlp(obsDim, 1, seed * 1000 + 101),
    obsDim,
    nActions,
  };
}

/** One forward pass outside any gradient tape; returns plain arrays. */
export function policyStep(
  ac: ActorCritic,
  obs: number[],
): { logits: Float32Array; value: number } {
  return tf.tidy(() => {
    const x = tf.tensor2d([obs], [1, ac.obsDim]);
    const logits = (ac.actor.predict(x) as tf.Tensor).dataSync() as Float32Array;
    const value = (ac.critic.predict(x) as tf.Tensor).dataSync()[0];
    return { logits: Float32Array.from(logits), value };
  });
}

interface StoredTensor {
  shape: number[];
  data: number[];
}

export interface CheckpointSidecar {
  obsWidth: number;
  actionSlots: number;
  nRobots: number;
  gamma: number;
  trainedSteps: number;
  seed: number;
  stage: string;
}

export interface Checkpoint {
  version: 1;
  sidecar: CheckpointSidecar;
  actor: StoredTensor[];
  critic: StoredTensor[];
}

function storeWeights(model: tf.LayersModel): StoredTensor[] {
  return model.getWeights().map((w) => ({
    shape: w.shape.slice(),
    data: Array.from(w.dataSync()),
  }));
}

function loadWeights(model: tf.LayersModel, stored: StoredTensor[]): void {
  const tensors = stored.map((s) => tf.tensor(s.data, s.shape));
  model.setWeights(tensors);
  for (const t of tensors) t.dispose();
}

export function toCheckpoint(ac: ActorCritic, sidecar: CheckpointSidecar): Checkpoint {
  return { version: 1, sidecar, actor: storeWeights(ac.actor), critic: storeWeights(ac.critic) };
}

export function fromCheckpoint(ck: Checkpoint, nActions: number): ActorCritic {
  if (ck.version !== 1) {
    throw new Error(`unsupported checkpoint version ${ck.version}`);
  }
  const ac = buildActorCritic(ck.sidecar.obsWidth, nActions, ck.sidecar.seed);
  loadWeights(ac.actor, ck.actor);
  loadWeights(ac.critic, ck.critic);
  return ac;
}
