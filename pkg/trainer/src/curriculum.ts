/** Staged training schedule: sparser arrivals first, denser later. */

export interface Stage {
  name: string;
  /** Named bridge patterns sampled round-robin within the stage. */
  patterns: string[];
  /** Fraction of total steps at which this stage becomes active. */
  from: number;
}

export function defaultCurriculum(): Stage[] {
  return [
    { name: "sparse", patterns: ["poisson-r0.4", "grid-s0.4"], from: 0.0 },
    { name: "medium", patterns: ["poisson-r0.25", "grid-s0.25"], from: 0.3 },
    { name: "dense", patterns: ["poisson-r0.15", "grid-s0.15"], from: 0.6 },
  ];
}

export function validateCurriculum(stages: Stage[]): void {
  if (stages.length === 0) {
    throw new Error("curriculum needs at least one stage");
  }
  if (stages[0].from !== 0.0) {
    throw new Error("first curriculum stage must start at fraction 0");
  }
  for (let i = 1; i < stages.length; i++) {
    if (!(stages[i].from > stages[i - 1].from)) {
      throw new Error("curriculum stage fractions must be strictly increasing");
    }
  }
  for (const stage of stages) {
    if (stage.from < 0 || stage.from >= 1) {
      throw new Error(`stage ${stage.name}: fraction ${stage.from} outside [0, 1)`);
    }
    if (stage.patterns.length === 0) {
      throw new Error(`stage ${stage.name}: no patterns`);
    }
  }
}

export function stageAt(stages: Stage[], step: number, totalSteps: number): Stage {
  const frac = totalSteps > 0 ? step / totalSteps : 0;
  let active = stages[0];
  for (const stage of stages) {
    if (frac >= stage.from) active = stage;
  }
  return active;
}
