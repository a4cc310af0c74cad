import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.spec.ts"],
    // the integration suite spawns a python bridge; keep files sequential
    fileParallelism: false,
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
