import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    testTimeout: 15000,
    hookTimeout: 40000,
    // the integration file owns a spawned service; keep files sequential
    fileParallelism: false,
  },
});
