import { defineConfig } from "vitest/config";

export default defineConfig({
  build: { target: "es2022" },
  test: {
    environment: "happy-dom",
    testTimeout: 120_000,
    hookTimeout: 120_000,
    // Backend-spawning suites must not fight over ports or CPUs.
    fileParallelism: false,
  },
});
