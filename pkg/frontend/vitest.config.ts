import { defineConfig } from "vitest/config";

// Most tests shell out to the core CLI; run files serially and allow for
// interpreter startup on a loaded machine.
export default defineConfig({
  test: {
    testTimeout: 120_000,
    hookTimeout: 120_000,
    fileParallelism: false,
  },
});
