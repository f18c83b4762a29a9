import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    globalSetup: "./tests/setup.global.ts",
    // the test files share two live service processes; run them one at a time
    fileParallelism: false,
    testTimeout: 30000,
    hookTimeout: 90000,
  },
});
