import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    // the contract test spawns the Python service and waits for it to come up
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
