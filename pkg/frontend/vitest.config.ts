import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node", // chart tests opt into jsdom per-file
    testTimeout: 20000,
    hookTimeout: 40000,
  },
});
