import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    environment: 'node',
    testTimeout: 130_000,
    hookTimeout: 130_000,
  },
});
