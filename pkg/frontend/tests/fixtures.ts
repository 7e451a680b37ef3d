import { existsSync, readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { StreamMessage } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));
// works from tests/ directly and from the compiled dist-test/tests/
const fixtureDir = existsSync(join(here, "fixtures"))
  ? join(here, "fixtures")
  : join(here, "..", "..", "tests", "fixtures");

export function fixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(fixtureDir, name), "utf-8")) as T;
}

export function streamFixture(name: string): StreamMessage[] {
  const raw = readFileSync(join(fixtureDir, name), "utf-8");
  return raw
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as StreamMessage);
}
