import { existsSync, readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
const here = dirname(fileURLToPath(import.meta.url));
// works from tests/ directly and from the compiled dist-test/tests/
const fixtureDir = existsSync(join(here, "fixtures"))
    ? join(here, "fixtures")
    : join(here, "..", "..", "tests", "fixtures");
export function fixture(name) {
    return JSON.parse(readFileSync(join(fixtureDir, name), "utf-8"));
}
export function streamFixture(name) {
    const raw = readFileSync(join(fixtureDir, name), "utf-8");
    return raw
        .split("\n")
        .filter((line) => line.trim().length > 0)
        .map((line) => JSON.parse(line));
}
