/** CLI: walk an image directory and write one feature row per image.
 *
 * Usage:
 *   node dist/src/extract.js --images DIR --out features.csv [--dim 20]
 *                            [--seed 0] [--pool 1]
 *
 * The image id is the file name without its extension.  Unreadable or
 * unsupported files are skipped with a warning and listed in a sidecar
 * report next to the output (<out>.skipped.txt).  Output is deterministic:
 * a fixed head seed reproduces the CSV byte for byte.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { decodePng } from "./png";
import { buildHead, extractVector } from "./pipeline";

export interface ExtractorConfig {
  images: string;
  out: string;
  dim: number;
  seed: number;
  pool: number;
}

export interface ExtractResult {
  written: number;
  skipped: string[];
}

export function parseArgs(argv: string[]): ExtractorConfig {
  const cfg: ExtractorConfig = { images: "", out: "features.csv", dim: 20, seed: 0, pool: 1 };
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (value === undefined) throw new Error(`missing value for ${key}`);
    switch (key) {
      case "--images":
        cfg.images = value;
        break;
      case "--out":
        cfg.out = value;
        break;
      case "--dim":
        cfg.dim = parseInt(value, 10);
        break;
      case "--seed":
        cfg.seed = parseInt(value, 10);
        break;
      case "--pool":
        cfg.pool = parseInt(value, 10);
        break;
      default:
        throw new Error(`unknown option ${key}`);
    }
  }
  if (!cfg.images) throw new Error("--images DIR is required");
  if (!Number.isInteger(cfg.dim) || cfg.dim < 1) throw new Error("--dim must be a positive integer");
  if (!Number.isInteger(cfg.pool) || cfg.pool < 1) throw new Error("--pool must be a positive integer");
  return cfg;
}

/** JS number-to-string is the shortest round-trip form, so rows are stable. */
function formatRow(id: string, vector: Float64Array): string {
  const cells = [id];
  for (const v of vector) cells.push(String(v));
  return cells.join(",");
}

export function extractFeatures(cfg: ExtractorConfig): ExtractResult {
  const names = fs
    .readdirSync(cfg.images)
    .filter((name) => fs.statSync(path.join(cfg.images, name)).isFile())
    .sort();
  const head = buildHead(cfg.dim, cfg.pool, cfg.seed);

  const lines: string[] = [];
  lines.push(`# head_seed=${cfg.seed} pool=${cfg.pool}`);
  lines.push(["image_id", ...Array.from({ length: cfg.dim }, (_, i) => `f${i}`)].join(","));

  const skipped: string[] = [];
  let written = 0;
  for (const name of names) {
    const file = path.join(cfg.images, name);
    try {
      const image = decodePng(fs.readFileSync(file));
      const vector = extractVector(image, head);
      lines.push(formatRow(path.parse(name).name, vector));
      written += 1;
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      console.warn(`skipping ${name}: ${reason}`);
      skipped.push(`${name}\t${reason}`);
    }
  }

  // Write atomically so a crash never leaves a half-written table.
  const tmp = cfg.out + ".tmp";
  fs.writeFileSync(tmp, lines.join("\n") + "\n");
  fs.renameSync(tmp, cfg.out);
  const report = cfg.out + ".skipped.txt";
  if (skipped.length > 0) {
    fs.writeFileSync(report, skipped.join("\n") + "\n");
  } else if (fs.existsSync(report)) {
    fs.unlinkSync(report);
  }
  return { written, skipped };
}

if (require.main === module) {
  try {
    const cfg = parseArgs(process.argv.slice(2));
    const result = extractFeatures(cfg);
    console.log(`wrote ${result.written} rows to ${cfg.out} (${result.skipped.length} skipped)`);
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(1);
  }
}
