/**
 * Writer for the neutral dataset directory format consumed by the training
 * toolkit: meta.json, edges.tsv, features.bin (little-endian float64,
 * row-major), labels.txt. Serialization is fully deterministic so re-running
 * a conversion reproduces every byte.
 */

import * as crypto from "node:crypto";
import * as fs from "node:fs";
import * as path from "node:path";

export interface ParsedDataset {
  /** Node ids in source file order. */
  ids: string[];
  /** Row-major feature matrix, one Float64Array per node. */
  features: Float64Array[];
  /** Class id per node; classes numbered by first appearance. */
  labels: number[];
  /** Class names in id order. */
  classNames: string[];
  /** Canonical undirected edges, u < v, deduplicated. */
  edges: Array<[number, number]>;
  /** Edge lines in the raw source, before any normalization. */
  rawEdgeCount: number;
  /** Edge lines whose endpoints were missing from the node table. */
  danglingEdgeCount: number;
  /** Self-loop edge lines dropped during canonicalization. */
  selfLoopCount: number;
}

function sha256(buf: Buffer): string {
  return crypto.createHash("sha256").update(buf).digest("hex");
}

/** Dedup/symmetrize an edge list into sorted canonical (u < v) pairs. */
export function canonicalizeEdges(
  pairs: Array<[number, number]>,
): { edges: Array<[number, number]>; selfLoops: number } {
  const seen = new Set<number>();
  const out: Array<[number, number]> = [];
  let selfLoops = 0;
  for (const [a, b] of pairs) {
    if (a === b) {
      selfLoops += 1;
      continue;
    }
    const u = Math.min(a, b);
    const v = Math.max(a, b);
    const key = u * 2 ** 26 + v; // node counts here stay far below 2^26
    if (seen.has(key)) continue;
    seen.add(key);
    out.push([u, v]);
  }
  out.sort((x, y) => (x[0] - y[0]) || (x[1] - y[1]));
  return { edges: out, selfLoops };
}

export function writeNeutralDataset(
  ds: ParsedDataset,
  outDir: string,
  provenance: Record<string, unknown>,
): void {
  fs.mkdirSync(outDir, { recursive: true });
  const n = ds.ids.length;
  const m = n > 0 ? ds.features[0].length : 0;

  const feats = Buffer.alloc(n * m * 8);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < m; j++) {
      feats.writeDoubleLE(ds.features[i][j], (i * m + j) * 8);
    }
  }
  const edgeText = ds.edges.map(([u, v]) => `${u}\t${v}\n`).join("");
  const edgeBuf = Buffer.from(edgeText, "utf8");

  const meta = {
    checksum_edges: sha256(edgeBuf),
    checksum_features: sha256(feats),
    class_names: ds.classNames,
    feature_dtype: "f64",
    n_attrs: m,
    n_classes: ds.classNames.length,
    n_nodes: n,
    provenance,
  };
  fs.writeFileSync(path.join(outDir, "features.bin"), feats);
  fs.writeFileSync(path.join(outDir, "edges.tsv"), edgeBuf);
  fs.writeFileSync(
    path.join(outDir, "labels.txt"),
    ds.labels.map((l) => `${l}\n`).join(""),
  );
  fs.writeFileSync(
    path.join(outDir, "meta.json"),
    JSON.stringify(sortKeysDeep(meta), null, 2) + "\n",
  );
}

function sortKeysDeep(value: unknown): unknown {
  if (Array.isArray(value)) return value.map(sortKeysDeep);
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value).sort()) {
      out[key] = sortKeysDeep((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}
