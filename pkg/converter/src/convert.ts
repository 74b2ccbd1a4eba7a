/**
 * Dataset conversion driver: locate the source files inside an archive or
 * directory, parse them, verify the published statistics, and emit the
 * neutral dataset directory.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { parseLinqs, ParseError } from "./linqs.js";
import { ParsedDataset, writeNeutralDataset } from "./neutral.js";
import { parsePubmed } from "./pubmed.js";

export const DATASETS = ["cora", "citeseer", "pubmed"] as const;
export type DatasetName = (typeof DATASETS)[number];

/** Published statistics: nodes, raw directed edges, attributes, classes. */
export const EXPECTED_STATS: Record<
  DatasetName,
  { nodes: number; edges: number; attrs: number; classes: number }
> = {
  cora: { nodes: 2708, edges: 5429, attrs: 1433, classes: 7 },
  citeseer: { nodes: 3327, edges: 4732, attrs: 3703, classes: 6 },
  pubmed: { nodes: 19717, edges: 44338, attrs: 500, classes: 3 },
};

export class ConvertError extends Error {}

function findFile(root: string, matcher: (name: string) => boolean): string {
  const hits: string[] = [];
  const walk = (dir: string) => {
    for (const entry of fs.readdirSync(dir, { withFileTypes: true })) {
      const p = path.join(dir, entry.name);
      if (entry.isDirectory()) walk(p);
      else if (matcher(entry.name)) hits.push(p);
    }
  };
  walk(root);
  if (hits.length === 0) {
    throw new ConvertError(`no matching source file under ${root}`);
  }
  hits.sort();
  return hits[0];
}

/** Resolve an archive argument to a readable directory, untarring if needed. */
export function resolveArchive(archive: string): { dir: string; cleanup: () => void } {
  const stat = fs.statSync(archive, { throwIfNoEntry: false });
  if (!stat) throw new ConvertError(`archive ${archive} does not exist`);
  if (stat.isDirectory()) return { dir: archive, cleanup: () => {} };
  if (/\.(tgz|tar\.gz|tar)$/.test(archive)) {
    const tmp = fs.mkdtempSync(path.join(os.tmpdir(), "convert-"));
    execFileSync("tar", ["-xf", archive, "-C", tmp]);
    return { dir: tmp, cleanup: () => fs.rmSync(tmp, { recursive: true, force: true }) };
  }
  throw new ConvertError(`archive ${archive} is neither a directory nor a tarball`);
}

export function parseDataset(name: DatasetName, sourceDir: string): ParsedDataset {
  if (name === "pubmed") {
    const nodeFile = findFile(sourceDir, (n) => /NODE\.paper\.tab$/.test(n));
    const citesFile = findFile(sourceDir, (n) => /cites\.tab$/.test(n));
    return parsePubmed(
      fs.readFileSync(nodeFile, "utf8"),
      fs.readFileSync(citesFile, "utf8"),
    );
  }
  const contentFile = findFile(sourceDir, (n) => n.endsWith(".content"));
  const citesFile = findFile(sourceDir, (n) => n.endsWith(".cites"));
  return parseLinqs(
    fs.readFileSync(contentFile, "utf8"),
    fs.readFileSync(citesFile, "utf8"),
  );
}

export interface ConvertReport {
  name: DatasetName;
  nodes: number;
  attrs: number;
  classes: number;
  rawEdges: number;
  dedupedEdges: number;
  danglingEdges: number;
  selfLoops: number;
}

export function convert(
  name: DatasetName,
  archive: string,
  outDir: string,
  verifyStats = true,
): ConvertReport {
  const { dir, cleanup } = resolveArchive(archive);
  let ds: ParsedDataset;
  try {
    ds = parseDataset(name, dir);
  } catch (e) {
    if (e instanceof ParseError) throw new ConvertError(`${name}: ${e.message}`);
    throw e;
  } finally {
    cleanup();
  }

  const report: ConvertReport = {
    name,
    nodes: ds.ids.length,
    attrs: ds.features[0].length,
    classes: ds.classNames.length,
    rawEdges: ds.rawEdgeCount,
    dedupedEdges: ds.edges.length,
    danglingEdges: ds.danglingEdgeCount,
    selfLoops: ds.selfLoopCount,
  };
  if (verifyStats) {
    const exp = EXPECTED_STATS[name];
    const mismatches: string[] = [];
    if (report.nodes !== exp.nodes) mismatches.push(`nodes ${report.nodes} != ${exp.nodes}`);
    if (report.attrs !== exp.attrs) mismatches.push(`attrs ${report.attrs} != ${exp.attrs}`);
    if (report.classes !== exp.classes) mismatches.push(`classes ${report.classes} != ${exp.classes}`);
    if (report.rawEdges !== exp.edges) mismatches.push(`raw edges ${report.rawEdges} != ${exp.edges}`);
    if (mismatches.length > 0) {
      throw new ConvertError(`${name}: statistics mismatch: ${mismatches.join(", ")}`);
    }
  }

  writeNeutralDataset(ds, outDir, {
    source: name,
    raw_edge_count: report.rawEdges,
    deduped_edge_count: report.dedupedEdges,
    dangling_edge_count: report.danglingEdges,
    self_loop_count: report.selfLoops,
  });
  return report;
}
