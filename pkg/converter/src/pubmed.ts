/**
 * Parsers for the public Pubmed-Diabetes distribution: a NODE .tab file
 * whose header declares the TF-IDF vocabulary and whose rows carry sparse
 * word weights, plus a DIRECTED.cites .tab edge file.
 */

import { ParseError } from "./linqs.js";
import { canonicalizeEdges, ParsedDataset } from "./neutral.js";

export function parsePubmedNodes(text: string): {
  ids: string[];
  features: Float64Array[];
  labels: number[];
  classNames: string[];
} {
  const lines = text.split("\n");
  if (lines.length < 3) throw new ParseError("truncated node table");
  // Header line 2 declares the schema: cat=...:label then numeric:w-*:0.0
  // columns whose order fixes the feature layout.
  const vocab: string[] = [];
  for (const field of lines[1].split("\t")) {
    const m = field.match(/^numeric:(w-[^:]+):/);
    if (m) vocab.push(m[1]);
  }
  if (vocab.length === 0) {
    throw new ParseError("node table header declares no word columns");
  }
  const col = new Map(vocab.map((w, j) => [w, j]));

  const ids: string[] = [];
  const features: Float64Array[] = [];
  const labels: number[] = [];
  const classNames: string[] = [];
  const classIds = new Map<string, number>();
  for (let lineno = 2; lineno < lines.length; lineno++) {
    const line = lines[lineno];
    if (line.trim() === "") continue;
    const parts = line.split("\t");
    const id = parts[0];
    const row = new Float64Array(vocab.length);
    let label: string | null = null;
    for (const field of parts.slice(1)) {
      const eq = field.indexOf("=");
      if (eq < 0) continue;
      const key = field.slice(0, eq);
      const val = field.slice(eq + 1);
      if (key === "label") {
        label = val.trim();
      } else if (col.has(key)) {
        const v = Number(val);
        if (!Number.isFinite(v)) {
          throw new ParseError(`node line ${lineno + 1}: bad weight ${val}`);
        }
        row[col.get(key)!] = v;
      }
      // Other fields (e.g. the summary column) carry no features.
    }
    if (label === null) {
      throw new ParseError(`node line ${lineno + 1}: missing label field`);
    }
    if (!classIds.has(label)) {
      classIds.set(label, classNames.length);
      classNames.push(label);
    }
    ids.push(id);
    features.push(row);
    labels.push(classIds.get(label)!);
  }
  if (ids.length === 0) throw new ParseError("empty node table");
  return { ids, features, labels, classNames };
}

export function parsePubmed(nodeText: string, citesText: string): ParsedDataset {
  const nodes = parsePubmedNodes(nodeText);
  const index = new Map(nodes.ids.map((id, i) => [id, i]));
  const pairs: Array<[number, number]> = [];
  let raw = 0;
  let dangling = 0;
  const lines = citesText.split("\n");
  for (let lineno = 2; lineno < lines.length; lineno++) {
    const line = lines[lineno];
    if (line.trim() === "") continue;
    const refs = [...line.matchAll(/paper:(\S+)/g)].map((m) => m[1]);
    if (refs.length !== 2) {
      throw new ParseError(`cites line ${lineno + 1}: expected two paper refs`);
    }
    raw += 1;
    const a = index.get(refs[0]);
    const b = index.get(refs[1]);
    if (a === undefined || b === undefined) {
      dangling += 1;
      continue;
    }
    pairs.push([a, b]);
  }
  const { edges, selfLoops } = canonicalizeEdges(pairs);
  return {
    ...nodes,
    edges,
    rawEdgeCount: raw,
    danglingEdgeCount: dangling,
    selfLoopCount: selfLoops,
  };
}
