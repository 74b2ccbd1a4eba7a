/**
 * Parsers for the public Cora/Citeseer distribution: a .content file with
 * one node per line (id, binary word vector, class label) and a .cites file
 * with one directed citation per line.
 */

import { canonicalizeEdges, ParsedDataset } from "./neutral.js";

export class ParseError extends Error {}

export function parseContent(text: string): {
  ids: string[];
  features: Float64Array[];
  labels: number[];
  classNames: string[];
} {
  const ids: string[] = [];
  const features: Float64Array[] = [];
  const labels: number[] = [];
  const classNames: string[] = [];
  const classIds = new Map<string, number>();
  let width = -1;
  let lineno = 0;
  for (const line of text.split("\n")) {
    lineno += 1;
    if (line.trim() === "") continue;
    const parts = line.split("\t");
    if (parts.length < 3) {
      throw new ParseError(`content line ${lineno}: expected id, words, label`);
    }
    const id = parts[0];
    const label = parts[parts.length - 1].trim();
    const words = parts.slice(1, -1);
    if (width === -1) width = words.length;
    if (words.length !== width) {
      throw new ParseError(
        `content line ${lineno}: ${words.length} word columns, expected ${width}`,
      );
    }
    const row = new Float64Array(width);
    for (let j = 0; j < width; j++) {
      const v = Number(words[j]);
      if (!Number.isFinite(v)) {
        throw new ParseError(`content line ${lineno}: bad word value ${words[j]}`);
      }
      row[j] = v;
    }
    if (!classIds.has(label)) {
      classIds.set(label, classNames.length);
      classNames.push(label);
    }
    ids.push(id);
    features.push(row);
    labels.push(classIds.get(label)!);
  }
  if (ids.length === 0) throw new ParseError("empty content file");
  return { ids, features, labels, classNames };
}

export function parseLinqs(content: string, cites: string): ParsedDataset {
  const nodes = parseContent(content);
  const index = new Map(nodes.ids.map((id, i) => [id, i]));
  const pairs: Array<[number, number]> = [];
  let raw = 0;
  let dangling = 0;
  let lineno = 0;
  for (const line of cites.split("\n")) {
    lineno += 1;
    if (line.trim() === "") continue;
    const parts = line.trim().split(/\s+/);
    if (parts.length !== 2) {
      throw new ParseError(`cites line ${lineno}: expected two ids`);
    }
    raw += 1;
    const a = index.get(parts[0]);
    const b = index.get(parts[1]);
    if (a === undefined || b === undefined) {
      // Citeseer's public dump cites papers absent from the node table;
      // those lines are counted and dropped, not invented as nodes.
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
