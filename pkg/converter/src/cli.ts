#!/usr/bin/env node
/** CLI: duosphere-convert <cora|citeseer|pubmed> --out DIR [--archive PATH] */

import { parseArgs } from "node:util";

import { convert, ConvertError, DATASETS, DatasetName } from "./convert.js";

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        out: { type: "string" },
        archive: { type: "string" },
        "no-verify": { type: "boolean", default: false },
      },
    });
  } catch (e) {
    console.error(`error: ${(e as Error).message}`);
    return 2;
  }
  const [name] = parsed.positionals;
  if (!name || !(DATASETS as readonly string[]).includes(name)) {
    console.error(`usage: duosphere-convert <${DATASETS.join("|")}> --out DIR --archive PATH`);
    return 2;
  }
  const { out, archive } = parsed.values;
  if (!out) {
    console.error("error: --out is required");
    return 2;
  }
  if (!archive) {
    // There is no unauthenticated stable mirror to fetch from at build time;
    // the caller supplies the downloaded archive or an unpacked directory.
    console.error("error: --archive is required (pre-downloaded tarball or directory)");
    return 2;
  }
  try {
    const report = convert(name as DatasetName, archive, out,
      !parsed.values["no-verify"]);
    console.log(
      `${report.name}: ${report.nodes} nodes, ${report.attrs} attrs, ` +
      `${report.classes} classes`,
    );
    console.log(
      `edges: ${report.rawEdges} raw -> ${report.dedupedEdges} deduplicated ` +
      `(${report.danglingEdges} dangling, ${report.selfLoops} self-loops dropped)`,
    );
    return 0;
  } catch (e) {
    if (e instanceof ConvertError) {
      console.error(`error: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
