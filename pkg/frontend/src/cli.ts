#!/usr/bin/env node
/**
 * Embedding backend entry point.
 *
 *   --transport stdio|tcp   (default stdio)
 *   --port <n>              TCP port (default 7071; 0 picks a free port)
 *   --model stub|hook:<module-path>   (default stub)
 *   --seed <n>              stub projection seed (default 0)
 */
import * as path from "path";
import { serveStdio, serveTcp } from "./server";
import { EmbeddingModel, StubModel, loadHookModel } from "./stub";

interface Args {
  transport: "stdio" | "tcp";
  port: number;
  model: string;
  seed: number;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { transport: "stdio", port: 7071, model: "stub", seed: 0 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--transport":
        if (value !== "stdio" && value !== "tcp") {
          throw new Error(`unknown transport ${value}`);
        }
        args.transport = value;
        i++;
        break;
      case "--port":
        args.port = Number(value);
        i++;
        break;
      case "--model":
        args.model = value;
        i++;
        break;
      case "--seed":
        args.seed = Number(value);
        i++;
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  return args;
}

function buildModel(spec: string, seed: number): EmbeddingModel {
  if (spec === "stub") {
    return new StubModel(seed);
  }
  if (spec.startsWith("hook:")) {
    return loadHookModel(path.resolve(spec.slice("hook:".length)));
  }
  throw new Error(`unknown model ${spec}; expected stub or hook:<module-path>`);
}

function main(): void {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`${String(err instanceof Error ? err.message : err)}\n`);
    process.exit(2);
  }
  const model = buildModel(args.model, args.seed);
  if (args.transport === "stdio") {
    void serveStdio(model).then(() => process.exit(0));
  } else {
    serveTcp(model, args.port, (port) => {
      process.stderr.write(`listening on ${port}\n`);
    });
  }
}

main();
