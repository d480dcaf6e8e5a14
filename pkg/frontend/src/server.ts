/**
 * NDJSON bridge protocol server: one JSON message per line over stdio or
 * TCP. Handshake announces dim and sample rate; embed requests carry
 * base64 little-endian float32 PCM and are answered with the embedding
 * echoing the request id. Malformed lines produce an error with id -1 and
 * the session continues.
 */
import * as net from "net";
import * as readline from "readline";
import { EmbeddingModel } from "./stub";

export const PROTOCOL_VERSION = 1;

interface Reply {
  [key: string]: unknown;
}

export class Session {
  constructor(private readonly model: EmbeddingModel) {}

  /** Handle one raw input line; returns the serialized reply line. */
  handleLine(line: string): string {
    let msg: Record<string, unknown>;
    try {
      msg = JSON.parse(line);
      if (typeof msg !== "object" || msg === null || Array.isArray(msg)) {
        throw new Error("not an object");
      }
    } catch {
      return JSON.stringify({ op: "error", id: -1, message: "malformed JSON line" });
    }
    return JSON.stringify(this.handleMessage(msg));
  }

  private handleMessage(msg: Record<string, unknown>): Reply {
    const id = typeof msg.id === "number" ? msg.id : -1;
    switch (msg.op) {
      case "hello":
        return {
          op: "hello",
          version: PROTOCOL_VERSION,
          dim: this.model.dim,
          sample_rate: this.model.sampleRate,
        };
      case "embed":
        return this.handleEmbed(msg, id);
      default:
        return { op: "error", id, message: `unknown op ${String(msg.op)}` };
    }
  }

  private handleEmbed(msg: Record<string, unknown>, id: number): Reply {
    if (typeof msg.pcm_b64 !== "string") {
      return { op: "error", id, message: "embed requires base64 pcm_b64" };
    }
    const sampleRate = typeof msg.sample_rate === "number" ? msg.sample_rate : this.model.sampleRate;
    let samples: Float64Array;
    try {
      const buf = Buffer.from(msg.pcm_b64, "base64");
      const f32 = new Float32Array(buf.buffer, buf.byteOffset, Math.floor(buf.length / 4));
      samples = Float64Array.from(f32);
    } catch (err) {
      return { op: "error", id, message: `bad PCM payload: ${String(err)}` };
    }
    try {
      return { op: "embed", id, embedding: this.model.embed(samples, sampleRate) };
    } catch (err) {
      return { op: "error", id, message: String(err instanceof Error ? err.message : err) };
    }
  }
}

export function serveStdio(model: EmbeddingModel): Promise<void> {
  const session = new Session(model);
  const rl = readline.createInterface({ input: process.stdin, terminal: false });
  return new Promise((resolve) => {
    rl.on("line", (line) => {
      if (line.trim().length > 0) {
        process.stdout.write(session.handleLine(line) + "\n");
      }
    });
    rl.on("close", resolve);
  });
}

export function serveTcp(model: EmbeddingModel, port: number,
                         onListening?: (port: number) => void): net.Server {
  const server = net.createServer((socket) => {
    // one single-threaded request loop per connection
    const session = new Session(model);
    const rl = readline.createInterface({ input: socket, terminal: false });
    rl.on("line", (line) => {
      if (line.trim().length > 0) {
        socket.write(session.handleLine(line) + "\n");
      }
    });
    socket.on("error", () => rl.close());
  });
  server.listen(port, () => {
    const address = server.address();
    if (onListening && address && typeof address === "object") {
      onListening(address.port);
    }
  });
  return server;
}
