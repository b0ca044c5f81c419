/**
 * Spawns the real backend (door server and market nodes) for UI tests,
 * using the installed `marketpalace` Python package.
 */

import { type ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

const PYTHON = process.env.PYTHON ?? "python3";
export const TEST_PASSPHRASE = "test-passphrase";

function run(args: string[], env: Record<string, string> = {}): Promise<string> {
  return new Promise((resolve, reject) => {
    const child = spawn(PYTHON, ["-m", "marketpalace", ...args], {
      env: { ...process.env, MARKETPALACE_PASSPHRASE: TEST_PASSPHRASE, ...env },
    });
    let out = "";
    let err = "";
    child.stdout.on("data", (chunk) => (out += chunk));
    child.stderr.on("data", (chunk) => (err += chunk));
    child.on("close", (code) => {
      if (code === 0) {
        resolve(out);
      } else {
        reject(new Error(`marketpalace ${args[0]} exited ${code}: ${err || out}`));
      }
    });
  });
}

async function waitFor<T>(
  probe: () => T | Promise<T>,
  timeoutMs: number,
  what: string,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const value = await probe();
      if (value) {
        return value;
      }
    } catch (err) {
      lastError = err;
    }
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
  throw new Error(`timed out waiting for ${what}: ${String(lastError)}`);
}

export class Backend {
  readonly dir: string;
  private processes: ChildProcess[] = [];
  doorUrl = "";

  constructor() {
    this.dir = mkdtempSync(join(tmpdir(), "mp-ui-"));
  }

  async startDoor(): Promise<string> {
    await run(["door-keygen", "--out", join(this.dir, "door", "door_key.pem")]);
    await run(["door-keygen", "--out", join(this.dir, "door", "issuer_key.pem")]);
    writeFileSync(
      join(this.dir, "door", "door.json"),
      JSON.stringify({
        listen_addr: "127.0.0.1:0",
        server_key_path: "door_key.pem",
        issuer_keys: [],
        session_ttl_s: 300,
        tls: { enabled: false },
        mock_issuer: {
          enabled: true,
          issuer_id: "mock-issuer",
          private_key_path: "issuer_key.pem",
        },
      }),
    );
    const child = spawn(
      PYTHON,
      ["-m", "marketpalace", "door-serve", "--config", join(this.dir, "door", "door.json")],
      { env: { ...process.env } },
    );
    this.processes.push(child);
    let banner = "";
    child.stdout.on("data", (chunk) => (banner += chunk));
    this.doorUrl = await waitFor(
      () => banner.match(/door server on (http:\/\/[\d.]+:\d+)/)?.[1] ?? "",
      15000,
      "door server banner",
    );
    await waitFor(
      async () => (await fetch(`${this.doorUrl}/server-key`)).ok,
      10000,
      "door server /server-key",
    );
    return this.doorUrl;
  }

  /** Key material + registration + a running daemon for one node. */
  async startNode(
    name: string,
    attributeValue: string,
    options: { bootstrap?: string[]; periodS?: number } = {},
  ): Promise<{ apiUrl: string; listenAddr: string; peerId: string }> {
    const nodeDir = join(this.dir, name);
    const configPath = join(nodeDir, "node.json");
    await run(["keygen", "--out", join(nodeDir, "keys")]);
    writeFileSync(
      configPath,
      JSON.stringify({
        listen_addr: "127.0.0.1:0",
        api_addr: "127.0.0.1:0",
        bootstrap_addrs: options.bootstrap ?? [],
        door_server_url: this.doorUrl,
        server_public_key_path: "keys/server_public_key.json",
        key_bundle_path: "keys/key_bundle.json",
        timer_period_s: options.periodS ?? 3.0,
        k: 20,
        data_dir: "data",
      }),
    );
    await run([
      "register",
      "--config",
      configPath,
      "--mock-attribute",
      `ssn=${attributeValue}`,
    ]);
    const child = spawn(
      PYTHON,
      ["-m", "marketpalace", "serve", "--config", configPath],
      {
        env: { ...process.env, MARKETPALACE_PASSPHRASE: TEST_PASSPHRASE },
      },
    );
    this.processes.push(child);
    const runtimePath = join(nodeDir, "data", "runtime.json");
    const runtime = await waitFor(
      () => {
        const parsed = JSON.parse(readFileSync(runtimePath, "utf-8")) as {
          api_addr: string;
          listen_addr: string;
          peer_id: string;
        };
        return parsed.api_addr ? parsed : null;
      },
      20000,
      `node ${name} runtime.json`,
    );
    const apiUrl = `http://${runtime!.api_addr}`;
    await waitFor(async () => (await fetch(`${apiUrl}/status`)).ok, 10000, `${name} API`);
    return { apiUrl, listenAddr: runtime!.listen_addr, peerId: runtime!.peer_id };
  }

  /** Key material only (no registration): what a user has before signup. */
  async keygenOnly(name: string): Promise<{
    publicKeyJson: string;
    privateKeyJson: string;
  }> {
    const keysDir = join(this.dir, name, "keys");
    await run(["keygen", "--out", keysDir]);
    return {
      publicKeyJson: readFileSync(join(keysDir, "public_key.json"), "utf-8"),
      privateKeyJson: readFileSync(join(keysDir, "private_key.json"), "utf-8"),
    };
  }

  readNodeFile(name: string, relative: string): string {
    return readFileSync(join(this.dir, name, relative), "utf-8");
  }

  stop(): void {
    for (const child of this.processes) {
      if (child.exitCode === null) {
        child.kill("SIGTERM");
      }
    }
    this.processes = [];
    rmSync(this.dir, { recursive: true, force: true });
  }
}
