/** Spawn the Python editing service for integration tests. */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface RunningService {
  baseUrl: string;
  workDir: string;
  stop: () => void;
}

export async function startService(): Promise<RunningService> {
  const workDir = mkdtempSync(join(tmpdir(), "unbend-editor-"));
  const helper = new URL("./helpers/make_session.py", import.meta.url).pathname;
  const build = spawnSync("python3", [helper, workDir], { encoding: "utf-8" });
  if (build.status !== 0) {
    throw new Error(`session build failed: ${build.stderr}`);
  }
  const sessionPath = build.stdout.trim();
  const port = 18200 + (process.pid % 1000);
  const baseUrl = `http://127.0.0.1:${port}`;
  const proc: ChildProcess = spawn(
    "python3",
    ["-m", "unbend.cli", "serve", sessionPath, "--bind", `127.0.0.1:${port}`],
    { stdio: ["ignore", "ignore", "pipe"] },
  );
  let stderr = "";
  proc.stderr?.on("data", (chunk) => {
    stderr += String(chunk);
  });

  const deadline = Date.now() + 60_000;
  for (;;) {
    if (proc.exitCode !== null) {
      throw new Error(`service exited early: ${stderr}`);
    }
    try {
      const res = await fetch(`${baseUrl}/rig`);
      if (res.ok) break;
    } catch {
      /* not listening yet */
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error(`service did not come up: ${stderr}`);
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  return {
    baseUrl,
    workDir,
    stop: () => {
      proc.kill("SIGTERM");
    },
  };
}
