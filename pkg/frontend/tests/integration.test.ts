// End-to-end against the real service: the offline transcription provider
// drives a submitted capture-text job to done through the documented HTTP
// API, exactly as the browser would.
import { spawn, execFileSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Api } from "../src/api.js";
import { pollJob } from "../src/jobs.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let workdir = "";

async function waitForServer(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const resp = await fetch(`${BASE}/config`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((r) => setTimeout(r, 200));
  }
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "fp-webapp-"));
  const script = {
    chunks: {
      "0": [{ start_s: 1.0, end_s: 2.2, text: "ini kayu manis",
              confidence: 0.95 }],
      "1": [{ start_s: 0.5, end_s: 1.5, text: "bunga frangipani",
              confidence: 0.55 }],
    },
  };
  writeFileSync(join(workdir, "script.json"), JSON.stringify(script));
  // synthetic clip with a silent PCM track, generated by the pipeline's own fixtures
  execFileSync("python3", ["-c", `
from fieldpress.media.fixtures import write_video
write_video(${JSON.stringify(join(workdir, "clip.mp4"))}, 12.0, fps=10,
            width=64, height=48, pattern="noise", hue=0.2)
`]);

  server = spawn("python3", ["-c", `
import uvicorn
from fieldpress.config import AppConfig
from fieldpress.service import create_app
config = AppConfig(root=${JSON.stringify(join(workdir, "ws"))},
                   provider="offline",
                   offline_script_path=${JSON.stringify(join(workdir, "script.json"))})
uvicorn.run(create_app(config), host="127.0.0.1", port=${PORT}, log_level="warning")
`], { stdio: "inherit" });
  await waitForServer();
}, 60_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("capture-text happy path against the live service", () => {
  const api = new Api(BASE);

  it("serves the UI prefills: threshold 0.9, chunk length 30", async () => {
    const config = await api.config();
    expect(config.confidence_threshold).toBe(0.9);
    expect(config.chunk_len_s).toBe(30);
  });

  it("rejects Fig.2 violations server-side regardless of the client", async () => {
    const avi = await fetch(`${BASE}/assets?filename=x.avi`, {
      method: "POST", body: new Uint8Array([1, 2, 3]),
    });
    expect(avi.status).toBe(415);

    const clip = readFileSync(join(workdir, "clip.mp4"));
    const asset = await api.uploadAsset(new Blob([clip]), "clip.mp4");
    const bad = await fetch(`${BASE}/assets/${asset.asset_id}/transcribe`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ chunk_len_s: 60 }),
    });
    expect(bad.status).toBe(422);
  });

  it("drives a transcribe job to done with the offline provider", async () => {
    const clip = readFileSync(join(workdir, "clip.mp4"));
    const asset = await api.uploadAsset(new Blob([clip]), "clip.mp4");
    expect(asset.duration_s).toBeCloseTo(12.0, 1);

    const { job_id } = await api.startTranscribe(asset.asset_id, {
      start_min: 0, start_sec: 0, end_min: 0, end_sec: 0,
      chunk_len_s: 6, threshold: 0.9, language: "id-ID",
      search_term: "manis",
    });
    const progressSeen: number[] = [];
    const job = await pollJob(api, job_id, (j) => progressSeen.push(j.progress),
                              100, 60_000);
    expect(job.status).toBe("done");
    expect(job.progress).toBe(1);
    const result = job.result_ref as Record<string, unknown>;
    expect(result["chunks_total"]).toBe(2);
    expect(result["utterances_total"]).toBe(2);
    expect(result["utterances_at_threshold"]).toBe(1);
    expect((result["hits"] as unknown[]).length).toBe(1);

    // the transcript endpoint then feeds the review screen, filtered server-side
    const strict = await api.transcript(asset.asset_id, 0.9);
    expect(strict.utterances.length).toBe(1);
    expect(strict.utterances[0].text).toBe("ini kayu manis");
    const loose = await api.transcript(asset.asset_id, 0);
    expect(loose.utterances.length).toBe(2);

    const { hits } = await api.search(asset.asset_id, "manis");
    expect(hits.length).toBe(1);
    expect(hits[0].start_s).toBeCloseTo(1.0, 5);
  }, 90_000);

  it("media endpoint honors range requests for the player", async () => {
    const clip = readFileSync(join(workdir, "clip.mp4"));
    const asset = await api.uploadAsset(new Blob([clip]), "clip.mp4");
    const resp = await fetch(api.mediaUrl(asset.asset_id), {
      headers: { Range: "bytes=0-15" },
    });
    expect(resp.status).toBe(206);
    const body = new Uint8Array(await resp.arrayBuffer());
    expect(body.length).toBe(16);
    expect([...body.slice(4, 8)]).toEqual([...Buffer.from("ftyp")]);
  }, 30_000);
});
