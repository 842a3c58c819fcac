import type { Api, JobDoc } from "./api.js";

/** Poll a job until it reaches a terminal state. */
export async function pollJob(
  api: Api,
  jobId: string,
  onUpdate?: (job: JobDoc) => void,
  intervalMs = 400,
  timeoutMs = 300_000,
): Promise<JobDoc> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const job = await api.job(jobId);
    onUpdate?.(job);
    if (job.status === "done" || job.status === "failed") {
      return job;
    }
    if (Date.now() > deadline) {
      throw new Error(`job ${jobId} still ${job.status} after ${timeoutMs}ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
