"""Background jobs: bounded worker pool, per-job JSON persistence.

Jobs are persisted in the workspace so a restarted service reports honestly:
anything found queued/running on startup is marked failed as interrupted.
Terminal job states never change and progress never decreases.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

JOB_KINDS = ("transcribe", "extract", "curate", "export", "evaluate", "merge")
TERMINAL = ("done", "failed")


class JobError(RuntimeError):
    pass


@dataclass
class Job:
    job_id: str
    kind: str
    status: str = "queued"            # queued | running | done | failed
    progress: float = 0.0
    result_ref: dict | None = None
    error_detail: str = ""
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "progress": round(self.progress, 4),
            "result_ref": self.result_ref,
            "error_detail": self.error_detail,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Job":
        return cls(**d)


class JobManager:
    def __init__(self, jobs_dir: str | Path, workers: int = 2):
        self.jobs_dir = Path(jobs_dir)
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self._pool = ThreadPoolExecutor(max_workers=max(1, workers))
        self._lock = threading.Lock()
        self._jobs: dict[str, Job] = {}
        self._idempotency: dict[str, str] = {}
        self._idempotency_path = self.jobs_dir / "_idempotency.json"
        self._recover()

    # -- persistence -------------------------------------------------------

    def _job_path(self, job_id: str) -> Path:
        return self.jobs_dir / f"{job_id}.json"

    def _save(self, job: Job) -> None:
        job.updated_at = time.time()
        self._job_path(job.job_id).write_text(
            json.dumps(job.to_dict(), indent=2) + "\n", encoding="utf-8")

    def _recover(self) -> None:
        if self._idempotency_path.exists():
            self._idempotency = json.loads(
                self._idempotency_path.read_text(encoding="utf-8"))
        for p in self.jobs_dir.glob("*.json"):
            if p.name.startswith("_"):
                continue
            job = Job.from_dict(json.loads(p.read_text(encoding="utf-8")))
            if job.status not in TERMINAL:
                job.status = "failed"
                job.error_detail = "interrupted by service restart"
                self._save(job)
            self._jobs[job.job_id] = job

    def _save_idempotency(self) -> None:
        self._idempotency_path.write_text(
            json.dumps(self._idempotency, indent=2) + "\n", encoding="utf-8")

    # -- API ----------------------------------------------------------------

    def submit(self, kind: str, fn: Callable[[Callable[[float], None]], dict],
               *, idempotency_key: str | None = None) -> Job:
        """Queue ``fn(progress)`` and return its job record.

        With an idempotency key, a retried submission returns the original
        job instead of running twice.
        """
        if kind not in JOB_KINDS:
            raise JobError(f"unknown job kind: {kind}")
        with self._lock:
            if idempotency_key:
                scoped = f"{kind}:{idempotency_key}"
                existing = self._idempotency.get(scoped)
                if existing and existing in self._jobs:
                    return self._jobs[existing]
            job = Job(job_id=uuid.uuid4().hex[:16], kind=kind)
            self._jobs[job.job_id] = job
            if idempotency_key:
                self._idempotency[f"{kind}:{idempotency_key}"] = job.job_id
                self._save_idempotency()
            self._save(job)

        def run() -> None:
            with self._lock:
                job.status = "running"
                self._save(job)

            def set_progress(fraction: float) -> None:
                with self._lock:
                    if job.status in TERMINAL:
                        return
                    job.progress = max(job.progress, min(1.0, fraction))
                    self._save(job)

            try:
                result = fn(set_progress)
            except Exception as e:  # job failure is data, not a server crash
                with self._lock:
                    job.status = "failed"
                    job.error_detail = f"{type(e).__name__}: {e}"
                    self._save(job)
                return
            with self._lock:
                job.status = "done"
                job.progress = 1.0
                job.result_ref = result
                self._save(job)

        self._pool.submit(run)
        return job

    def get(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise JobError(f"unknown job: {job_id}")
        return job

    def wait(self, job_id: str, timeout: float = 60.0) -> Job:
        """Poll until the job reaches a terminal state (test convenience)."""
        deadline = time.time() + timeout
        while time.time() < deadline:
            job = self.get(job_id)
            if job.status in TERMINAL:
                return job
            time.sleep(0.02)
        raise JobError(f"job {job_id} did not finish within {timeout}s")

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)
