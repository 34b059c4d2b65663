"""In-memory background jobs for long-running simulations.

State lives in the process only: restarting the service forgets all jobs,
which is the documented trade for having no external queue.  The pool is
bounded so simulation bursts cannot starve interactive requests.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional

__all__ = ["JobManager", "JobRecord"]


@dataclass
class JobRecord:
    job_id: str
    status: str = "queued"  # queued | running | done | failed
    result: Optional[dict] = None
    error: Optional[str] = None


class JobManager:
    def __init__(self, max_workers: int = 2):
        self._pool = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: Dict[str, JobRecord] = {}
        self._lock = threading.Lock()

    def submit(self, fn: Callable[[], dict]) -> str:
        job_id = uuid.uuid4().hex
        record = JobRecord(job_id=job_id)
        with self._lock:
            self._jobs[job_id] = record

        def run():
            with self._lock:
                record.status = "running"
            try:
                result = fn()
            except Exception as exc:  # surfaced through the job document
                with self._lock:
                    record.status = "failed"
                    record.error = f"{type(exc).__name__}: {exc}"
                return
            with self._lock:
                record.status = "done"
                record.result = result

        self._pool.submit(run)
        return job_id

    def get(self, job_id: str) -> Optional[JobRecord]:
        with self._lock:
            return self._jobs.get(job_id)

    def shutdown(self):
        self._pool.shutdown(wait=False)
