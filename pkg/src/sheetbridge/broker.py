"""Job queue and recyclable worker pool.

Workers are isolated in-process calculation instances: each holds at most one
loaded Workbook, executes one job at a time, and is destroyed and recreated
after max_uses jobs (default 1, so every job sees a pristine instance).  A
worker that crashes or times out is declared DEAD and replaced; its job is
re-queued until the retry budget runs out.  Business failures inside a run
(validation, action errors) are results, not crashes, and consume no retries.

Fault injection for tests: a plan of kill/delay events keyed by the global
attempt-start index, supplied directly or via the BROKER_FAULT_PLAN
environment variable naming a JSON file.
"""

from __future__ import annotations

import enum
import json
import os
import threading
import time
import uuid
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

from .appdef import RunResult
from .engine import Workbook


class QueueFull(Exception):
    pass


class UnknownJob(KeyError):
    pass


class WorkerCrashed(RuntimeError):
    pass


class JobStatus(str, enum.Enum):
    QUEUED = "QUEUED"
    RUNNING = "RUNNING"
    DONE = "DONE"
    FAILED = "FAILED"


class WorkerState(str, enum.Enum):
    IDLE = "IDLE"
    BUSY = "BUSY"
    DEAD = "DEAD"


@dataclass
class BrokerConfig:
    pool_size: int = 4
    max_uses: int = 1
    job_timeout: float = 60.0
    max_retries: int = 2
    queue_capacity: int = 1000
    scheduler_period: float = 0.1

    def __post_init__(self):
        if self.pool_size < 1 or self.max_uses < 1 or self.queue_capacity < 1:
            raise ValueError("pool_size, max_uses and queue_capacity must be positive")
        if self.max_retries < 0 or self.job_timeout <= 0 or self.scheduler_period <= 0:
            raise ValueError("timeouts must be positive and max_retries non-negative")
        if self.queue_capacity < self.pool_size:
            raise ValueError("queue_capacity must be at least pool_size")

    @classmethod
    def from_mapping(cls, raw: dict) -> "BrokerConfig":
        kwargs = {}
        for key in ("pool_size", "max_uses", "max_retries", "queue_capacity"):
            if key in raw:
                kwargs[key] = int(raw[key])
        if "job_timeout_ms" in raw:
            kwargs["job_timeout"] = float(raw["job_timeout_ms"]) / 1000.0
        if "scheduler_period_ms" in raw:
            kwargs["scheduler_period"] = float(raw["scheduler_period_ms"]) / 1000.0
        return cls(**kwargs)


@dataclass(frozen=True)
class JobRequest:
    user_id: str
    app_id: str
    app_revision: int
    workbook_id: str
    workbook_revision: int
    inputs: dict
    pressed: str | None = None


@dataclass
class Job:
    job_id: str
    user_id: str
    app_id: str
    app_revision: int
    workbook_id: str
    workbook_revision: int
    inputs: dict
    pressed: str | None
    status: JobStatus = JobStatus.QUEUED
    attempts: int = 0
    enqueued_at: float = 0.0
    started_at: float | None = None  # monotonic; timeout accounting
    started_wall: float | None = None
    finished_at: float | None = None
    result: RunResult | None = None
    failure: tuple[str, str] | None = None  # (code, message)
    epoch: int = 0  # bumped on every assignment/failure; stale callbacks no-op

    def snapshot(self) -> "Job":
        return replace(self)


@dataclass
class Worker:
    worker_id: int
    state: WorkerState = WorkerState.IDLE
    loaded: tuple[str, int] | None = None
    workbook: Workbook | None = None
    uses: int = 0
    job_id: str | None = None


@dataclass(frozen=True)
class FaultEvent:
    start_index: int
    action: str  # "kill" | "kill_after_result" | "delay"
    delay_ms: int = 0


class FaultPlan:
    def __init__(self, events: list[FaultEvent] = ()):  # type: ignore[assignment]
        self._by_index: dict[int, list[FaultEvent]] = {}
        for event in events or ():
            self._by_index.setdefault(event.start_index, []).append(event)

    def events_for(self, start_index: int) -> list[FaultEvent]:
        return self._by_index.get(start_index, [])

    @classmethod
    def from_file(cls, path: str) -> "FaultPlan":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls([
            FaultEvent(int(e["start_index"]), e["action"], int(e.get("delay_ms", 0)))
            for e in raw
        ])

    @classmethod
    def from_env(cls) -> "FaultPlan | None":
        path = os.environ.get("BROKER_FAULT_PLAN")
        return cls.from_file(path) if path else None


Runner = Callable[[Job, Workbook], RunResult]
Loader = Callable[[str, int], Workbook]
AuditSink = Callable[[Job, str, RunResult | None, int], None]


class Broker:
    def __init__(
        self,
        config: BrokerConfig,
        runner: Runner,
        loader: Loader,
        audit_sink: AuditSink | None = None,
        on_terminal: Callable[[Job], None] | None = None,
        fault_plan: FaultPlan | None = None,
    ):
        self.config = config
        self._runner = runner
        self._loader = loader
        self._audit_sink = audit_sink
        self._on_terminal = on_terminal
        self._faults = fault_plan or FaultPlan.from_env()
        self._lock = threading.RLock()
        self._queue: deque[str] = deque()
        self._jobs: dict[str, Job] = {}
        self._workers: list[Worker] = [Worker(i) for i in range(config.pool_size)]
        self._next_worker_id = config.pool_size
        self._start_counter = 0
        self._threads: set[threading.Thread] = set()
        self._stop = threading.Event()
        self._scheduler: threading.Thread | None = None
        self.events: list[tuple] = []  # (kind, job_id, detail) for tests/diagnostics

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> None:
        if self._scheduler is not None:
            return
        self._scheduler = threading.Thread(
            target=self._scheduler_loop, name="broker-scheduler", daemon=True
        )
        self._scheduler.start()

    def shutdown(self, grace: float = 5.0) -> None:
        """Stop scheduling; queued jobs fail with code SHUTDOWN (documented)."""
        self._stop.set()
        if self._scheduler is not None:
            self._scheduler.join(timeout=grace)
            self._scheduler = None
        deadline = time.monotonic() + grace
        for thread in list(self._threads):
            thread.join(timeout=max(0.0, deadline - time.monotonic()))
        terminal: list[Job] = []
        with self._lock:
            while self._queue:
                job = self._jobs[self._queue.popleft()]
                self._fail(job, "SHUTDOWN", "broker shut down before the job ran")
                terminal.append(job.snapshot())
            for job in self._jobs.values():
                if job.status is JobStatus.RUNNING:
                    job.epoch += 1
                    self._fail(job, "SHUTDOWN", "broker shut down during the job")
                    terminal.append(job.snapshot())
        for job in terminal:
            self._notify_terminal(job)

    # -- public API --------------------------------------------------------------

    def submit(self, request: JobRequest) -> str:
        with self._lock:
            if len(self._queue) >= self.config.queue_capacity:
                raise QueueFull(f"queue is at capacity {self.config.queue_capacity}")
            job = Job(
                job_id=uuid.uuid4().hex,
                user_id=request.user_id,
                app_id=request.app_id,
                app_revision=request.app_revision,
                workbook_id=request.workbook_id,
                workbook_revision=request.workbook_revision,
                inputs=dict(request.inputs),
                pressed=request.pressed,
                enqueued_at=time.time(),
            )
            self._jobs[job.job_id] = job
            self._queue.append(job.job_id)
            return job.job_id

    def status(self, job_id: str) -> Job:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(job_id)
            return job.snapshot()

    def cancel(self, job_id: str) -> bool:
        """True only for QUEUED jobs; running jobs run to completion."""
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(job_id)
            if job.status is not JobStatus.QUEUED:
                return False
            self._queue.remove(job_id)
            self._fail(job, "CANCELLED", "cancelled while queued")
            snapshot = job.snapshot()
        self._notify_terminal(snapshot)
        return True

    def drain(self, timeout: float = 30.0) -> bool:
        """Wait until every submitted job is terminal (test/ops helper)."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                if all(
                    j.status in (JobStatus.DONE, JobStatus.FAILED)
                    for j in self._jobs.values()
                ):
                    return True
            time.sleep(0.005)
        return False

    # -- scheduler ------------------------------------------------------------------

    def _scheduler_loop(self) -> None:
        while not self._stop.is_set():
            self.dispatch_cycle()
            self._stop.wait(self.config.scheduler_period)

    def dispatch_cycle(self) -> list[tuple[int, str]]:
        """One scheduling step: reap timeouts, then assign queued jobs to idle
        workers (oldest job first).  Returns the (worker_id, job_id) pairs."""
        to_notify: list[Job] = []
        assignments: list[tuple[Worker, Job, int, list[FaultEvent]]] = []
        with self._lock:
            now = time.monotonic()
            for index, worker in enumerate(self._workers):
                if worker.state is WorkerState.BUSY and worker.job_id is not None:
                    job = self._jobs[worker.job_id]
                    if (
                        job.status is JobStatus.RUNNING
                        and job.started_at is not None
                        and now - job.started_at > self.config.job_timeout
                    ):
                        self.events.append(("timeout", job.job_id, worker.worker_id))
                        terminal = self._reap_attempt(
                            index, job, f"timed out after {self.config.job_timeout}s"
                        )
                        if terminal is not None:
                            to_notify.append(terminal)
            for index, worker in enumerate(self._workers):
                if not self._queue:
                    break
                if worker.state is not WorkerState.IDLE:
                    continue
                job = self._jobs[self._queue.popleft()]
                job.status = JobStatus.RUNNING
                job.attempts += 1
                job.epoch += 1
                job.started_at = time.monotonic()
                job.started_wall = time.time()
                worker.state = WorkerState.BUSY
                worker.job_id = job.job_id
                start_index = self._start_counter
                self._start_counter += 1
                faults = self._faults.events_for(start_index) if self._faults else []
                assignments.append((worker, job, job.epoch, faults))
                self.events.append(("dispatch", job.job_id, worker.worker_id))
        for worker, job, epoch, faults in assignments:
            thread = threading.Thread(
                target=self._execute,
                args=(worker, job, epoch, faults),
                name=f"worker-{worker.worker_id}",
                daemon=True,
            )
            self._threads.add(thread)
            thread.start()
        for job in to_notify:
            self._notify_terminal(job)
        return [(w.worker_id, j.job_id) for w, j, _, _ in assignments]

    # -- execution -------------------------------------------------------------------

    def _execute(self, worker: Worker, job: Job, epoch: int, faults: list[FaultEvent]) -> None:
        terminal: Job | None = None
        try:
            try:
                for event in faults:
                    if event.action == "delay":
                        time.sleep(event.delay_ms / 1000.0)
                    elif event.action == "kill":
                        raise WorkerCrashed("fault injection: killed before run")
                ref = (job.workbook_id, job.workbook_revision)
                if worker.workbook is None or worker.loaded != ref:
                    worker.workbook = self._loader(*ref)
                    worker.loaded = ref
                result = self._runner(job, worker.workbook)
                for event in faults:
                    if event.action == "kill_after_result":
                        raise WorkerCrashed("fault injection: killed before audit")
            except WorkerCrashed:
                raise
            except Exception as exc:  # loader/runner defects are system errors
                raise WorkerCrashed(f"worker raised {exc.__class__.__name__}: {exc}") from exc
            terminal = self._complete_success(worker, job, epoch, result)
        except WorkerCrashed as crash:
            terminal = self._handle_crash(worker, job, epoch, str(crash))
        finally:
            self._threads.discard(threading.current_thread())
        if terminal is not None:
            self._notify_terminal(terminal)

    def _complete_success(
        self, worker: Worker, job: Job, epoch: int, result: RunResult
    ) -> Job | None:
        with self._lock:
            if job.epoch != epoch or job.status is not JobStatus.RUNNING:
                return None  # stale attempt: a timeout already reaped this worker
            if self._audit_sink is not None:
                try:
                    self._audit_sink(job, result.outcome, result, job.attempts)
                except Exception as exc:
                    self.events.append(("audit_failure", job.job_id, str(exc)))
                    self._retire_worker(worker)
                    self._fail(job, "SYSTEM_ERROR", f"audit write failed: {exc}")
                    return job.snapshot()
            job.status = JobStatus.DONE
            job.result = result
            job.finished_at = time.time()
            worker.uses += 1
            self.events.append(("complete", job.job_id, result.outcome))
            if worker.uses >= self.config.max_uses:
                self._retire_worker(worker)  # recycle: next job gets a fresh instance
            else:
                worker.state = WorkerState.IDLE
                worker.job_id = None
            return job.snapshot()

    def _handle_crash(self, worker: Worker, job: Job, epoch: int, reason: str) -> Job | None:
        with self._lock:
            if job.epoch != epoch or job.status is not JobStatus.RUNNING:
                return None
            index = self._workers.index(worker)
            self.events.append(("crash", job.job_id, worker.worker_id))
            return self._reap_attempt(index, job, reason)

    def _reap_attempt(self, worker_index: int, job: Job, reason: str) -> Job | None:
        """Declare the worker dead, then retry or fail the job. Lock held."""
        worker = self._workers[worker_index]
        worker.state = WorkerState.DEAD
        worker.workbook = None
        worker.job_id = None
        self._workers[worker_index] = Worker(self._next_worker_id)
        self._next_worker_id += 1
        job.epoch += 1
        if self._audit_sink is not None:
            try:
                self._audit_sink(job, "SYSTEM_ERROR", None, job.attempts)
            except Exception as exc:
                self.events.append(("audit_failure", job.job_id, str(exc)))
        if job.attempts <= self.config.max_retries:
            job.status = JobStatus.QUEUED
            job.started_at = None
            self._queue.appendleft(job.job_id)  # retried job keeps its place in line
            self.events.append(("requeue", job.job_id, job.attempts))
            return None
        self._fail(job, "SYSTEM_ERROR", reason)
        return job.snapshot()

    def _retire_worker(self, worker: Worker) -> None:
        index = self._workers.index(worker)
        self._workers[index] = Worker(self._next_worker_id)
        self._next_worker_id += 1

    def _fail(self, job: Job, code: str, message: str) -> None:
        job.status = JobStatus.FAILED
        job.failure = (code, message)
        job.finished_at = time.time()
        self.events.append(("failed", job.job_id, code))

    def _notify_terminal(self, job: Job) -> None:
        if self._on_terminal is not None:
            try:
                self._on_terminal(job)
            except Exception:
                pass

    # -- introspection -----------------------------------------------------------------

    def worker_states(self) -> list[tuple[int, str, int]]:
        with self._lock:
            return [(w.worker_id, w.state.value, w.uses) for w in self._workers]

    def queue_length(self) -> int:
        with self._lock:
            return len(self._queue)
