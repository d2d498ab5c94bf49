"""HTTP API (REST, /api/v1) tying registry, broker, and the engine together.

All runs are asynchronous: POST returns 202 with a job id, clients poll.
Completed jobs are journaled to disk so results survive a restart; jobs still
queued at shutdown fail with the documented SHUTDOWN code instead of vanishing.
"""

from __future__ import annotations

import json
import os
import re
import threading
from contextlib import asynccontextmanager
from pathlib import Path
from typing import Any

from fastapi import Depends, FastAPI, Query, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from ..appdef import (
    AppDefFormatError,
    AppDefinition,
    ChoiceList,
    RadioButtons,
    apply_submission,
    loads_appdef,
)
from ..broker import Broker, Job, JobRequest, JobStatus, QueueFull, UnknownJob
from ..engine import Workbook, value_to_json
from ..registry import (
    AssetKind,
    ContentInvalid,
    IntegrityError,
    NoPublishedVersion,
    NotArchived,
    NotDraft,
    PermissionDenied,
    Registry,
    Role,
    UnknownAsset,
    UnknownRevision,
    User,
    canonical_json,
    digest,
)
from .config import ServiceConfig


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


_DOMAIN_ERRORS: list[tuple[type, int, str]] = [
    (PermissionDenied, 403, "FORBIDDEN"),
    (NoPublishedVersion, 404, "NOT_FOUND"),
    (UnknownAsset, 404, "NOT_FOUND"),
    (UnknownRevision, 404, "NOT_FOUND"),
    (UnknownJob, 404, "NOT_FOUND"),
    (ContentInvalid, 400, "VALIDATION"),
    (AppDefFormatError, 400, "VALIDATION"),
    (NotDraft, 409, "CONFLICT"),
    (NotArchived, 409, "CONFLICT"),
    (IntegrityError, 409, "CONFLICT"),
    (QueueFull, 429, "QUEUE_FULL"),
]


def _to_api_error(exc: Exception) -> ApiError:
    for cls, status, code in _DOMAIN_ERRORS:
        if isinstance(exc, cls):
            return ApiError(status, code, str(exc))
    # internal details never leak into 5xx messages
    return ApiError(500, "INTERNAL", "internal error")


_JOB_ID_RE = re.compile(r"^[0-9a-f]{32}$")


class RunBody(BaseModel):
    inputs: dict[str, Any] = {}
    pressed: str | None = None


class WorkbookUploadBody(BaseModel):
    id: str
    content: str


class AppdefUploadBody(BaseModel):
    content: Any


class PublishBody(BaseModel):
    revision: int
    note: str = ""


class RollbackBody(BaseModel):
    revision: int


class ServiceState:
    """Shared state behind the request handlers; all mutation goes through
    the registry's and broker's own serialized paths."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        store = Path(config.store_path)
        self.registry = Registry(store, users=[u.to_user() for u in config.users])
        self.tokens = {u.token: u.user_id for u in config.users}
        self.jobs_dir = store / "jobs"
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self._appdef_cache: dict[tuple[str, int], AppDefinition] = {}
        self._options_cache: dict[tuple[str, int], Workbook] = {}
        self._cache_lock = threading.Lock()
        self.broker = Broker(
            config.broker,
            runner=self._run_job,
            loader=self.registry.load_workbook_revision,
            audit_sink=self._audit_job,
            on_terminal=self._journal_job,
        )

    # -- broker callbacks -------------------------------------------------------

    def appdef_for(self, app_id: str, revision: int) -> AppDefinition:
        key = (app_id, revision)
        with self._cache_lock:
            cached = self._appdef_cache.get(key)
        if cached is not None:
            return cached
        content = self.registry.load_content(AssetKind.APPDEF, app_id, revision)
        appdef = loads_appdef(content)
        with self._cache_lock:
            self._appdef_cache[key] = appdef
        return appdef

    def reader_workbook(self, workbook_id: str, revision: int) -> Workbook:
        """Calculated instance for read-only snapshots (choice options)."""
        key = (workbook_id, revision)
        with self._cache_lock:
            wb = self._options_cache.get(key)
        if wb is None:
            wb = self.registry.load_workbook_revision(workbook_id, revision)
            wb.recalc_full()
            with self._cache_lock:
                if len(self._options_cache) > 8:
                    self._options_cache.clear()
                self._options_cache[key] = wb
        return wb

    def _run_job(self, job: Job, wb: Workbook):
        appdef = self.appdef_for(job.app_id, job.app_revision)
        return apply_submission(appdef, wb, job.inputs, job.pressed)

    def _audit_job(self, job: Job, outcome: str, result, attempt: int) -> None:
        self.registry.record_audit(
            user_id=job.user_id,
            app_id=job.app_id,
            app_revision=job.app_revision,
            workbook_id=job.workbook_id,
            workbook_revision=job.workbook_revision,
            input_digest=digest({"inputs": job.inputs, "pressed": job.pressed}),
            output_digest=digest(result.to_json()) if result is not None else "",
            outcome=outcome,
        )

    def _journal_job(self, job: Job) -> None:
        payload = job_payload(job)
        path = self.jobs_dir / f"{job.job_id}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_json(payload), encoding="utf-8")
        os.replace(tmp, path)

    def journaled_job(self, job_id: str) -> dict | None:
        if not _JOB_ID_RE.match(job_id):
            return None
        path = self.jobs_dir / f"{job_id}.json"
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))


def job_payload(job: Job) -> dict:
    return {
        "job_id": job.job_id,
        "status": job.status.value,
        "user_id": job.user_id,
        "app_id": job.app_id,
        "app_revision": job.app_revision,
        "workbook_id": job.workbook_id,
        "workbook_revision": job.workbook_revision,
        "attempts": job.attempts,
        "enqueued_at": job.enqueued_at,
        "started_at": job.started_wall,
        "finished_at": job.finished_at,
        "result": job.result.to_json() if job.result is not None else None,
        "failure": (
            {"code": job.failure[0], "message": job.failure[1]}
            if job.failure is not None
            else None
        ),
    }


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        state.broker.start()
        yield
        state.broker.shutdown()

    app = FastAPI(title="sheetbridge", lifespan=lifespan)
    app.state.service = state

    if config.ui_path and Path(config.ui_path).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=config.ui_path, html=True), name="ui")

    @app.exception_handler(ApiError)
    async def handle_api_error(_, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(Exception)
    async def handle_unexpected(_, exc: Exception):
        api = _to_api_error(exc)
        return JSONResponse(
            status_code=api.status,
            content={"error": {"code": api.code, "message": api.message}},
        )

    def current_user(request: Request) -> User:
        header = request.headers.get("authorization", "")
        if not header.startswith("Bearer "):
            raise ApiError(401, "UNAUTHORIZED", "missing bearer token")
        user_id = state.tokens.get(header[len("Bearer "):].strip())
        user = state.registry.get_user(user_id) if user_id else None
        if user is None:
            raise ApiError(401, "UNAUTHORIZED", "unknown token")
        return user

    def guard(call):
        try:
            return call()
        except ApiError:
            raise
        except Exception as exc:
            raise _to_api_error(exc) from exc

    # -- end-user surface ----------------------------------------------------------

    @app.get("/api/v1/apps")
    def list_apps(user: User = Depends(current_user)):
        live = guard(lambda: state.registry.list_live_apps(user))
        return {
            "apps": [
                {
                    "app_id": entry.appdef.app_id,
                    "title": entry.appdef.title,
                    "revision": entry.version.revision,
                    "workbook": {
                        "id": entry.workbook_id,
                        "revision": entry.workbook_revision,
                    },
                }
                for entry in live
            ]
        }

    @app.get("/api/v1/apps/{app_id}")
    def get_app(app_id: str, user: User = Depends(current_user)):
        live = guard(lambda: state.registry.get_live(user, app_id))
        document = json.loads(
            state.registry.load_content(AssetKind.APPDEF, app_id, live.version.revision)
        )
        wb = guard(lambda: state.reader_workbook(live.workbook_id, live.workbook_revision))
        options: dict[str, list] = {}
        for component in live.appdef.walk():
            if isinstance(component, (ChoiceList, RadioButtons)) and component.options_from:
                grid = wb.get_range(component.options_from)
                options[component.id] = [
                    value_to_json(v) for v in grid.cells() if v is not None
                ]
        return {
            "app_id": app_id,
            "title": live.appdef.title,
            "revision": live.version.revision,
            "workbook": {"id": live.workbook_id, "revision": live.workbook_revision},
            "document": document,
            "options": options,
        }

    @app.post("/api/v1/apps/{app_id}/runs", status_code=202)
    def submit_run(app_id: str, body: RunBody, user: User = Depends(current_user)):
        live = guard(lambda: state.registry.get_live(user, app_id))
        request = JobRequest(
            user_id=user.user_id,
            app_id=app_id,
            app_revision=live.version.revision,
            workbook_id=live.workbook_id,
            workbook_revision=live.workbook_revision,
            inputs=body.inputs,
            pressed=body.pressed,
        )
        job_id = guard(lambda: state.broker.submit(request))
        return {"job_id": job_id}

    def _load_job(job_id: str, user: User) -> dict:
        try:
            payload = job_payload(state.broker.status(job_id))
        except UnknownJob:
            payload = state.journaled_job(job_id)
            if payload is None:
                raise ApiError(404, "NOT_FOUND", "no such run") from None
        if payload["user_id"] != user.user_id and user.role < Role.ADMIN:
            # hide other users' runs entirely
            raise ApiError(404, "NOT_FOUND", "no such run")
        return payload

    @app.get("/api/v1/runs/{job_id}")
    def get_run(job_id: str, user: User = Depends(current_user)):
        payload = _load_job(job_id, user)
        return Response(content=canonical_json(payload), media_type="application/json")

    @app.get("/api/v1/runs/{job_id}/report")
    def get_report(job_id: str, user: User = Depends(current_user)):
        payload = _load_job(job_id, user)
        result = payload.get("result")
        if payload["status"] != JobStatus.DONE.value or not result or not result.get("report"):
            raise ApiError(404, "NOT_FOUND", "no report for this run")
        return Response(
            content=canonical_json(result["report"]), media_type="application/json"
        )

    # -- admin surface -----------------------------------------------------------------

    @app.post("/api/v1/admin/workbooks", status_code=201)
    def upload_workbook(body: WorkbookUploadBody, user: User = Depends(current_user)):
        version = guard(
            lambda: state.registry.upload(
                user, AssetKind.WORKBOOK, body.content, asset_id=body.id
            )
        )
        return version.to_json()

    @app.post("/api/v1/admin/appdefs", status_code=201)
    def upload_appdef(body: AppdefUploadBody, user: User = Depends(current_user)):
        content = (
            body.content if isinstance(body.content, str) else json.dumps(body.content, indent=2)
        )
        version = guard(lambda: state.registry.upload(user, AssetKind.APPDEF, content))
        return version.to_json()

    @app.post("/api/v1/admin/appdefs/{app_id}/publish")
    def publish(app_id: str, body: PublishBody, user: User = Depends(current_user)):
        version = guard(
            lambda: state.registry.approve_and_publish(
                user, AssetKind.APPDEF, app_id, body.revision, body.note
            )
        )
        return version.to_json()

    @app.post("/api/v1/admin/appdefs/{app_id}/rollback")
    def rollback(app_id: str, body: RollbackBody, user: User = Depends(current_user)):
        version = guard(
            lambda: state.registry.rollback(user, AssetKind.APPDEF, app_id, body.revision)
        )
        return version.to_json()

    @app.get("/api/v1/admin/audit")
    def audit(
        user: User = Depends(current_user),
        user_filter: str | None = Query(default=None, alias="user"),
        app: str | None = Query(default=None),
        from_: str | None = Query(default=None, alias="from"),
        to: str | None = Query(default=None),
    ):
        if user.role < Role.ADMIN:
            raise ApiError(403, "FORBIDDEN", "audit queries are admin-only")
        records = state.registry.query_audit(
            user_id=user_filter, app_id=app, since=from_, until=to
        )
        return {"records": [r.to_json() for r in records]}

    return app
