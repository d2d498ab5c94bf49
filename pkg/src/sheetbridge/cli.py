"""Operator command line: serve the API, validate assets, run apps locally,
and drive a remote server (upload/publish/rollback/audit).

Every failure exits nonzero after printing one machine-readable JSON error
line to stderr: {"error": <code>, "message": <text>}.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from .appdef import (
    AppDefFormatError,
    StaleDefinition,
    apply_submission,
    loads_appdef,
    validate_appdef,
)
from .engine import CapExceeded, DuplicateName, FormatError, load_workbook
from .registry import canonical_json
from .service.config import ConfigError, ServiceConfig


def _fail(code: str, message: str) -> int:
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return 1


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    try:
        config = ServiceConfig.from_env(args.config)
    except ConfigError as exc:
        return _fail("CONFIG", str(exc))
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    return 0


def cmd_validate(args) -> int:
    path = Path(args.file)
    try:
        content = _read(args.file)
    except OSError as exc:
        return _fail("IO", str(exc))
    if path.suffix == ".json":
        try:
            appdef = loads_appdef(content)
        except AppDefFormatError as exc:
            return _fail("VALIDATION", str(exc))
        if not args.workbook:
            print(json.dumps({"ok": True, "checked": "schema only (no --workbook)"}))
            return 0
        try:
            wb = load_workbook(_read(args.workbook))
        except (FormatError, CapExceeded, DuplicateName, OSError) as exc:
            return _fail("VALIDATION", f"workbook: {exc}")
        report = validate_appdef(appdef, wb)
        for issue in report.errors:
            print(json.dumps(issue.to_json()))
        if not report.ok:
            return _fail("VALIDATION", f"{len(report.errors)} issue(s)")
        print(json.dumps({"ok": True, "app_id": appdef.app_id}))
        return 0
    try:
        wb = load_workbook(content)
    except (FormatError, CapExceeded, DuplicateName) as exc:
        return _fail("VALIDATION", str(exc))
    print(json.dumps({"ok": True, "title": wb.title, "cells": wb.populated_count}))
    return 0


def cmd_run(args) -> int:
    """Local one-shot run, no server: appdef + workbook + inputs file."""
    try:
        appdef = loads_appdef(_read(args.appdef))
        wb = load_workbook(_read(args.workbook))
        raw = json.loads(_read(args.inputs))
    except (AppDefFormatError, FormatError, CapExceeded, DuplicateName) as exc:
        return _fail("VALIDATION", str(exc))
    except (OSError, json.JSONDecodeError) as exc:
        return _fail("IO", str(exc))
    report = validate_appdef(appdef, wb)
    if not report.ok:
        for issue in report.errors:
            print(json.dumps(issue.to_json()), file=sys.stderr)
        return _fail("VALIDATION", "definition does not validate against workbook")
    inputs = raw.get("inputs", raw) if isinstance(raw, dict) else {}
    pressed = raw.get("pressed") if isinstance(raw, dict) else None
    try:
        result = apply_submission(appdef, wb, inputs, pressed)
    except StaleDefinition as exc:
        return _fail("CONFLICT", str(exc))
    print(canonical_json(result.to_json()))
    return 0 if result.outcome == "OK" else _fail(result.outcome, result.message or "run failed")


class _Client:
    def __init__(self, args):
        self.base = args.server.rstrip("/")
        self.headers = {"Authorization": f"Bearer {args.token}"}

    def call(self, method: str, path: str, **kwargs) -> tuple[int, dict]:
        response = httpx.request(
            method, self.base + path, headers=self.headers, timeout=120.0, **kwargs
        )
        try:
            body = response.json()
        except ValueError:
            body = {"error": {"code": "INTERNAL", "message": response.text[:200]}}
        return response.status_code, body


def _remote(args, method: str, path: str, **kwargs) -> int:
    try:
        status, body = _Client(args).call(method, path, **kwargs)
    except httpx.HTTPError as exc:
        return _fail("TRANSPORT", str(exc))
    if status >= 400:
        error = body.get("error", {})
        return _fail(error.get("code", "ERROR"), error.get("message", f"HTTP {status}"))
    print(json.dumps(body, indent=2))
    return 0


def cmd_upload(args) -> int:
    try:
        content = _read(args.file)
    except OSError as exc:
        return _fail("IO", str(exc))
    if args.kind == "workbook":
        if not args.id:
            return _fail("USAGE", "--id is required for workbook uploads")
        return _remote(args, "POST", "/api/v1/admin/workbooks",
                       json={"id": args.id, "content": content})
    return _remote(args, "POST", "/api/v1/admin/appdefs",
                   json={"content": json.loads(content)})


def cmd_publish(args) -> int:
    return _remote(args, "POST", f"/api/v1/admin/appdefs/{args.app}/publish",
                   json={"revision": args.revision, "note": args.note})


def cmd_rollback(args) -> int:
    return _remote(args, "POST", f"/api/v1/admin/appdefs/{args.app}/rollback",
                   json={"revision": args.revision})


def cmd_audit(args) -> int:
    params = {}
    if args.user:
        params["user"] = args.user
    if args.app:
        params["app"] = args.app
    if args.since:
        params["from"] = args.since
    if args.until:
        params["to"] = args.until
    return _remote(args, "GET", "/api/v1/admin/audit", params=params)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sheetbridge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="config file (default: $SHEETBRIDGE_CONFIG)")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("validate", help="validate a workbook or appdef file")
    p.add_argument("file")
    p.add_argument("--workbook", help="workbook file for appdef semantic checks")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("run", help="run an appdef locally against a workbook file")
    p.add_argument("appdef")
    p.add_argument("inputs", help="JSON inputs file ({component_id: value} or {inputs, pressed})")
    p.add_argument("--workbook", required=True)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("upload", help="upload a workbook or appdef to a server")
    p.add_argument("--server", default="http://127.0.0.1:8333")
    p.add_argument("--token", required=True)
    p.add_argument("--kind", choices=["workbook", "appdef"], required=True)
    p.add_argument("--id", help="asset id (workbooks only; appdefs carry app_id)")
    p.add_argument("--file", required=True)
    p.set_defaults(fn=cmd_upload)

    p = sub.add_parser("publish", help="approve and publish an appdef revision")
    p.add_argument("--server", default="http://127.0.0.1:8333")
    p.add_argument("--token", required=True)
    p.add_argument("--app", required=True)
    p.add_argument("--revision", type=int, required=True)
    p.add_argument("--note", default="")
    p.set_defaults(fn=cmd_publish)

    p = sub.add_parser("rollback", help="restore an archived appdef revision")
    p.add_argument("--server", default="http://127.0.0.1:8333")
    p.add_argument("--token", required=True)
    p.add_argument("--app", required=True)
    p.add_argument("--revision", type=int, required=True)
    p.set_defaults(fn=cmd_rollback)

    p = sub.add_parser("audit", help="query the audit log")
    p.add_argument("--server", default="http://127.0.0.1:8333")
    p.add_argument("--token", required=True)
    p.add_argument("--user")
    p.add_argument("--app")
    p.add_argument("--since", help="ISO timestamp lower bound")
    p.add_argument("--until", help="ISO timestamp upper bound")
    p.set_defaults(fn=cmd_audit)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
