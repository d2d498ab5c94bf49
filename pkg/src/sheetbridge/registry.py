"""Versioned, file-backed storage for workbooks and app definitions.

Revisions are immutable once written; publish/rollback flip states atomically
under a single writer lock, so readers are linearizable with respect to them.
The audit log is append-only and hash-chained: each record carries the digest
of its predecessor, making after-the-fact edits evident.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .appdef import AppDefFormatError, AppDefinition, loads_appdef, validate_appdef
from .engine import CapExceeded, DuplicateName, FormatError, Workbook, load_workbook


class Role(enum.IntEnum):
    END_USER = 1
    AUTHOR = 2
    ADMIN = 3


class AssetKind(str, enum.Enum):
    WORKBOOK = "WORKBOOK"
    APPDEF = "APPDEF"


class VersionState(str, enum.Enum):
    DRAFT = "DRAFT"
    PUBLISHED = "PUBLISHED"
    ARCHIVED = "ARCHIVED"


class PermissionDenied(Exception):
    pass


class ContentInvalid(ValueError):
    def __init__(self, details: str):
        super().__init__(details)
        self.details = details


class UnknownAsset(KeyError):
    pass


class UnknownRevision(KeyError):
    pass


class NotDraft(ValueError):
    pass


class NotArchived(ValueError):
    pass


class NoPublishedVersion(LookupError):
    pass


class IntegrityError(RuntimeError):
    pass


@dataclass(frozen=True)
class User:
    user_id: str
    display_name: str
    role: Role
    app_grants: frozenset[str] = frozenset()

    def can_run(self, app_id: str) -> bool:
        return self.role >= Role.AUTHOR or app_id in self.app_grants


@dataclass(frozen=True)
class ApprovalRecord:
    approver: str
    at: str
    note: str

    def to_json(self) -> dict:
        return {"approver": self.approver, "at": self.at, "note": self.note}


@dataclass(frozen=True)
class StoredVersion:
    asset_id: str
    kind: AssetKind
    revision: int
    content_hash: str
    state: VersionState
    uploaded_by: str
    uploaded_at: str
    approval: ApprovalRecord | None = None

    def to_json(self) -> dict:
        return {
            "asset_id": self.asset_id,
            "kind": self.kind.value,
            "revision": self.revision,
            "content_hash": self.content_hash,
            "state": self.state.value,
            "uploaded_by": self.uploaded_by,
            "uploaded_at": self.uploaded_at,
            "approval": self.approval.to_json() if self.approval else None,
        }


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    at: str
    user_id: str
    app_id: str
    app_revision: int
    workbook_id: str
    workbook_revision: int
    input_digest: str
    output_digest: str
    outcome: str
    prev_hash: str
    hash: str

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "at": self.at,
            "user_id": self.user_id,
            "app_id": self.app_id,
            "app_revision": self.app_revision,
            "workbook_id": self.workbook_id,
            "workbook_revision": self.workbook_revision,
            "input_digest": self.input_digest,
            "output_digest": self.output_digest,
            "outcome": self.outcome,
            "prev_hash": self.prev_hash,
            "hash": self.hash,
        }


@dataclass
class LiveApp:
    appdef: AppDefinition
    version: StoredVersion
    workbook_id: str
    workbook_revision: int


def canonical_json(payload: object) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest(payload: object) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def _content_hash(content: str) -> str:
    return hashlib.sha256(content.encode("utf-8")).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


_GENESIS = "0" * 64

_KIND_DIRS = {AssetKind.WORKBOOK: "workbooks", AssetKind.APPDEF: "appdefs"}


@dataclass
class _AssetRecord:
    versions: dict[int, StoredVersion] = field(default_factory=dict)
    published: int | None = None

    @property
    def max_revision(self) -> int:
        return max(self.versions, default=0)


class Registry:
    def __init__(self, root: str | Path, users: Iterable[User] = ()):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._users: dict[str, User] = {u.user_id: u for u in users}
        self._lock = threading.RLock()
        self._assets: dict[tuple[AssetKind, str], _AssetRecord] = {}
        self._audit: list[AuditRecord] = []
        self._audit_path = self.root / "audit.log"
        # parsed appdefs are immutable per revision; cache them for readers
        self._appdef_cache: dict[tuple[str, int, str], AppDefinition] = {}
        self._load_from_disk()

    # -- users -------------------------------------------------------------------

    def add_user(self, user: User) -> None:
        with self._lock:
            self._users[user.user_id] = user

    def get_user(self, user_id: str) -> User | None:
        return self._users.get(user_id)

    # -- disk layout ---------------------------------------------------------------

    def _asset_dir(self, kind: AssetKind, asset_id: str) -> Path:
        return self.root / _KIND_DIRS[kind] / asset_id

    def _version_dir(self, kind: AssetKind, asset_id: str, revision: int) -> Path:
        return self._asset_dir(kind, asset_id) / str(revision)

    def _write_meta(self, version: StoredVersion) -> None:
        path = self._version_dir(version.kind, version.asset_id, version.revision) / "meta"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(canonical_json(version.to_json()) + "\n", encoding="utf-8")
        os.replace(tmp, path)

    def _load_from_disk(self) -> None:
        for kind, dirname in _KIND_DIRS.items():
            base = self.root / dirname
            if not base.is_dir():
                continue
            for asset_dir in sorted(base.iterdir()):
                if not asset_dir.is_dir():
                    continue
                record = _AssetRecord()
                for version_dir in sorted(asset_dir.iterdir(), key=lambda p: p.name):
                    meta_path = version_dir / "meta"
                    if not meta_path.is_file():
                        continue
                    meta = json.loads(meta_path.read_text(encoding="utf-8"))
                    approval = (
                        ApprovalRecord(**meta["approval"]) if meta.get("approval") else None
                    )
                    version = StoredVersion(
                        asset_id=meta["asset_id"],
                        kind=AssetKind(meta["kind"]),
                        revision=int(meta["revision"]),
                        content_hash=meta["content_hash"],
                        state=VersionState(meta["state"]),
                        uploaded_by=meta["uploaded_by"],
                        uploaded_at=meta["uploaded_at"],
                        approval=approval,
                    )
                    record.versions[version.revision] = version
                    if version.state is VersionState.PUBLISHED:
                        record.published = version.revision
                self._assets[(kind, asset_dir.name)] = record
        if self._audit_path.is_file():
            with self._audit_path.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._audit.append(AuditRecord(**json.loads(line)))

    # -- upload ---------------------------------------------------------------------

    def _validate_content(self, kind: AssetKind, asset_id: str | None, content: str) -> str:
        if kind is AssetKind.WORKBOOK:
            if asset_id is None:
                raise ContentInvalid("workbook uploads require an asset id")
            try:
                load_workbook(content)
            except (FormatError, CapExceeded, DuplicateName) as exc:
                raise ContentInvalid(str(exc)) from exc
            return asset_id
        try:
            appdef = loads_appdef(content)
        except AppDefFormatError as exc:
            raise ContentInvalid(str(exc)) from exc
        if asset_id is not None and asset_id != appdef.app_id:
            raise ContentInvalid(
                f"asset id {asset_id!r} does not match document app_id {appdef.app_id!r}"
            )
        ref = appdef.workbook_ref
        try:
            wb = self.load_workbook_revision(ref.id, ref.revision)
        except (UnknownAsset, UnknownRevision) as exc:
            raise ContentInvalid(
                f"pinned workbook {ref.id!r} r{ref.revision} does not exist"
            ) from exc
        report = validate_appdef(appdef, wb)
        if not report.ok:
            issues = "; ".join(f"{e.component_id}: {e.reason}" for e in report.errors)
            raise ContentInvalid(issues)
        return appdef.app_id

    def upload(
        self,
        author: User,
        kind: AssetKind,
        content: str,
        asset_id: str | None = None,
    ) -> StoredVersion:
        """Store a new DRAFT revision (previous max + 1); content is immutable."""
        if author.role < Role.AUTHOR:
            raise PermissionDenied(f"{author.user_id} may not upload assets")
        resolved_id = self._validate_content(kind, asset_id, content)
        with self._lock:
            record = self._assets.setdefault((kind, resolved_id), _AssetRecord())
            revision = record.max_revision + 1
            version = StoredVersion(
                asset_id=resolved_id,
                kind=kind,
                revision=revision,
                content_hash=_content_hash(content),
                state=VersionState.DRAFT,
                uploaded_by=author.user_id,
                uploaded_at=_now(),
            )
            version_dir = self._version_dir(kind, resolved_id, revision)
            version_dir.mkdir(parents=True, exist_ok=False)
            (version_dir / "content").write_text(content, encoding="utf-8")
            self._write_meta(version)
            record.versions[revision] = version
            return version

    # -- publish / rollback ------------------------------------------------------------

    def _record(self, kind: AssetKind, asset_id: str) -> _AssetRecord:
        record = self._assets.get((kind, asset_id))
        if record is None:
            raise UnknownAsset(f"no {kind.value.lower()} asset {asset_id!r}")
        return record

    def _set_state(
        self, version: StoredVersion, state: VersionState, approval: ApprovalRecord | None
    ) -> StoredVersion:
        updated = replace(version, state=state, approval=approval)
        self._write_meta(updated)
        record = self._assets[(version.kind, version.asset_id)]
        record.versions[version.revision] = updated
        return updated

    def approve_and_publish(
        self, admin: User, kind: AssetKind, asset_id: str, revision: int, note: str = ""
    ) -> StoredVersion:
        """Atomically make a DRAFT revision the single live one."""
        if admin.role < Role.ADMIN:
            raise PermissionDenied(f"{admin.user_id} may not publish")
        with self._lock:
            record = self._record(kind, asset_id)
            version = record.versions.get(revision)
            if version is None:
                raise UnknownRevision(f"{asset_id!r} has no revision {revision}")
            if version.state is not VersionState.DRAFT:
                raise NotDraft(
                    f"revision {revision} is {version.state.value}; only drafts publish"
                )
            approval = ApprovalRecord(approver=admin.user_id, at=_now(), note=note)
            if record.published is not None:
                old = record.versions[record.published]
                self._set_state(old, VersionState.ARCHIVED, old.approval)
            published = self._set_state(version, VersionState.PUBLISHED, approval)
            record.published = revision
            return published

    def rollback(
        self, admin: User, kind: AssetKind, asset_id: str, revision: int
    ) -> StoredVersion:
        """Return an ARCHIVED revision to PUBLISHED; verifies content integrity."""
        if admin.role < Role.ADMIN:
            raise PermissionDenied(f"{admin.user_id} may not roll back")
        with self._lock:
            record = self._record(kind, asset_id)
            version = record.versions.get(revision)
            if version is None:
                raise UnknownRevision(f"{asset_id!r} has no revision {revision}")
            if version.state is not VersionState.ARCHIVED:
                raise NotArchived(
                    f"revision {revision} is {version.state.value}; "
                    "only archived revisions roll back (drafts need approval)"
                )
            content = self.load_content(kind, asset_id, revision)
            if _content_hash(content) != version.content_hash:
                raise IntegrityError(
                    f"{asset_id!r} r{revision} content digest mismatch"
                )
            if record.published is not None:
                old = record.versions[record.published]
                self._set_state(old, VersionState.ARCHIVED, old.approval)
            published = self._set_state(version, VersionState.PUBLISHED, version.approval)
            record.published = revision
            return published

    # -- reads ----------------------------------------------------------------------

    def load_content(self, kind: AssetKind, asset_id: str, revision: int) -> str:
        path = self._version_dir(kind, asset_id, revision) / "content"
        if not path.is_file():
            if (self.root / _KIND_DIRS[kind] / asset_id).is_dir():
                raise UnknownRevision(f"{asset_id!r} has no revision {revision}")
            raise UnknownAsset(f"no {kind.value.lower()} asset {asset_id!r}")
        return path.read_text(encoding="utf-8")

    def load_workbook_revision(self, workbook_id: str, revision: int) -> Workbook:
        content = self.load_content(AssetKind.WORKBOOK, workbook_id, revision)
        wb = load_workbook(content)
        wb.origin = (workbook_id, revision)
        return wb

    def get_version(
        self, user: User, kind: AssetKind, asset_id: str, revision: int
    ) -> tuple[StoredVersion, str]:
        """Metadata + content of any revision; archived access is AUTHOR+."""
        with self._lock:
            record = self._record(kind, asset_id)
            version = record.versions.get(revision)
        if version is None:
            raise UnknownRevision(f"{asset_id!r} has no revision {revision}")
        if version.state is not VersionState.PUBLISHED and user.role < Role.AUTHOR:
            raise PermissionDenied("only authors may read non-published revisions")
        return version, self.load_content(kind, asset_id, revision)

    def versions(self, kind: AssetKind, asset_id: str) -> list[StoredVersion]:
        with self._lock:
            record = self._record(kind, asset_id)
            return [record.versions[r] for r in sorted(record.versions)]

    def get_live(self, user: User, app_id: str) -> LiveApp:
        """The unique PUBLISHED appdef revision and the workbook revision it pins.

        Never hands a DRAFT or ARCHIVED revision to an END_USER, under any
        interleaving with publish/rollback.
        """
        if not user.can_run(app_id):
            raise PermissionDenied(f"{user.user_id} has no grant for {app_id!r}")
        with self._lock:
            record = self._assets.get((AssetKind.APPDEF, app_id))
            if record is None or record.published is None:
                raise NoPublishedVersion(f"{app_id!r} has no published revision")
            version = record.versions[record.published]
        # revision content is immutable, so reading it outside the lock is safe
        cache_key = (app_id, version.revision, version.content_hash)
        appdef = self._appdef_cache.get(cache_key)
        if appdef is None:
            content = self.load_content(AssetKind.APPDEF, app_id, version.revision)
            appdef = loads_appdef(content)
            with self._lock:
                if len(self._appdef_cache) > 64:
                    self._appdef_cache.clear()
                self._appdef_cache[cache_key] = appdef
        if Role[appdef.acl.min_role] > user.role:
            raise PermissionDenied(f"{app_id!r} requires role {appdef.acl.min_role}")
        return LiveApp(
            appdef=appdef,
            version=version,
            workbook_id=appdef.workbook_ref.id,
            workbook_revision=appdef.workbook_ref.revision,
        )

    def list_live_apps(self, user: User) -> list[LiveApp]:
        with self._lock:
            app_ids = [
                asset_id
                for (kind, asset_id), record in self._assets.items()
                if kind is AssetKind.APPDEF and record.published is not None
            ]
        live: list[LiveApp] = []
        for app_id in sorted(app_ids):
            try:
                live.append(self.get_live(user, app_id))
            except (PermissionDenied, NoPublishedVersion):
                continue
        return live

    # -- audit -------------------------------------------------------------------------

    def record_audit(
        self,
        user_id: str,
        app_id: str,
        app_revision: int,
        workbook_id: str,
        workbook_revision: int,
        input_digest: str,
        output_digest: str,
        outcome: str,
    ) -> int:
        """Append one run record; durable (flushed and fsynced) before returning."""
        with self._lock:
            prev_hash = self._audit[-1].hash if self._audit else _GENESIS
            body = {
                "seq": len(self._audit) + 1,
                "at": _now(),
                "user_id": user_id,
                "app_id": app_id,
                "app_revision": app_revision,
                "workbook_id": workbook_id,
                "workbook_revision": workbook_revision,
                "input_digest": input_digest,
                "output_digest": output_digest,
                "outcome": outcome,
                "prev_hash": prev_hash,
            }
            record = AuditRecord(hash=digest(body), **body)
            with self._audit_path.open("a", encoding="utf-8") as fh:
                fh.write(canonical_json(record.to_json()) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._audit.append(record)
            return record.seq

    def query_audit(
        self,
        user_id: str | None = None,
        app_id: str | None = None,
        since: str | None = None,
        until: str | None = None,
    ) -> list[AuditRecord]:
        with self._lock:
            records = list(self._audit)
        out = []
        for record in records:
            if user_id is not None and record.user_id != user_id:
                continue
            if app_id is not None and record.app_id != app_id:
                continue
            if since is not None and record.at < since:
                continue
            if until is not None and record.at > until:
                continue
            out.append(record)
        return out

    def verify_audit_chain(self) -> bool:
        """Re-derive every record hash; raises IntegrityError on tampering."""
        with self._lock:
            records = list(self._audit)
        prev = _GENESIS
        for record in records:
            if record.prev_hash != prev:
                raise IntegrityError(f"audit chain broken before seq {record.seq}")
            body = record.to_json()
            expected = body.pop("hash")
            if digest(body) != expected:
                raise IntegrityError(f"audit record {record.seq} hash mismatch")
            prev = record.hash
        return True
