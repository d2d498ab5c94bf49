"""Versioning, publish/rollback, access control, and the audit chain."""

import json
import threading
from pathlib import Path

import pytest

from sheetbridge.registry import (
    AssetKind,
    ContentInvalid,
    IntegrityError,
    NoPublishedVersion,
    NotArchived,
    NotDraft,
    PermissionDenied,
    Registry,
    Role,
    UnknownRevision,
    User,
    VersionState,
    digest,
)

DEMO = Path(__file__).resolve().parent.parent / "demo"

ADMIN = User("alice", "Alice", Role.ADMIN)
AUTHOR = User("bob", "Bob", Role.AUTHOR)
END_USER = User("carol", "Carol", Role.END_USER, frozenset({"balance-sheet"}))
OUTSIDER = User("dave", "Dave", Role.END_USER)


@pytest.fixture()
def registry(tmp_path):
    return Registry(tmp_path / "store", users=[ADMIN, AUTHOR, END_USER, OUTSIDER])


@pytest.fixture()
def workbook_content():
    return (DEMO / "balance_model.wb").read_text()


@pytest.fixture()
def appdef_content():
    return (DEMO / "balance_sheet_app.json").read_text()


def seed(registry, workbook_content, appdef_content):
    registry.upload(AUTHOR, AssetKind.WORKBOOK, workbook_content, asset_id="balance-model")
    version = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
    registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", version.revision)
    return version


class TestUpload:
    def test_first_upload_is_draft_revision_one(self, registry, workbook_content):
        version = registry.upload(
            AUTHOR, AssetKind.WORKBOOK, workbook_content, asset_id="balance-model"
        )
        assert version.revision == 1
        assert version.state is VersionState.DRAFT

    def test_second_upload_increments_without_touching_first(self, registry, workbook_content):
        first = registry.upload(AUTHOR, AssetKind.WORKBOOK, workbook_content, asset_id="m")
        second = registry.upload(AUTHOR, AssetKind.WORKBOOK, workbook_content + "# v2\n", asset_id="m")
        assert (first.revision, second.revision) == (1, 2)
        stored = registry.versions(AssetKind.WORKBOOK, "m")[0]
        assert stored.content_hash == first.content_hash
        assert registry.load_content(AssetKind.WORKBOOK, "m", 1) == workbook_content

    def test_end_user_cannot_upload(self, registry, workbook_content):
        with pytest.raises(PermissionDenied):
            registry.upload(END_USER, AssetKind.WORKBOOK, workbook_content, asset_id="m")

    def test_invalid_workbook_rejected(self, registry):
        with pytest.raises(ContentInvalid):
            registry.upload(AUTHOR, AssetKind.WORKBOOK, "not a workbook\n", asset_id="m")

    def test_appdef_requires_existing_workbook_revision(self, registry, appdef_content):
        with pytest.raises(ContentInvalid):
            registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)

    def test_appdef_semantic_validation(self, registry, workbook_content, appdef_content):
        registry.upload(AUTHOR, AssetKind.WORKBOOK, workbook_content, asset_id="balance-model")
        broken = json.loads(appdef_content)
        broken["root"]["tabs"][0]["children"][0]["binding"] = "NoSuchName"
        with pytest.raises(ContentInvalid) as err:
            registry.upload(AUTHOR, AssetKind.APPDEF, json.dumps(broken))
        assert "UnresolvedBinding" in str(err.value)

    def test_revisions_are_gapless(self, registry, workbook_content):
        for expected in (1, 2, 3):
            version = registry.upload(
                AUTHOR, AssetKind.WORKBOOK, workbook_content, asset_id="m"
            )
            assert version.revision == expected


class TestPublish:
    def test_publish_archives_previous(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        second = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", second.revision)
        states = {v.revision: v.state for v in registry.versions(AssetKind.APPDEF, "balance-sheet")}
        assert states == {1: VersionState.ARCHIVED, 2: VersionState.PUBLISHED}

    def test_publish_requires_approval_identity(self, registry, workbook_content, appdef_content):
        version = seed(registry, workbook_content, appdef_content)
        stored = registry.versions(AssetKind.APPDEF, "balance-sheet")[version.revision - 1]
        assert stored.approval is not None
        assert stored.approval.approver == "alice"

    def test_publish_archived_revision_is_not_draft(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        second = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", second.revision)
        with pytest.raises(NotDraft):
            registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", 1)

    def test_author_cannot_publish(self, registry, workbook_content, appdef_content):
        registry.upload(AUTHOR, AssetKind.WORKBOOK, workbook_content, asset_id="balance-model")
        version = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        with pytest.raises(PermissionDenied):
            registry.approve_and_publish(AUTHOR, AssetKind.APPDEF, "balance-sheet", version.revision)

    def test_unknown_revision(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        with pytest.raises(UnknownRevision):
            registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", 99)


class TestRollback:
    def test_rollback_restores_archived(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        original_hash = registry.versions(AssetKind.APPDEF, "balance-sheet")[0].content_hash
        second = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", second.revision)
        restored = registry.rollback(ADMIN, AssetKind.APPDEF, "balance-sheet", 1)
        assert restored.state is VersionState.PUBLISHED
        assert restored.content_hash == original_hash
        live = registry.get_live(END_USER, "balance-sheet")
        assert live.version.revision == 1

    def test_rollback_draft_is_an_error(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        draft = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        with pytest.raises(NotArchived):
            registry.rollback(ADMIN, AssetKind.APPDEF, "balance-sheet", draft.revision)

    def test_rollback_requires_admin(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        with pytest.raises(PermissionDenied):
            registry.rollback(AUTHOR, AssetKind.APPDEF, "balance-sheet", 1)

    def test_rollback_with_nothing_published_is_allowed(self, registry, workbook_content,
                                                        appdef_content):
        # reach archived-but-nothing-live by editing the stored state directly
        seed(registry, workbook_content, appdef_content)
        meta_path = registry.root / "appdefs" / "balance-sheet" / "1" / "meta"
        meta = json.loads(meta_path.read_text())
        meta["state"] = "ARCHIVED"
        meta_path.write_text(json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
        reloaded = Registry(registry.root, users=[ADMIN, END_USER])
        with pytest.raises(NoPublishedVersion):
            reloaded.get_live(END_USER, "balance-sheet")
        restored = reloaded.rollback(ADMIN, AssetKind.APPDEF, "balance-sheet", 1)
        assert restored.state is VersionState.PUBLISHED
        assert reloaded.get_live(END_USER, "balance-sheet").version.revision == 1

    def test_rollback_detects_tampering(self, registry, workbook_content, appdef_content, tmp_path):
        seed(registry, workbook_content, appdef_content)
        second = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", second.revision)
        content_path = registry.root / "appdefs" / "balance-sheet" / "1" / "content"
        content_path.write_text(content_path.read_text() + " ")
        with pytest.raises(IntegrityError):
            registry.rollback(ADMIN, AssetKind.APPDEF, "balance-sheet", 1)


class TestGetLive:
    def test_end_user_without_grant(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        with pytest.raises(PermissionDenied):
            registry.get_live(OUTSIDER, "balance-sheet")

    def test_no_published_version(self, registry, workbook_content, appdef_content):
        registry.upload(AUTHOR, AssetKind.WORKBOOK, workbook_content, asset_id="balance-model")
        registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        with pytest.raises(NoPublishedVersion):
            registry.get_live(END_USER, "balance-sheet")

    def test_live_pins_workbook_revision(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        live = registry.get_live(END_USER, "balance-sheet")
        assert (live.workbook_id, live.workbook_revision) == ("balance-model", 1)
        assert live.version.state is VersionState.PUBLISHED

    def test_list_live_apps_filters_by_grant(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        assert [a.appdef.app_id for a in registry.list_live_apps(END_USER)] == ["balance-sheet"]
        assert registry.list_live_apps(OUTSIDER) == []
        assert [a.appdef.app_id for a in registry.list_live_apps(AUTHOR)] == ["balance-sheet"]

    def test_concurrent_publish_readers_never_see_draft(
        self, registry, workbook_content, appdef_content
    ):
        seed(registry, workbook_content, appdef_content)
        second = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", second.revision)
        stop = threading.Event()
        violations: list[str] = []

        def reader():
            while not stop.is_set():
                try:
                    live = registry.get_live(END_USER, "balance-sheet")
                except NoPublishedVersion:
                    violations.append("gap with no published revision")
                    continue
                if live.version.state is not VersionState.PUBLISHED:
                    violations.append(f"saw {live.version.state}")
                if live.workbook_revision != live.appdef.workbook_ref.revision:
                    violations.append("mixed appdef/workbook pair")

        threads = [threading.Thread(target=reader) for _ in range(4)]
        for t in threads:
            t.start()
        for _ in range(25):
            registry.rollback(ADMIN, AssetKind.APPDEF, "balance-sheet", 1)
            registry.rollback(ADMIN, AssetKind.APPDEF, "balance-sheet", 2)
        stop.set()
        for t in threads:
            t.join()
        assert violations == []


class TestArchivedAccess:
    def test_end_user_cannot_read_archived(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        second = registry.upload(AUTHOR, AssetKind.APPDEF, appdef_content)
        registry.approve_and_publish(ADMIN, AssetKind.APPDEF, "balance-sheet", second.revision)
        with pytest.raises(PermissionDenied):
            registry.get_version(END_USER, AssetKind.APPDEF, "balance-sheet", 1)
        version, content = registry.get_version(AUTHOR, AssetKind.APPDEF, "balance-sheet", 1)
        assert version.state is VersionState.ARCHIVED
        assert content == appdef_content


class TestAudit:
    @staticmethod
    def record(registry, n=1, outcome="OK"):
        seqs = []
        for i in range(n):
            seqs.append(
                registry.record_audit(
                    user_id="carol",
                    app_id="balance-sheet",
                    app_revision=1,
                    workbook_id="balance-model",
                    workbook_revision=1,
                    input_digest=digest({"inputs": {"i": i}}),
                    output_digest=digest({"out": i}),
                    outcome=outcome,
                )
            )
        return seqs

    def test_sequences_are_monotonic(self, registry):
        assert self.record(registry, 3) == [1, 2, 3]

    def test_query_filters(self, registry):
        self.record(registry, 5)
        registry.record_audit(
            user_id="bob", app_id="other", app_revision=1, workbook_id="w",
            workbook_revision=1, input_digest="x", output_digest="y", outcome="OK",
        )
        assert len(registry.query_audit(user_id="carol")) == 5
        assert len(registry.query_audit(app_id="other")) == 1
        assert [r.seq for r in registry.query_audit()] == [1, 2, 3, 4, 5, 6]

    def test_chain_verifies_and_detects_tampering(self, registry):
        self.record(registry, 4)
        assert registry.verify_audit_chain()
        # tamper with the file and reload
        lines = registry._audit_path.read_text().splitlines()
        record = json.loads(lines[1])
        record["outcome"] = "SYSTEM_ERROR"
        lines[1] = json.dumps(record, sort_keys=True, separators=(",", ":"))
        registry._audit_path.write_text("\n".join(lines) + "\n")
        reloaded = Registry(registry.root, users=[ADMIN])
        with pytest.raises(IntegrityError):
            reloaded.verify_audit_chain()

    def test_audit_survives_restart(self, registry):
        self.record(registry, 2)
        reloaded = Registry(registry.root, users=[ADMIN])
        assert [r.seq for r in reloaded.query_audit()] == [1, 2]
        assert reloaded.verify_audit_chain()
        reloaded.record_audit(
            user_id="carol", app_id="balance-sheet", app_revision=1,
            workbook_id="balance-model", workbook_revision=1,
            input_digest="a", output_digest="b", outcome="OK",
        )
        assert reloaded.verify_audit_chain()


class TestRestart:
    def test_store_reloads_from_disk(self, registry, workbook_content, appdef_content):
        seed(registry, workbook_content, appdef_content)
        reloaded = Registry(registry.root, users=[ADMIN, END_USER])
        live = reloaded.get_live(END_USER, "balance-sheet")
        assert live.version.revision == 1
        assert reloaded.versions(AssetKind.WORKBOOK, "balance-model")[0].revision == 1
