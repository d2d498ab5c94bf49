"""CLI behavior: local validate/run and remote commands against a live server."""

import json
import threading
import time
from pathlib import Path

import pytest
import uvicorn

from sheetbridge.broker import BrokerConfig
from sheetbridge.cli import main
from sheetbridge.service import ServiceConfig, create_app
from sheetbridge.service.config import UserEntry

DEMO = Path(__file__).resolve().parent.parent / "demo"


class TestValidate:
    def test_workbook_ok(self, capsys):
        assert main(["validate", str(DEMO / "balance_model.wb")]) == 0
        out = json.loads(capsys.readouterr().out.strip())
        assert out["ok"] is True
        assert out["cells"] > 0

    def test_appdef_with_workbook(self, capsys):
        code = main([
            "validate", str(DEMO / "balance_sheet_app.json"),
            "--workbook", str(DEMO / "balance_model.wb"),
        ])
        assert code == 0
        assert json.loads(capsys.readouterr().out.strip())["app_id"] == "balance-sheet"

    def test_bad_workbook(self, tmp_path, capsys):
        bad = tmp_path / "bad.wb"
        bad.write_text("workbook X\nsheet S\ncell A1 := =1+\n")
        assert main(["validate", str(bad)]) == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "VALIDATION"

    def test_appdef_semantic_failure_prints_issues(self, tmp_path, capsys):
        doc = json.loads((DEMO / "balance_sheet_app.json").read_text())
        doc["root"]["tabs"][0]["children"][0]["binding"] = "Missing"
        bad = tmp_path / "app.json"
        bad.write_text(json.dumps(doc))
        code = main(["validate", str(bad), "--workbook", str(DEMO / "balance_model.wb")])
        assert code == 1
        captured = capsys.readouterr()
        issue = json.loads(captured.out.strip().splitlines()[0])
        assert "UnresolvedBinding" in issue["reason"]


class TestLocalRun:
    def test_blank_inputs_give_zero_totals(self, capsys):
        code = main([
            "run", str(DEMO / "balance_sheet_app.json"), str(DEMO / "inputs_blank.json"),
            "--workbook", str(DEMO / "balance_model.wb"),
        ])
        assert code == 0
        result = json.loads(capsys.readouterr().out.strip())
        assert result["outcome"] == "OK"
        assert result["outputs"]["totalcurrentassets-y1"] == 0.0
        assert result["outputs"]["totalassets-y1"] == 0.0

    def test_sample_inputs(self, capsys):
        code = main([
            "run", str(DEMO / "balance_sheet_app.json"), str(DEMO / "inputs_sample.json"),
            "--workbook", str(DEMO / "balance_model.wb"),
        ])
        assert code == 0
        result = json.loads(capsys.readouterr().out.strip())
        assert result["outputs"]["totalcurrentassets-y1"] == 385.5


@pytest.fixture(scope="module")
def server(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("srv")
    config = ServiceConfig(
        store_path=str(tmp_path / "store"),
        users=[
            UserEntry("alice", "Alice", "ADMIN", "tok-admin"),
            UserEntry("bob", "Bob", "AUTHOR", "tok-author"),
            UserEntry("carol", "Carol", "END_USER", "tok-user", grants=("balance-sheet",)),
        ],
        broker=BrokerConfig(pool_size=1, scheduler_period=0.005),
    )
    app = create_app(config)
    uv_config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    uv_server = uvicorn.Server(uv_config)
    thread = threading.Thread(target=uv_server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not uv_server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    port = uv_server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    uv_server.should_exit = True
    thread.join(timeout=5)


class TestRemote:
    def test_upload_publish_audit_flow(self, server, capsys):
        assert main([
            "upload", "--server", server, "--token", "tok-author",
            "--kind", "workbook", "--id", "balance-model",
            "--file", str(DEMO / "balance_model.wb"),
        ]) == 0
        assert main([
            "upload", "--server", server, "--token", "tok-author",
            "--kind", "appdef", "--file", str(DEMO / "balance_sheet_app.json"),
        ]) == 0
        assert main([
            "publish", "--server", server, "--token", "tok-admin",
            "--app", "balance-sheet", "--revision", "1", "--note", "go",
        ]) == 0
        capsys.readouterr()
        assert main(["audit", "--server", server, "--token", "tok-admin"]) == 0
        body = json.loads(capsys.readouterr().out)
        assert body["records"] == []

    def test_publish_as_end_user_is_forbidden(self, server, capsys):
        code = main([
            "publish", "--server", server, "--token", "tok-user",
            "--app", "balance-sheet", "--revision", "1",
        ])
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "FORBIDDEN"

    def test_transport_error_reported(self, capsys):
        code = main([
            "audit", "--server", "http://127.0.0.1:9", "--token", "t",
        ])
        assert code == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "TRANSPORT"
