import json
import socket
import threading
import time
import urllib.request

import pytest

from quizwright import cli, schemas
from quizwright.digest import md5, to_hex
from quizwright.engine import load_users_file
from quizwright.xmlcore import parse_tree
from quizwright.xmlschema import validate

from conftest import DATA_DIR


def run_cli(*argv):
    return cli.main(list(argv))


class TestBankValidate:
    def test_valid_fixture(self, capsys):
        assert run_cli("bank", "validate",
                       str(DATA_DIR / "banks" / "db.xml")) == 0
        assert capsys.readouterr().out.strip() == "OK"

    def test_missing_subject(self, tmp_path, capsys, fixture_bank_bytes):
        broken = tmp_path / "broken.xml"
        broken.write_bytes(fixture_bank_bytes.replace(b' subject="Databases"',
                                                      b""))
        assert run_cli("bank", "validate", str(broken)) == 1
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 1 and "MissingAttr" in out[0]

    def test_nonexistent_path(self, tmp_path):
        assert run_cli("bank", "validate", str(tmp_path / "nope.xml")) == 2

    def test_unparsable_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.xml"
        bad.write_text("<a><b>")
        assert run_cli("bank", "validate", str(bad)) == 1


class TestBankHash:
    def test_output_validates(self, tmp_path, capsys):
        out_path = tmp_path / "hashed.xml"
        assert run_cli("bank", "hash",
                       str(DATA_DIR / "banks" / "db.authoring.xml"),
                       "-o", str(out_path)) == 0
        doc = parse_tree(out_path.read_bytes())
        assert validate(doc, schemas.shipped("quizbank")) == []

    def test_deterministic(self, tmp_path):
        first, second = tmp_path / "a.xml", tmp_path / "b.xml"
        source = str(DATA_DIR / "banks" / "db.authoring.xml")
        run_cli("bank", "hash", source, "-o", str(first))
        run_cli("bank", "hash", source, "-o", str(second))
        assert first.read_bytes() == second.read_bytes()

    def test_unknown_choice(self, tmp_path, capsys, fixture_authoring_bytes):
        bad = tmp_path / "bad.xml"
        bad.write_bytes(fixture_authoring_bytes.replace(b'key="b"', b'key="9"'))
        assert run_cli("bank", "hash", str(bad),
                       "-o", str(tmp_path / "o.xml")) == 1
        assert "q1" in capsys.readouterr().err

    def test_unreadable(self, tmp_path):
        assert run_cli("bank", "hash", str(tmp_path / "nope.xml"),
                       "-o", str(tmp_path / "o.xml")) == 2


class TestUserAdd:
    def test_add_and_update(self, tmp_path, capsys):
        assert run_cli("user", "add", "prof1", "--password", "secret",
                       "--data-dir", str(tmp_path)) == 0
        users = load_users_file((tmp_path / "users.xml").read_bytes())
        assert users == {"prof1": to_hex(md5("secret"))}
        doc = parse_tree((tmp_path / "users.xml").read_bytes())
        assert validate(doc, schemas.shipped("users")) == []

        assert run_cli("user", "add", "prof1", "--password", "other",
                       "--data-dir", str(tmp_path)) == 0
        users = load_users_file((tmp_path / "users.xml").read_bytes())
        assert users == {"prof1": to_hex(md5("other"))}

    def test_bad_id(self, tmp_path, capsys):
        assert run_cli("user", "add", "bad id!", "--password", "x",
                       "--data-dir", str(tmp_path)) == 1


class TestUsage:
    def test_unknown_verb(self, capsys):
        assert run_cli("frobnicate") == 64

    def test_unknown_subverb(self, capsys):
        assert run_cli("bank", "shred") == 64

    def test_missing_argument(self, capsys):
        assert run_cli("bank", "validate") == 64

    def test_no_command(self, capsys):
        assert run_cli() == 64


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class TestServe:
    def test_invalid_data_dir_exits_1(self, tmp_path, capsys):
        assert run_cli("serve", "--data-dir", str(tmp_path)) == 1

    def test_invalid_bank_exits_1_before_binding(self, tmp_path, capsys,
                                                 fixture_bank_bytes):
        (tmp_path / "banks").mkdir()
        (tmp_path / "banks" / "db.xml").write_bytes(
            fixture_bank_bytes.replace(b' subject="Databases"', b""))
        (tmp_path / "testconfig.xml").write_text(
            '<testconfig id="t1" bank="banks/db.xml" questions="1" '
            'shuffle="false"/>')
        (tmp_path / "users.xml").write_text(
            f'<users><user id="p" digest="{to_hex(md5("x"))}"/></users>')
        assert run_cli("serve", "--data-dir", str(tmp_path)) == 1
        assert "MissingAttr" in capsys.readouterr().err

    def test_occupied_port_exits_2(self, capsys):
        blocker = socket.socket()
        blocker.bind(("0.0.0.0", 0))
        port = blocker.getsockname()[1]
        try:
            assert run_cli("serve", "--data-dir", str(DATA_DIR),
                           "--port", str(port),
                           "--http-port", str(free_port())) == 2
        finally:
            blocker.close()

    def test_serve_runs_and_answers(self, capsys):
        port, http_port = free_port(), free_port()
        exit_codes = []

        def run():
            exit_codes.append(run_cli(
                "serve", "--data-dir", str(DATA_DIR), "--port", str(port),
                "--http-port", str(http_port), "--nonce", "7"))

        thread = threading.Thread(target=run, daemon=True)
        thread.start()
        deadline = time.time() + 5
        body = None
        while time.time() < deadline:
            try:
                request = urllib.request.Request(
                    f"http://127.0.0.1:{http_port}/api/register",
                    data=json.dumps({"name": "T", "year_of_study": 1,
                                     "subject": "DB"}).encode(),
                    headers={"Content-Type": "application/json"})
                with urllib.request.urlopen(request, timeout=1) as response:
                    body = json.load(response)
                break
            except OSError:
                time.sleep(0.05)
        assert body is not None and body["type"] == "SESSION"
