"""Administration command line: validate and hash banks, manage
professor accounts, launch the server.

Exit codes: 0 success, 1 validation/authoring failure, 2 unreadable file
or occupied port, 64 usage errors.
"""

from __future__ import annotations

import argparse
import getpass
import logging
import os
import re
import secrets
import sys
import threading
from pathlib import Path

from . import __version__, schemas
from .engine import ExamEngine, StartupError, load_data_dir, load_users_file
from .netserver import bind_servers
from .quizbank import AuthoringError, hash_answers
from .xmlcore import Element, ParseError, XmlDocument, parse_tree, serialize
from .xmlschema import validate

EX_USAGE = 64

_ID_TOKEN_RE = re.compile(r"[A-Za-z0-9_-]+\Z")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quizwright",
                     description="quiz bank authoring, account management "
                                 "and the exam server")
    parser.add_argument("--version", action="version",
                        version=f"quizwright {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    bank = sub.add_parser("bank", help="validate or hash quiz banks")
    bank_sub = bank.add_subparsers(dest="bank_command", required=True,
                                   parser_class=_Parser)
    bank_validate = bank_sub.add_parser("validate",
                                        help="check a bank against its schema")
    bank_validate.add_argument("file", type=Path)
    bank_hash = bank_sub.add_parser(
        "hash", help="turn plaintext answer keys into digests")
    bank_hash.add_argument("file", type=Path)
    bank_hash.add_argument("-o", "--output", type=Path, required=True)

    user = sub.add_parser("user", help="manage professor accounts")
    user_sub = user.add_subparsers(dest="user_command", required=True,
                                   parser_class=_Parser)
    user_add = user_sub.add_parser("add", help="add or update an account")
    user_add.add_argument("user_id")
    user_add.add_argument("--password",
                          help="insecure: use only for automation; omit to "
                               "be prompted")
    user_add.add_argument("--data-dir", type=Path,
                          default=_default_data_dir())

    serve = sub.add_parser("serve", help="run the exam server")
    serve.add_argument("--port", type=int,
                       default=int(os.environ.get("QW_PORT", "7401")))
    serve.add_argument("--http-port", type=int,
                       default=int(os.environ.get("QW_HTTP_PORT", "7402")))
    serve.add_argument("--data-dir", type=Path, default=_default_data_dir())
    serve.add_argument("--nonce", type=int,
                       default=_env_nonce())
    serve.add_argument("--web-root", type=Path, default=_default_web_root())
    return parser


def _default_data_dir() -> Path:
    return Path(os.environ.get("QW_DATA_DIR", "./data"))


def _default_web_root() -> Path | None:
    root = os.environ.get("QW_WEB_ROOT")
    if root:
        return Path(root)
    fallback = Path("./webui")
    return fallback if fallback.is_dir() else None


def _env_nonce() -> int:
    raw = os.environ.get("QW_NONCE")
    return int(raw) if raw else secrets.randbits(64)


# --- commands -------------------------------------------------------------


def cmd_bank_validate(path: Path) -> int:
    try:
        data = path.read_bytes()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 2
    try:
        doc = parse_tree(data)
    except ParseError as exc:
        print(f"{path}: {exc}")
        return 1
    violations = validate(doc, schemas.shipped("quizbank"))
    for v in violations:
        print(f"{v.path}: {v.rule}: {v.message}")
    if violations:
        return 1
    print("OK")
    return 0


def cmd_bank_hash(path: Path, output: Path) -> int:
    try:
        data = path.read_bytes()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 2
    try:
        hashed = hash_answers(parse_tree(data))
    except (ParseError, AuthoringError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    violations = validate(hashed, schemas.shipped("quizbank"))
    if violations:
        for v in violations:
            print(f"{v.path}: {v.rule}: {v.message}", file=sys.stderr)
        return 1
    output.write_bytes(serialize(hashed))
    print(f"wrote {output}")
    return 0


def cmd_user_add(user_id: str, password: str | None, data_dir: Path) -> int:
    from .digest import md5, to_hex

    if not _ID_TOKEN_RE.match(user_id):
        print(f"error: '{user_id}' is not a valid user id "
              "(letters, digits, '_', '-')", file=sys.stderr)
        return 1
    if password is None:
        password = getpass.getpass(f"password for {user_id}: ")
    users_path = data_dir / "users.xml"
    if users_path.exists():
        try:
            users = load_users_file(users_path.read_bytes())
        except (ParseError, StartupError) as exc:
            print(f"error: {users_path}: {exc}", file=sys.stderr)
            return 1
    else:
        users = {}
    users[user_id] = to_hex(md5(password))

    root = Element("users")
    for uid in sorted(users):
        root.children.append(Element("user", [("id", uid),
                                              ("digest", users[uid])]))
    data_dir.mkdir(parents=True, exist_ok=True)
    tmp = users_path.with_suffix(".xml.tmp")
    tmp.write_bytes(serialize(XmlDocument(root)))
    os.replace(tmp, users_path)
    print(f"stored digest for '{user_id}' in {users_path}")
    return 0


def cmd_serve(port: int, http_port: int, data_dir: Path, nonce: int,
              web_root: Path | None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        bank, config, users = load_data_dir(data_dir)
    except (StartupError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        for v in getattr(exc, "violations", []):
            print(f"  {v.path}: {v.rule}: {v.message}", file=sys.stderr)
        return 1
    engine = ExamEngine(bank, config, users,
                        results_dir=data_dir / "results", nonce=nonce,
                        server_version=f"quizwright/{__version__}")
    try:
        handles = bind_servers(engine, port, http_port, web_root)
    except OSError as exc:
        print(f"error: cannot bind: {exc}", file=sys.stderr)
        return 2
    handles.start()
    # flushed so supervisors reading a pipe see the ports immediately
    print(f"protocol listener on port {handles.tcp_port}", flush=True)
    print(f"http gateway on port {handles.http_port}", flush=True)
    print(f"serving test '{config.id}' from bank '{bank.subject}' "
          f"({len(bank.questions)} questions)", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        print("shutting down")
    finally:
        handles.close()
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EX_USAGE
    if args.command == "bank":
        if args.bank_command == "validate":
            return cmd_bank_validate(args.file)
        return cmd_bank_hash(args.file, args.output)
    if args.command == "user":
        return cmd_user_add(args.user_id, args.password, args.data_dir)
    return cmd_serve(args.port, args.http_port, args.data_dir, args.nonce,
                     args.web_root)


if __name__ == "__main__":
    sys.exit(main())
