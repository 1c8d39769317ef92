"""Acceptance suite: one test per shipping criterion, each printing a
PASS line with its runtime (run with ``pytest tests/test_acceptance.py
-v -s``).  Time bounds are part of the criteria and are asserted."""

import hashlib
import itertools
import random
import re
import socket
import time
from concurrent.futures import ThreadPoolExecutor

import pytest

from quizwright import schemas, wire, xmlcore
from quizwright.digest import answer_digest, md5
from quizwright.engine import ExamEngine
from quizwright.netserver import bind_servers
from quizwright.quizbank import (SINGLE, MULTI, Choice, Question, QuizBank,
                                 TestConfig, grade, hash_answers, load_bank,
                                 select_questions)
from quizwright.xmlcore import ErrorKind, ParseError
from quizwright.xmlschema import validate

from conftest import DATA_DIR, FIXTURES, build_tree_from_events, corpus


class Criterion:
    def __init__(self, name, budget_seconds):
        self.name = name
        self.budget = budget_seconds

    def __enter__(self):
        self.started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.started
        if exc_type is None and elapsed <= self.budget:
            print(f"\nACCEPTANCE PASS {self.name} "
                  f"({elapsed:.2f}s / budget {self.budget:.0f}s)")
            return False
        print(f"\nACCEPTANCE FAIL {self.name} ({elapsed:.2f}s)")
        assert elapsed <= self.budget, (
            f"{self.name}: {elapsed:.2f}s over budget {self.budget}s")
        return False


RFC_VECTORS = [
    (b"", "d41d8cd98f00b204e9800998ecf8427e"),
    (b"a", "0cc175b9c0f1b6a831c399e269772661"),
    (b"abc", "900150983cd24fb0d6963f7d28e17f72"),
    (b"message digest", "f96b697d7cb7938d525a2f31aaf161d0"),
    (b"abcdefghijklmnopqrstuvwxyz", "c3fcd3d76192e4007dfb496cca67e13b"),
    (b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789",
     "d174ab98d277d9f5a5611c2c9f419d9f"),
    (b"1234567890123456789012345678901234567890123456789012345678901234"
     b"5678901234567890", "57edf4a22be3c955ac49da2e2107b67a"),
]


def test_md5_reference_vectors_and_random_agreement():
    with Criterion("md5-reference", budget_seconds=1.0):
        for message, expected in RFC_VECTORS:
            assert md5(message).value.hex() == expected
        rnd = random.Random(0xACCE97)
        lengths = [55, 56, 63, 64, 65]
        lengths += [rnd.randrange(0, 3001) for _ in range(995)]
        for n in lengths:
            message = rnd.randbytes(n)
            assert md5(message).value == hashlib.md5(message).digest()


def _doc_with(docs, needle):
    for doc in docs:
        if needle(doc):
            return doc
    raise AssertionError("corpus lacks a document for this mutation")


def test_parser_corpus_and_mutations():
    with Criterion("parser-corpus", budget_seconds=5.0):
        docs = corpus(1000)
        for doc_bytes in docs:
            events = []
            xmlcore.parse_events(doc_bytes, events.append)
            tree = xmlcore.parse_tree(doc_bytes)
            assert tree == build_tree_from_events(events)
            once = xmlcore.serialize(tree)
            assert xmlcore.serialize(xmlcore.parse_tree(once)) == once

        attr_re = re.compile(r'<[A-Za-z_][\w.\-]* ([A-Za-z_][\w.\-]*)="')

        def root_content_at(text):
            # first position inside the root element's content
            pos = 0
            if text.startswith("<?xml"):
                pos = text.index("?>") + 2
            while True:
                while pos < len(text) and text[pos] in " \t\r\n":
                    pos += 1
                if text.startswith("<!--", pos):
                    pos = text.index("-->", pos) + 3
                    continue
                break
            return text.index(">", pos) + 1

        def rename_close_tag(text):
            at = text.rindex("</")
            return text[:at] + "</zz_" + text[at + 2:]

        def drop_close_tag(text):
            at = text.rindex("</")
            return text[:at]

        def duplicate_attribute(text):
            m = attr_re.search(text)
            end = text.index('"', m.end()) + 1
            attr = text[m.start(1):end]
            return text[:end] + " " + attr + text[end:]

        def bad_entity(text):
            at = root_content_at(text)
            return text[:at] + "&bogus;" + text[at:]

        def truncate_mid_tag(text):
            return text[:text.rindex(">")]

        def invalid_utf8(text):
            at = len(text[:root_content_at(text)].encode("utf-8"))
            raw = text.encode("utf-8")
            return raw[:at] + b"\xff" + raw[at:]

        def exceed_depth(text):
            return "<w>" * 257 + "</w>" * 257

        operators = {
            rename_close_tag: ErrorKind.NESTING,
            drop_close_tag: ErrorKind.NESTING,
            duplicate_attribute: ErrorKind.DUPLICATE_ATTRIBUTE,
            bad_entity: ErrorKind.BAD_ENTITY,
            truncate_mid_tag: None,  # Syntax or Nesting depending on the cut
            invalid_utf8: ErrorKind.ENCODING,
            exceed_depth: ErrorKind.DEPTH_LIMIT,
        }
        assert len(operators) == 7
        closed = _doc_with(docs, lambda d: b"</" in d).decode("utf-8")
        attributed = _doc_with(
            docs, lambda d: attr_re.search(d.decode("utf-8"))).decode("utf-8")
        for operator, expected_kind in operators.items():
            source = attributed if operator is duplicate_attribute else closed
            mutated = operator(source)
            if isinstance(mutated, str):
                mutated = mutated.encode("utf-8")
            with pytest.raises(ParseError) as info:
                xmlcore.parse_tree(mutated)
            err = info.value
            if expected_kind is not None:
                assert err.kind is expected_kind, operator.__name__
            assert err.line >= 1 and err.column >= 1
            assert err.line <= mutated.count(b"\n") + 1


def test_validator_mutations_and_clean_fixtures():
    with Criterion("validator-mutations", budget_seconds=1.0):
        fixtures = [
            ("quizbank", (DATA_DIR / "banks" / "db.xml").read_bytes()),
            ("testconfig", (DATA_DIR / "testconfig.xml").read_bytes()),
            ("users", (DATA_DIR / "users.xml").read_bytes()),
            ("result", (FIXTURES / "result.xml").read_bytes()),
        ]
        for name, data in fixtures:
            doc = xmlcore.parse_tree(data)
            assert validate(doc, schemas.shipped(name)) == [], name

        bank_text = fixtures[0][1].decode("utf-8")
        mutations = [
            ("drop-required-attr",
             bank_text.replace(' subject="Databases"', ""), "MissingAttr"),
            ("retype-integer-attr",
             bank_text.replace('version="1"', 'version="one"'), "BadAttrType"),
            ("exceed-max-occurs",
             bank_text.replace(
                 '<answer digest="6ab4a021013b68398af2b9841a4cee63"/>',
                 '<answer digest="6ab4a021013b68398af2b9841a4cee63"/>' * 2),
             "Cardinality"),
            ("below-min-occurs",
             bank_text.replace('<choice id="b">DELETE</choice>', ""),
             "Cardinality"),
            ("rename-root",
             bank_text.replace("<quizbank ", "<bankquiz ").replace(
                 "</quizbank>", "</bankquiz>"), "BadRoot"),
            ("insert-undeclared-element",
             bank_text.replace("</quizbank>", "<rogue/></quizbank>"),
             "UnknownElement"),
            ("children-under-text-content",
             bank_text.replace("<text>Which clause filters rows?</text>",
                               "<text>Which<br/>clause?</text>"),
             "BadContent"),
        ]
        assert len(mutations) == 7
        schema = schemas.shipped("quizbank")
        for name, text, expected_rule in mutations:
            violations = validate(xmlcore.parse_tree(text), schema)
            assert violations, name
            assert expected_rule in [v.rule for v in violations], (
                name, violations)


def _random_two_question_bank(rnd):
    questions, keys = [], {}
    for i in range(2):
        qid = f"q{i}"
        kind = rnd.choice([SINGLE, MULTI])
        ids = [chr(ord("a") + k) for k in range(rnd.randrange(2, 5))]
        key = ({rnd.choice(ids)} if kind == SINGLE
               else set(rnd.sample(ids, rnd.randrange(1, len(ids) + 1))))
        questions.append(Question(
            id=qid, kind=kind, points=rnd.randrange(1, 4), text=qid,
            choices=tuple(Choice(c, c.upper()) for c in ids),
            key_digest=answer_digest(qid, key)))
        keys[qid] = frozenset(key)
    return questions, keys


def _every_answer_map(questions):
    per_question = []
    for q in questions:
        ids = [c.id for c in q.choices]
        if q.kind == SINGLE:
            options = [None] + [frozenset({c}) for c in ids]
        else:
            options = [None] + [
                frozenset(combo)
                for r in range(1, len(ids) + 1)
                for combo in itertools.combinations(ids, r)]
        per_question.append([(q.id, o) for o in options])
    for combo in itertools.product(*per_question):
        yield {qid: sel for qid, sel in combo if sel is not None}


def test_grading_digest_equals_plaintext_exhaustively():
    with Criterion("grading-oracle", budget_seconds=10.0):
        rnd = random.Random(0x9bade)
        for _ in range(100):
            questions, keys = _random_two_question_bank(rnd)
            max_points = sum(q.points for q in questions)
            graded = {}
            for answers in _every_answer_map(questions):
                report = grade(questions, answers)
                plain = sum(q.points for q in questions
                            if frozenset(answers.get(q.id, ())) == keys[q.id])
                assert report.points == plain
                assert 0 <= report.points <= report.max_points == max_points
                key = frozenset((qid, sel) for qid, sel in answers.items())
                graded[key] = report.points
            # monotonicity: filling in a correct answer never lowers points
            for key, points in graded.items():
                answered = {qid for qid, _ in key}
                for q in questions:
                    if q.id in answered:
                        continue
                    better = frozenset(key | {(q.id, keys[q.id])})
                    assert graded[better] >= points


def test_seeded_selection_golden_trace():
    with Criterion("selection-golden", budget_seconds=1.0):
        bank = QuizBank("s", 1, tuple(
            Question(id=f"q{i}", kind=SINGLE, points=1, text=f"q{i}",
                     choices=(Choice("a", "A"), Choice("b", "B")),
                     key_digest=answer_digest(f"q{i}", {"a"}))
            for i in range(1, 6)))
        config = TestConfig("t", "b", 3, True)
        # frozen from the independent SplitMix64/Fisher-Yates hand trace
        expected = ["q2", "q3", "q1"]
        runs = [[q.id for q in select_questions(bank, config, 42)]
                for _ in range(5)]
        assert all(run == expected for run in runs)
        full = TestConfig("t", "b", 5, True)
        assert [q.id for q in select_questions(bank, full, 42)] == \
            ["q2", "q3", "q1", "q5", "q4"]


# --- end-to-end ------------------------------------------------------------

def _build_ten_question_bank():
    parts = ['<quizbank subject="Networks" version="1">']
    for i in range(1, 11):
        kind = "multi" if i % 4 == 0 else "single"
        key = "b,d" if kind == "multi" else "c"
        parts.append(
            f'<question id="q{i}" type="{kind}" points="{(i % 3) + 1}">'
            f"<text>question number {i}</text>"
            '<choice id="a">alpha</choice><choice id="b">bravo</choice>'
            '<choice id="c">charlie</choice><choice id="d">delta</choice>'
            f'<answer key="{key}"/></question>')
    parts.append("</quizbank>")
    doc = hash_answers(xmlcore.parse_tree("".join(parts)))
    return load_bank(xmlcore.serialize(doc))


class _Client:
    def __init__(self, port, role="student"):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.reader = self.sock.makefile("rb")
        welcome = self.ask(wire.Hello(role, 1))
        assert isinstance(welcome, wire.Welcome)

    def ask(self, msg):
        self.sock.sendall(wire.encode(msg))
        line = self.reader.readline()
        return wire.decode(line.rstrip(b"\n"))

    def close(self):
        self.sock.close()


def _run_student(port, index, rnd_seed):
    rnd = random.Random(rnd_seed)
    client = _Client(port)
    try:
        grant = client.ask(wire.Register(f"student-{index:02d}",
                                         rnd.randrange(1, 5), "Networks"))
        assert isinstance(grant, wire.SessionGrant)
        test = client.ask(wire.Start(grant.session_id))
        assert isinstance(test, wire.TestContent)
        # double START while in progress must be rejected
        double = client.ask(wire.Start(grant.session_id))
        assert isinstance(double, wire.ErrorReply)
        assert double.code == wire.E_STATE
        answered = {}
        for q in test.questions:
            if q["type"] == "single":
                selected = [rnd.choice([c["id"] for c in q["choices"]])]
            else:
                pool = [c["id"] for c in q["choices"]]
                selected = rnd.sample(pool, rnd.randrange(1, len(pool) + 1))
            ack = client.ask(wire.Answer(grant.session_id, q["id"],
                                         tuple(selected)))
            assert ack == wire.Ack()
            answered[q["id"]] = selected
        result = client.ask(wire.Finish(grant.session_id))
        assert isinstance(result, wire.Result)
        # post-FINISH abuse must be rejected without changing the result
        for abuse in (wire.Start(grant.session_id),
                      wire.Answer(grant.session_id, test.questions[0]["id"],
                                  ("a",)),
                      wire.Finish(grant.session_id)):
            reply = client.ask(abuse)
            assert isinstance(reply, wire.ErrorReply)
            assert reply.code == wire.E_STATE
        return grant.session_id, result
    finally:
        client.close()


def test_end_to_end_fifty_concurrent_students(tmp_path):
    with Criterion("end-to-end", budget_seconds=10.0):
        bank = _build_ten_question_bank()
        config = TestConfig("t-e2e", "bank.xml", 10, True)
        users = {"prof1": "5ebe2294ecd0e0f08eab7690d2a6ee69"}  # md5("secret")
        engine = ExamEngine(bank, config, users, tmp_path / "results",
                            nonce=20260809)
        handles = bind_servers(engine, 0, 0, host="127.0.0.1")
        handles.start()
        try:
            monitor = _Client(handles.tcp_port, role="monitor")
            assert monitor.ask(wire.Auth("prof1", "secret")) == wire.Ack()

            with ThreadPoolExecutor(max_workers=50) as pool:
                futures = [pool.submit(_run_student, handles.tcp_port, i, 1000 + i)
                           for i in range(50)]
                outcomes = dict(f.result() for f in futures)
            assert len(outcomes) == 50

            # exactly 50 schema-valid result files, percents matching RESULT
            result_dir = tmp_path / "results"
            files = sorted(result_dir.glob("*.xml"))
            assert len(files) == 50
            schema = schemas.shipped("result")
            for path in files:
                doc = xmlcore.parse_tree(path.read_bytes())
                assert validate(doc, schema) == []
                sid = doc.root.get("session")
                score = xmlcore.select_path(doc, "result/score")[0]
                assert score.get("percent") == outcomes[sid].percent
                assert int(score.get("points")) == outcomes[sid].points

            # monitor saw one registered/started/finished triple per session
            seen = {sid: {"registered": 0, "started": 0, "finished": 0}
                    for sid in outcomes}
            needed = 150
            monitor.sock.settimeout(5)
            while needed:
                line = monitor.reader.readline()
                event = wire.decode(line.rstrip(b"\n"))
                assert isinstance(event, wire.Event)
                if event.kind in seen[event.session_id]:
                    seen[event.session_id][event.kind] += 1
                    needed -= 1
                if event.kind == "finished":
                    assert event.percent == outcomes[event.session_id].percent
            assert all(counts == {"registered": 1, "started": 1, "finished": 1}
                       for counts in seen.values())
            monitor.close()
        finally:
            handles.close()
