from __future__ import annotations

import json
import os
import threading
import urllib.error
import urllib.request

import pytest

from shmkb.api.callbacks import Script, parse_code
from shmkb.api.cli import main
from shmkb.api.config import ARENA_ENV, Config
from shmkb.api.http import make_server
from shmkb.api.service import KnowledgeService, ServiceBusy
from shmkb.api import report

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(autouse=True)
def no_env_arena(monkeypatch):
    monkeypatch.delenv(ARENA_ENV, raising=False)


@pytest.fixture
def server():
    service = KnowledgeService(Config())
    httpd = make_server(service, ("127.0.0.1", 0))
    thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{httpd.server_address[1]}"
    yield base, service
    httpd.shutdown()
    httpd.server_close()


def request(base, method, path, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(base + path, data=data, method=method)
    if data:
        req.add_header("Content-Type", "application/json")
    try:
        with urllib.request.urlopen(req, timeout=10) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read().decode())


FIG2 = {"shape": "SQA",
        "s": "Tom read ( a book ) .",
        "q": "who read ( a book ) ?",
        "a": "Tom read ( a book ) ."}


# --- HTTP endpoints ----------------------------------------------------------

def test_http_teach_created(server):
    base, _ = server
    status, body = request(base, "POST", "/teach", FIG2)
    assert status == 200
    assert body["outcome"] == "Created"


def test_http_answer_empty(server):
    base, _ = server
    status, body = request(base, "GET", "/answer?q=unknown+question")
    assert status == 200
    assert body == {"answers": []}


def test_http_full_fig2_flow(server):
    base, _ = server
    request(base, "POST", "/teach", FIG2)
    status, body = request(base, "POST", "/articles",
                           {"id": "7", "text": "Tom read ( a book ) ."})
    assert status == 200 and body["sentences"] == 1
    status, body = request(
        base, "GET", "/answer?q=who+read+(+a+book+)+%3F")
    assert status == 200
    assert body["answers"] == [{"text": "Tom read ( a book ) .",
                                "article": "7"}]


def test_http_elder_younger(server):
    base, _ = server
    teaches = [
        {"shape": "SQA", "s": "Bill is elder than Tom .",
         "q": "Who is elder than Tom ?", "a": "Bill is elder than Tom ."},
        {"shape": "SQA", "s": "Jon is elder than Tom .",
         "q": "Who is elder than Tom ?", "a": "Jon is elder than Tom ."},
        {"shape": "CondCons", "s": "Tom is younger than Bill .",
         "a": "Bill is elder than Tom ."},
        {"shape": "CondCons", "s": "Tom is younger than Jon .",
         "a": "Jon is elder than Tom ."},
        {"shape": "DoubleCondCons",
         "conds": ["Tom is younger than Bill .",
                   "Bill is younger than Jon ."],
         "a": "Tom is younger than Jon ."},
    ]
    for body in teaches:
        status, _ = request(base, "POST", "/teach", body)
        assert status == 200
    request(base, "POST", "/articles",
            {"id": "N", "text": "Tom is younger than Bill . "
                                "Bill is younger than Jon ."})
    status, body = request(base, "GET",
                           "/answer?q=Who+is+elder+than+Tom+%3F")
    assert status == 200
    texts = {a["text"] for a in body["answers"]}
    assert texts == {"Bill is elder than Tom .", "Jon is elder than Tom ."}


def test_http_teach_rejected_is_422(server):
    base, _ = server
    request(base, "POST", "/unteach", FIG2)
    status, body = request(base, "POST", "/teach", FIG2)
    assert status == 422
    assert body["outcome"] == "Rejected"


def test_http_malformed_json_is_400(server):
    base, _ = server
    req = urllib.request.Request(base + "/teach", data=b"{oops",
                                 method="POST")
    with pytest.raises(urllib.error.HTTPError) as err:
        urllib.request.urlopen(req, timeout=10)
    assert err.value.code == 400


def test_http_missing_fields_is_400(server):
    base, _ = server
    status, _ = request(base, "POST", "/teach", {"shape": "SQA"})
    assert status == 400
    status, _ = request(base, "POST", "/articles", {"id": "x"})
    assert status == 400


def test_http_unknown_proposal_is_404(server):
    base, _ = server
    status, _ = request(base, "POST", "/proposals/p0-0", {"accept": True})
    assert status == 404


def test_http_unknown_article_is_404(server):
    base, _ = server
    status, _ = request(base, "GET", "/articles/nope")
    assert status == 404


def test_http_unknown_route_is_404(server):
    base, _ = server
    status, _ = request(base, "GET", "/nothing-here")
    assert status == 404


def test_http_concurrent_requests(server):
    base, _ = server
    request(base, "POST", "/teach", FIG2)
    request(base, "POST", "/articles",
            {"id": "7", "text": "Tom read ( a book ) ."})
    results = []

    def ask():
        results.append(request(base, "GET",
                               "/answer?q=who+read+(+a+book+)+%3F"))

    threads = [threading.Thread(target=ask) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(results) == 8
    assert all(status == 200 and
               body["answers"][0]["text"] == "Tom read ( a book ) ."
               for status, body in results)


def test_http_write_races_snapshot_409(server):
    base, service = server
    service._snapshotting = True
    try:
        status, _ = request(base, "POST", "/teach", FIG2)
        assert status == 409
    finally:
        service._snapshotting = False


def test_http_rules_and_stats(server):
    base, _ = server
    request(base, "POST", "/teach", FIG2)
    status, body = request(base, "GET", "/rules")
    assert status == 200 and len(body["rules"]) == 1
    assert body["rules"][0]["shape"] == "SQA"
    status, body = request(base, "GET", "/stats")
    assert status == 200 and body["rules"] == 1
    assert body["total_nodes"] > 0


def test_http_proposals_roundtrip(server):
    base, service = server
    for s in ("Tom runs .", "Bill runs ."):
        request(base, "POST", "/teach",
                {"shape": "CondCons", "s": s, "a": "ok ."})
    for s in ("Tom sleeps very well .", "Bill sleeps very well .",
              "Jon sleeps very well ."):
        request(base, "POST", "/teach",
                {"shape": "CondCons", "s": s, "a": "fine ."})
    status, body = request(base, "GET", "/proposals")
    assert status == 200 and len(body["proposals"]) == 1
    pid = body["proposals"][0]["id"]
    status, _ = request(base, "POST", f"/proposals/{pid}", {"accept": True})
    assert status == 200
    status, body = request(base, "GET", "/proposals")
    assert body["proposals"] == []


def test_mutations_survive_snapshot_reload(server, tmp_path):
    base, service = server
    request(base, "POST", "/teach", FIG2)
    request(base, "POST", "/articles",
            {"id": "7", "text": "Tom read ( a book ) ."})
    path = tmp_path / "svc.shm"
    service.save(str(path))
    reloaded = KnowledgeService(Config(arena_path=str(path)))
    answers = reloaded.ask("who read ( a book ) ?")
    assert answers == [{"text": "Tom read ( a book ) .", "article": "7"}]


def test_every_mutating_endpoint_survives_reload(server, tmp_path):
    base, service = server
    # teach (all three shapes), unteach, ingest, proposal reject
    request(base, "POST", "/teach", FIG2)
    for s in ("Tom runs .", "Bill runs ."):
        request(base, "POST", "/teach",
                {"shape": "CondCons", "s": s, "a": "someone runs ."})
    for s in ("Tom sleeps very well .", "Bill sleeps very well ."):
        request(base, "POST", "/teach",
                {"shape": "CondCons", "s": s, "a": "someone sleeps ."})
    request(base, "POST", "/teach",
            {"shape": "DoubleCondCons",
             "conds": ["a b .", "b c ."], "a": "a c ."})
    request(base, "POST", "/unteach",
            {"shape": "SQA", "s": "x y .", "q": "y x ?", "a": "x y ."})
    request(base, "POST", "/articles", {"id": "9", "text": "Tom runs ."})
    _, props = request(base, "GET", "/proposals")
    if props["proposals"]:
        request(base, "POST",
                f"/proposals/{props['proposals'][0]['id']}",
                {"accept": False})
    path = tmp_path / "all.shm"
    service.save(str(path))
    reloaded = KnowledgeService(Config(arena_path=str(path)))
    assert reloaded.rules_summary() == service.rules_summary()
    assert reloaded.articles() == service.articles()
    assert reloaded.proposals() == service.proposals()
    assert len(reloaded.semantics.false_samples()) == \
        len(service.semantics.false_samples())


# --- scripted callbacks / run ---------------------------------------------------

def test_parse_code_octal():
    assert parse_code("0413") == 0o413
    assert parse_code("0o413") == 0o413
    assert parse_code(267) == 267
    assert parse_code("9") == 9


def test_cli_run_script_article_workflow(tmp_path, capsys):
    arena = tmp_path / "run.shm"
    script = {
        "events": [
            {"key": "0413",
             "callbacks": {
                 "win3a": [{"bind": {"Art": "7"}, "code": "0423"}],
                 "win3b": [{"bind": {"s": {"list": ["first line",
                                                    "second line"]}},
                            "code": "0423"}]}},
        ]
    }
    spath = tmp_path / "script.json"
    spath.write_text(json.dumps(script))
    rc = main(["run", "--rules", os.path.join(FIXTURES, "article9.rules"),
               "--arena", str(arena), "--script", str(spath)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "key 0413 -> 1" in out
    assert arena.exists()
    # the saved article is readable back from the snapshot
    from shmkb.store import Arena
    loaded = Arena.load(arena)
    files = [pid for d, pid in loaded._paradigms.items()
             if loaded.node(d).level == 2
             and pid != loaded.get_root("Text")]
    assert len(files) == 1
    values = loaded.paradigm_values(files[0])
    assert len(values) == 1
    text = loaded.sentence_text(values[0])
    assert "7" in text and "first line" in text


def test_cli_repl_flow(tmp_path, capsys, monkeypatch):
    arena = str(tmp_path / "repl.shm")
    lines = iter([
        'teach "Tom read ( a book ) ." "who read ( a book ) ?" '
        '"Tom read ( a book ) ."',
        'ingest 7 Tom read ( a book ) .',
        'ask who read ( a book ) ?',
        'dump',
        'quit',
    ])
    monkeypatch.setattr("builtins.input", lambda _prompt: next(lines))
    assert main(["repl", "--arena", arena]) == 0
    out = capsys.readouterr().out
    assert "Created" in out
    assert "Tom read ( a book ) .\t7" in out
    assert "[SQA]" in out


def test_cli_run_empty_rules(tmp_path):
    p = tmp_path / "empty.rules"
    p.write_text("")
    rc = main(["run", "--rules", str(p), "--key", "0413",
               "--arena", str(tmp_path / "a.shm")])
    assert rc == 0


def test_cli_run_malformed_rules(tmp_path, capsys):
    p = tmp_path / "bad.rules"
    p.write_text("-> (oops ;")
    rc = main(["run", "--rules", str(p), "--key", "0413",
               "--arena", str(tmp_path / "a.shm")])
    assert rc == 1
    assert "line" in capsys.readouterr().err


# --- CLI subcommands ----------------------------------------------------------

def test_cli_teach_ingest_ask(tmp_path, capsys):
    arena = str(tmp_path / "cli.shm")
    assert main(["teach", "--arena", arena, "--shape", "SQA",
                 "--s", FIG2["s"], "--q", FIG2["q"], "--a", FIG2["a"]]) == 0
    assert "Created" in capsys.readouterr().out
    assert main(["ingest", "--arena", arena, "--id", "7",
                 "--text", "Tom read ( a book ) ."]) == 0
    capsys.readouterr()
    assert main(["ask", "--arena", arena, "--q",
                 "who read ( a book ) ?"]) == 0
    out = capsys.readouterr().out
    assert out == "Tom read ( a book ) .\t7\n"


def test_cli_ask_before_teach_is_empty(tmp_path, capsys):
    arena = str(tmp_path / "cli.shm")
    assert main(["ask", "--arena", arena, "--q", "anything ?"]) == 0
    assert capsys.readouterr().out == ""


def test_cli_dump_rules(tmp_path, capsys):
    arena = str(tmp_path / "cli.shm")
    main(["teach", "--arena", arena, "--shape", "SQA",
          "--s", "Tom played fair .", "--q", "Did Tom play fair ?",
          "--a", "Tom played fair ."])
    main(["teach", "--arena", arena, "--shape", "SQA",
          "--s", "Bill played fair .", "--q", "Did Bill play fair ?",
          "--a", "Bill played fair ."])
    main(["teach", "--arena", arena, "--shape", "SQA",
          "--s", "Tom spoke fair .", "--q", "Did Tom speak fair ?",
          "--a", "Tom spoke fair ."])
    capsys.readouterr()
    assert main(["dump", "--arena", arena]) == 0
    out = capsys.readouterr().out
    assert out.count("[SQA]") == 1      # one generalized rule
    # ... with all three paradigms of the merged scheme
    assert "{Tom,Bill}" in out
    assert "{played,spoke}" in out
    assert "{play,speak}" in out
    assert "samples: 3" in out


def test_cli_requires_arena(capsys):
    assert main(["ask", "--q", "x ?"]) == 1
    assert "arena" in capsys.readouterr().err


def test_env_variable_overrides_flag(tmp_path, monkeypatch, capsys):
    env_arena = str(tmp_path / "env.shm")
    flag_arena = str(tmp_path / "flag.shm")
    monkeypatch.setenv(ARENA_ENV, env_arena)
    main(["teach", "--arena", flag_arena, "--shape", "CondCons",
          "--s", "a b .", "--a", "c d ."])
    assert os.path.exists(env_arena)
    assert not os.path.exists(flag_arena)


def test_cli_stats_csv_and_plot(tmp_path, capsys):
    arena = str(tmp_path / "cli.shm")
    main(["ingest", "--arena", arena, "--id", "1", "--text", "One two ."])
    capsys.readouterr()
    csv_path = tmp_path / "stats.csv"
    png_path = tmp_path / "stats.png"
    assert main(["stats", "--arena", arena, "--csv", str(csv_path),
                 "--plot", str(png_path)]) == 0
    text = csv_path.read_text()
    assert text.startswith("metric,value")
    assert "nodes_level_0" in text and "arena_bytes" in text
    assert png_path.exists() and png_path.stat().st_size > 1000


# --- CLI vs HTTP differential ----------------------------------------------------

def test_cli_and_http_states_match(tmp_path, server):
    base, service = server
    request(base, "POST", "/teach", FIG2)
    request(base, "POST", "/articles",
            {"id": "7", "text": "Tom read ( a book ) ."})

    arena = str(tmp_path / "diff.shm")
    main(["teach", "--arena", arena, "--shape", "SQA",
          "--s", FIG2["s"], "--q", FIG2["q"], "--a", FIG2["a"]])
    main(["ingest", "--arena", arena, "--id", "7",
          "--text", "Tom read ( a book ) ."])
    cli_service = KnowledgeService(Config(arena_path=arena))

    assert cli_service.stats()["nodes_by_level"] == \
        service.stats()["nodes_by_level"]
    assert cli_service.ask(FIG2["q"]) == service.ask(FIG2["q"])
    assert cli_service.rules_summary() == service.rules_summary()


def test_teaching_rules_drive_semantics(tmp_path):
    # the teaching program: key 0o411 seeds the three strings, the window
    # unit returns SAVE or DELETE, and add_rule0/del_rule0 reach the
    # semantic layer
    from helpers import Script

    config = Config(rules_paths=[os.path.join(FIXTURES,
                                              "teaching10.rules")])
    service = KnowledgeService(config)
    win11 = Script([({}, 0o423)])       # the user presses SAVE
    service.session.register_host("win11", win11)
    service.session.register_host("winR", Script([({}, 1)]))
    service.session.register_host("winQ", Script([({}, 1)]))
    assert service.fire(0o411) == 1
    assert win11.calls == [["Tom read ( a book ) .",
                            "who read ( a book ) ?",
                            "Tom read ( a book ) ."]]
    assert len(service.rules_summary()) == 1
    service.ingest("7", "Tom read ( a book ) .")
    assert service.ask("who read ( a book ) ?") == \
        [{"text": "Tom read ( a book ) .", "article": "7"}]
    # the DELETE path retracts through del_rule0
    service.session.register_host("win11", Script([({}, 0o424)]))
    assert service.fire(0o411) == 1
    assert service.rules_summary() == []
    assert service.ask("who read ( a book ) ?") == []


def test_report_rows_cover_levels():
    stats = {"nodes_by_level": [1, 2, 3, 4], "total_nodes": 10,
             "arena_bytes": 100, "mapped_bytes": 200, "usage_total": 5,
             "lookups": 7, "rules": 1, "articles": 2}
    rows = dict(report.stats_rows(stats))
    assert rows["nodes_level_2"] == 3
    assert rows["articles"] == 2
