"""Command line interface.

Exit codes: 0 for return codes 1/0, 2 when a run was interrupted (-1),
1 for configuration, lexer or parser errors.
"""

from __future__ import annotations

import argparse
import shlex
import sys

from ..errors import ShmkbError
from . import report
from .callbacks import Script, parse_code
from .config import Config
from .http import make_server
from .service import KnowledgeService


def _base_config(args, need_arena: bool = True) -> Config:
    rules = getattr(args, "rules", None)
    config = Config(arena_path=getattr(args, "arena", None),
                    rules_paths=list(rules) if isinstance(rules, list)
                    else [],
                    depth_cap=getattr(args, "depth_cap", 256),
                    http_bind=getattr(args, "bind", "127.0.0.1:8750"),
                    enable_spawn=getattr(args, "enable_spawn", False))
    if need_arena and not config.arena_path:
        raise ShmkbError("no arena path: pass --arena or set SHMKB_ARENA")
    return config


def cmd_run(args) -> int:
    service = KnowledgeService(_base_config(args, need_arena=False))
    results = []
    if args.script:
        results = Script.load(args.script).run(service.session)
    elif args.key is not None:
        key = parse_code(args.key)
        results = [(key, service.session.fire_entry_rules(key))]
    for key, code in results:
        print(f"key 0{key:o} -> {code}")
    service.save()
    return 2 if any(code == -1 for _, code in results) else 0


def cmd_serve(args) -> int:
    service = KnowledgeService(_base_config(args, need_arena=False))
    server = make_server(service, service.config.bind_pair())
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port}", file=sys.stderr, flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    service.save()
    return 0


def cmd_teach(args) -> int:
    service = KnowledgeService(_base_config(args))
    out = service.teach(args.shape, args.s, args.q, args.a, args.cond)
    print(out["outcome"] + (f" rule={out['rule']}"
                            if out.get("rule") else ""))
    service.save()
    return 0 if out["outcome"] != "Rejected" else 2


def cmd_unteach(args) -> int:
    service = KnowledgeService(_base_config(args))
    service.unteach(args.shape, args.s, args.q, args.a, args.cond)
    print("Removed")
    service.save()
    return 0


def cmd_ask(args) -> int:
    service = KnowledgeService(_base_config(args))
    for answer in service.ask(args.q):
        print(f"{answer['text']}\t{answer['article']}")
    return 0


def cmd_ingest(args) -> int:
    service = KnowledgeService(_base_config(args))
    if args.file:
        with open(args.file, "r", encoding="utf-8") as f:
            text = f.read()
    else:
        text = args.text or ""
    out = service.ingest(args.id, text)
    print(f"article {out['id']}: {out['sentences']} sentence(s)")
    service.save()
    return 0


def cmd_dump(args) -> int:
    service = KnowledgeService(_base_config(args))
    if args.article:
        art = service.article(args.article)
        if art is None:
            print(f"unknown article {args.article!r}", file=sys.stderr)
            return 1
        for line in art["sentences"]:
            print(line)
        return 0
    for rule in service.rules_summary():
        left = " , ".join(rule["left"])
        print(f"[{rule['shape']}] {left} -> {rule['right']}")
        for cond in rule["conditions"]:
            combos = " ".join("(" + " ".join(c) + ")"
                              for c in cond["combos"])
            print(f"    | <({' '.join(cond['slots'])}) [{combos}]>")
        print(f"    samples: {rule['samples']}")
    return 0


def cmd_stats(args) -> int:
    service = KnowledgeService(_base_config(args))
    stats = service.stats()
    text = report.stats_csv(stats)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    if args.plot:
        report.plot_stats(stats, args.plot)
        print(f"figure written to {args.plot}", file=sys.stderr)
    return 0


def cmd_repl(args) -> int:
    service = KnowledgeService(_base_config(args))
    print("shmkb repl; commands: teach ask ingest dump stats save quit",
          file=sys.stderr)
    while True:
        try:
            line = input("shmkb> ")
        except EOFError:
            break
        try:
            words = shlex.split(line)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            continue
        if not words:
            continue
        cmd, rest = words[0], words[1:]
        try:
            if cmd == "quit":
                break
            elif cmd == "teach" and len(rest) >= 3:
                out = service.teach("SQA", rest[0], rest[1], rest[2])
                print(out["outcome"])
            elif cmd == "ask" and rest:
                for answer in service.ask(" ".join(rest)):
                    print(f"{answer['text']}\t{answer['article']}")
            elif cmd == "ingest" and len(rest) >= 2:
                out = service.ingest(rest[0], " ".join(rest[1:]))
                print(f"{out['sentences']} sentence(s)")
            elif cmd == "dump":
                for rule in service.rules_summary():
                    print(f"[{rule['shape']}] "
                          f"{' , '.join(rule['left'])} -> {rule['right']}")
            elif cmd == "stats":
                sys.stdout.write(report.stats_csv(service.stats()))
            elif cmd == "save":
                target = service.save()
                print(f"saved to {target}")
            else:
                print("commands: teach S Q A | ask Q... | ingest ID TEXT "
                      "| dump | stats | save | quit", file=sys.stderr)
        except ShmkbError as e:
            print(f"error: {e}", file=sys.stderr)
    service.save()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shmkb",
        description="rule-based knowledge engine over a relation arena")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rules=False):
        p.add_argument("--arena", help="arena snapshot path "
                       "(SHMKB_ARENA overrides)")
        p.add_argument("--depth-cap", type=int, default=256,
                       dest="depth_cap")
        if rules:
            p.add_argument("--rules", action="append", default=[],
                           help="rule file (repeatable)")

    p = sub.add_parser("run", help="translate rules and fire key events")
    common(p, rules=True)
    p.add_argument("--key", help="key code (octal when 0-prefixed)")
    p.add_argument("--script", help="scripted-callback JSON file")
    p.add_argument("--enable-spawn", action="store_true",
                   dest="enable_spawn")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("serve", help="start the HTTP service")
    common(p, rules=True)
    p.add_argument("--bind", default="127.0.0.1:8750")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("teach", help="teach one sample")
    common(p)
    p.add_argument("--shape", default="SQA")
    p.add_argument("--s")
    p.add_argument("--q")
    p.add_argument("--a", required=True)
    p.add_argument("--cond", action="append", default=[])
    p.set_defaults(fn=cmd_teach)

    p = sub.add_parser("unteach", help="retract one sample")
    common(p)
    p.add_argument("--shape", default="SQA")
    p.add_argument("--s")
    p.add_argument("--q")
    p.add_argument("--a", required=True)
    p.add_argument("--cond", action="append", default=[])
    p.set_defaults(fn=cmd_unteach)

    p = sub.add_parser("ask", help="answer a question")
    common(p)
    p.add_argument("--q", required=True)
    p.set_defaults(fn=cmd_ask)

    p = sub.add_parser("ingest", help="store an article")
    common(p)
    p.add_argument("--id", required=True)
    p.add_argument("--file")
    p.add_argument("--text")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("dump", help="pretty-print rules or an article")
    common(p)
    p.add_argument("--article")
    p.add_argument("--rules", action="store_true", dest="dump_rules")
    p.set_defaults(fn=cmd_dump)

    p = sub.add_parser("stats", help="arena statistics "
                       "(CSV and optional figure)")
    common(p)
    p.add_argument("--csv", help="write CSV here instead of stdout")
    p.add_argument("--plot", help="write a PNG figure here")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("repl", help="interactive console")
    common(p)
    p.set_defaults(fn=cmd_repl)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ShmkbError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
