"""HTTP/1.1 endpoints over the knowledge service (JSON bodies, UTF-8)."""

from __future__ import annotations

import json
import re
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from ..errors import DomainError, ProposalError, ShmkbError
from .service import KnowledgeService, ServiceBusy

_PROPOSAL_RE = re.compile(r"/proposals/(?P<pid>[^/]+)\Z")
_ARTICLE_RE = re.compile(r"/articles/(?P<aid>[^/]+)\Z")


class ApiHandler(BaseHTTPRequestHandler):
    service: KnowledgeService
    protocol_version = "HTTP/1.1"

    def log_message(self, format, *args):  # quiet by default
        pass

    # plumbing ---------------------------------------------------------------

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _body(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            data = json.loads(raw.decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            raise DomainError("malformed JSON body")
        if not isinstance(data, dict):
            raise DomainError("body must be a JSON object")
        return data

    def _dispatch(self, method: str) -> None:
        try:
            handler = getattr(self, f"route_{method}", None)
            if handler is None or not handler():
                self._send(404, {"error": "unknown endpoint"})
        except ServiceBusy as e:
            self._send(409, {"error": str(e)})
        except ProposalError as e:
            self._send(404, {"error": str(e)})
        except DomainError as e:
            self._send(400, {"error": str(e)})
        except ShmkbError as e:
            self._send(400, {"error": str(e)})

    def do_GET(self):
        self._dispatch("get")

    def do_POST(self):
        self._dispatch("post")

    def do_OPTIONS(self):
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods",
                         "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    # routes -------------------------------------------------------------------

    def route_get(self) -> bool:
        url = urlparse(self.path)
        if url.path == "/answer":
            params = parse_qs(url.query)
            q = params.get("q", [""])[0]
            if not q:
                raise DomainError("missing query parameter q")
            self._send(200, {"answers": self.service.ask(q)})
            return True
        if url.path == "/rules":
            self._send(200, {"rules": self.service.rules_summary()})
            return True
        if url.path == "/proposals":
            self._send(200, {"proposals": self.service.proposals()})
            return True
        if url.path == "/stats":
            self._send(200, self.service.stats())
            return True
        if url.path == "/articles":
            self._send(200, {"articles": self.service.articles()})
            return True
        m = _ARTICLE_RE.match(url.path)
        if m:
            art = self.service.article(m.group("aid"))
            if art is None:
                self._send(404, {"error": "unknown article"})
            else:
                self._send(200, art)
            return True
        return False

    def route_post(self) -> bool:
        url = urlparse(self.path)
        if url.path == "/articles":
            body = self._body()
            if "id" not in body or "text" not in body:
                raise DomainError("fields id and text are required")
            self._send(200, self.service.ingest(str(body["id"]),
                                                str(body["text"])))
            return True
        if url.path == "/teach":
            body = self._body()
            if "shape" not in body or "a" not in body:
                raise DomainError("fields shape and a are required")
            result = self.service.teach(body["shape"], body.get("s"),
                                        body.get("q"), body["a"],
                                        body.get("conds"))
            status = 422 if result["outcome"] == "Rejected" else 200
            self._send(status, result)
            return True
        if url.path == "/unteach":
            body = self._body()
            if "shape" not in body or "a" not in body:
                raise DomainError("fields shape and a are required")
            self.service.unteach(body["shape"], body.get("s"),
                                 body.get("q"), body["a"],
                                 body.get("conds"))
            self._send(200, {"outcome": "Removed"})
            return True
        m = _PROPOSAL_RE.match(url.path)
        if m:
            body = self._body()
            if "accept" not in body:
                raise DomainError("field accept is required")
            self.service.confirm_proposal(m.group("pid"),
                                          bool(body["accept"]))
            self._send(200, {"outcome": "Applied" if body["accept"]
                             else "Blocked"})
            return True
        return False


def make_server(service: KnowledgeService,
                bind: tuple[str, int]) -> ThreadingHTTPServer:
    handler = type("BoundApiHandler", (ApiHandler,), {"service": service})
    return ThreadingHTTPServer(bind, handler)


def serve_forever(service: KnowledgeService) -> None:
    server = make_server(service, service.config.bind_pair())
    try:
        server.serve_forever()
    finally:
        server.server_close()
