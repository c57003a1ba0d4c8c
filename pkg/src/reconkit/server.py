"""HTTP front end for :class:`~reconkit.service.ReconciliationService`.

Endpoints::

    GET  /                       manifest (POST with ``queries`` reconciles)
    GET|POST /reconcile          form field ``queries``
    GET  /suggest/<kind>         ?prefix=&cursor=
    GET  /preview                ?id=
    POST /extend                 form field ``extend``
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from reconkit.datamodel import load_dataset_files
from reconkit.globalscore import LinearModel, load_model
from reconkit.service import ProtocolError, ReconciliationService

log = logging.getLogger(__name__)

MAX_BODY = 32 * 1024 * 1024


class ReconcileHandler(BaseHTTPRequestHandler):
    service: ReconciliationService  # set on the subclass built by make_server
    server_version = "reconkit/0.1"

    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    def do_OPTIONS(self):
        self.send_response(HTTPStatus.NO_CONTENT)
        self._cors()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self):
        url = urlsplit(self.path)
        self._dispatch(url.path, parse_qs(url.query))

    def do_POST(self):
        url = urlsplit(self.path)
        params = parse_qs(url.query)
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            self._json({"error": "request body too large"}, HTTPStatus.REQUEST_ENTITY_TOO_LARGE)
            return
        body = self.rfile.read(length).decode("utf-8", errors="replace") if length else ""
        ctype = self.headers.get("Content-Type", "")
        if "application/json" in ctype and body:
            # bare JSON body: treat it as the one form field the endpoint expects
            field = "extend" if url.path.rstrip("/") == "/extend" else "queries"
            params.setdefault(field, [body])
        else:
            for k, v in parse_qs(body, keep_blank_values=True).items():
                params.setdefault(k, []).extend(v)
        self._dispatch(url.path, params)

    def _dispatch(self, path: str, params: dict):
        path = path.rstrip("/") or "/"
        first = {k: v[0] for k, v in params.items() if v}
        svc = self.service
        try:
            if path in ("/", "/reconcile"):
                if "queries" in first:
                    self._json(svc.handle_reconcile(first["queries"]))
                elif "query" in first:
                    # single-query form: a bare string or a query object
                    text = first["query"]
                    try:
                        obj = json.loads(text)
                    except ValueError:
                        obj = text
                    if not isinstance(obj, dict):
                        obj = {"query": str(text)}
                    self._json(svc.handle_reconcile(json.dumps({"q0": obj}))["q0"])
                else:
                    self._json(svc.get_manifest().to_json(self._base_url()))
            elif path.startswith("/suggest/"):
                kind = path[len("/suggest/"):]
                try:
                    cursor = int(first.get("cursor", 0))
                except ValueError:
                    raise ProtocolError("cursor must be an integer") from None
                items = svc.suggest(kind, first.get("prefix", ""), cursor)
                self._json({"result": [{"id": i, "name": n} for i, n in items]})
            elif path == "/preview":
                status, page = svc.preview(first.get("id", ""))
                self._send(page.encode("utf-8"), "text/html; charset=utf-8", status)
            elif path == "/extend":
                if "extend" not in first:
                    raise ProtocolError("missing form field 'extend'")
                self._json(svc.handle_extend(first["extend"]))
            else:
                self._json({"error": f"no such endpoint {path}"}, HTTPStatus.NOT_FOUND)
        except ProtocolError as exc:
            self._json({"error": str(exc)}, HTTPStatus.BAD_REQUEST)

    def _base_url(self) -> str:
        host = self.headers.get("Host") or "%s:%d" % self.server.server_address[:2]
        return f"http://{host}"

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")

    def _json(self, doc, status=HTTPStatus.OK):
        self._send(json.dumps(doc).encode("utf-8"), "application/json; charset=utf-8", status)

    def _send(self, body: bytes, ctype: str, status=HTTPStatus.OK):
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)


def make_server(service: ReconciliationService, host: str = "127.0.0.1", port: int = 8000) -> ThreadingHTTPServer:
    handler = type("BoundReconcileHandler", (ReconcileHandler,), {"service": service})
    server = ThreadingHTTPServer((host, port), handler)
    server.daemon_threads = True
    return server


def serve_in_thread(service: ReconciliationService, host: str = "127.0.0.1", port: int = 0):
    """Start a server on a background thread; returns ``(server, base_url)``.

    Call ``server.shutdown()`` to stop it.
    """
    server = make_server(service, host, port)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    return server, "http://%s:%d" % server.server_address[:2]


def main(argv=None):
    parser = argparse.ArgumentParser(prog="reconkit-serve", description="Serve a reconciliation API over a CSV dataset.")
    parser.add_argument("--data", required=True, help="entities CSV")
    parser.add_argument("--schema", required=True, help="schema descriptor JSON")
    parser.add_argument("--model", help="linear model JSON replacing the default service scorer")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--qgram", type=int, default=3, help="q-gram length for the fuzzy index")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    dataset = load_dataset_files(args.data, args.schema)
    for r in dataset.rejected:
        log.warning("rejected row at line %d: %s", r.line, r.reason)
    model = None
    if args.model:
        model = load_model(args.model)
        if not isinstance(model, LinearModel):
            parser.error("the service scorer must be a linear model; trees only decide on the client")
    service = ReconciliationService(dataset, q=args.qgram, model=model)
    server = make_server(service, args.host, args.port)
    log.info("serving %d entities on http://%s:%d", len(dataset), args.host, args.port)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
