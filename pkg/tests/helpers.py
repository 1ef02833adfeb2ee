"""Shared test utilities: fixture builders, stub transports, a scripted HTTP server."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

from mtcurator.corpus import Corpus, Direction, ParallelRecord, Translation
from mtcurator.inference import EndpointConfig, request_hash

REPLAY_URL = "http://replay.invalid/v1"


def make_config(base_url: str = REPLAY_URL, model: str = "scorer-1", **kwargs) -> EndpointConfig:
    return EndpointConfig(base_url=base_url, model_id=model, **kwargs)


def chat_body(config: EndpointConfig, messages, temperature: float = 0.0) -> dict:
    return {
        "model": config.model_id,
        "messages": [
            m if isinstance(m, dict) else {"role": m[0], "content": m[1]} for m in messages
        ],
        "temperature": temperature,
    }


def score_body(config: EndpointConfig, text: str) -> dict:
    return {
        "model": config.model_id,
        "prompt": text,
        "echo": True,
        "logprobs": 1,
        "max_tokens": 0,
    }


def chat_response(text: str) -> str:
    return json.dumps(
        {"choices": [{"message": {"role": "assistant", "content": text}}]}, ensure_ascii=False
    )


def score_response(tokens: list[str], logprobs: list[float | None]) -> str:
    return json.dumps(
        {"choices": [{"logprobs": {"tokens": tokens, "token_logprobs": logprobs}}]},
        ensure_ascii=False,
    )


def chat_fixture_entry(config: EndpointConfig, messages, reply: str) -> dict:
    url = config.base_url.rstrip("/") + "/chat/completions"
    return {
        "request_hash": request_hash(url, config.model_id, chat_body(config, messages)),
        "response_body": chat_response(reply),
    }


def score_fixture_entry(
    config: EndpointConfig, text: str, tokens: list[str], logprobs: list[float | None]
) -> dict:
    url = config.base_url.rstrip("/") + "/completions"
    return {
        "request_hash": request_hash(url, config.model_id, score_body(config, text)),
        "response_body": score_response(tokens, logprobs),
    }


def write_jsonl(path, entries) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")


def simple_record(
    record_id: str,
    direction: str = "en-zh",
    source: str = "Hello world.",
    translations: tuple = (("gold", "reference", "你好世界。"),),
    domain: str = "news",
    granularity: str = "document",
) -> ParallelRecord:
    return ParallelRecord(
        id=record_id,
        direction=Direction.parse(direction),
        domain=domain,
        granularity=granularity,
        source_text=source,
        translations=tuple(Translation(*t) for t in translations),
    )


def simple_corpus(n: int = 3, **kwargs) -> Corpus:
    records = []
    for i in range(n):
        kw = dict(kwargs)
        kw.setdefault("source", f"Hello world {i}.")
        records.append(simple_record(f"rec-{i:03d}", **kw))
    return Corpus(records)


class ScriptedTransport:
    """In-memory transport: pops scripted (status, body) responses per call."""

    def __init__(self, script: list[tuple[int, bytes | str]]):
        self.script = list(script)
        self.calls: list[tuple[str, dict]] = []
        self._lock = threading.Lock()

    def post(self, url, body, headers, timeout):
        with self._lock:
            self.calls.append((url, body))
            if not self.script:
                raise AssertionError("transport script exhausted")
            status, data = self.script.pop(0)
        if isinstance(data, str):
            data = data.encode("utf-8")
        return status, data


class ConcurrencyProbe:
    """Transport that tracks the maximum number of in-flight requests."""

    def __init__(self, response: str, hold: float = 0.01):
        import time

        self._time = time
        self.response = response.encode("utf-8")
        self.hold = hold
        self._lock = threading.Lock()
        self.in_flight = 0
        self.max_in_flight = 0
        self.calls = 0

    def post(self, url, body, headers, timeout):
        with self._lock:
            self.in_flight += 1
            self.calls += 1
            self.max_in_flight = max(self.max_in_flight, self.in_flight)
        self._time.sleep(self.hold)
        with self._lock:
            self.in_flight -= 1
        return 200, self.response


class StubHttpServer:
    """Minimal scripted HTTP server for live-transport tests.

    ``routes`` maps a path suffix to a list of (status, json_body) responses
    consumed in order; the last entry repeats.
    """

    def __init__(self, routes: dict[str, list[tuple[int, dict]]]):
        self.routes = {k: list(v) for k, v in routes.items()}
        self.requests: list[tuple[str, dict]] = []
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                outer.requests.append((self.path, body))
                for suffix, script in outer.routes.items():
                    if self.path.endswith(suffix):
                        status, payload = script.pop(0) if len(script) > 1 else script[0]
                        data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                        self.send_response(status)
                        self.send_header("Content-Type", "application/json")
                        self.send_header("Content-Length", str(len(data)))
                        self.end_headers()
                        self.wfile.write(data)
                        return
                self.send_response(404)
                self.end_headers()

            def log_message(self, *args):
                pass

        self._server = HTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
