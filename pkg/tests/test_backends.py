import json
import sys
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from sgec.backends import (
    BackendRequest,
    BackendResponse,
    EchoBackend,
    ExecBackend,
    HttpBackend,
    ScriptBackend,
    UpperBackend,
    open_backend,
)
from sgec.errors import BackendError, BackendUnavailable

# a minimal exec adapter: handshake line, then echo every request's text
ECHO_WORKER = (
    "import sys, json\n"
    "print(json.dumps({'protocol': 'sgec-backend/1', 'concurrency': 1,"
    " 'descriptor': 'test-echo'}), flush=True)\n"
    "for line in sys.stdin:\n"
    "    req = json.loads(line)\n"
    "    if req.get('text') == 'boom':\n"
    "        print(json.dumps({'error': 'kaput'}), flush=True)\n"
    "    else:\n"
    "        print(json.dumps({'text': req.get('text', '')}), flush=True)\n"
)


def test_response_parsing():
    resp = BackendResponse.from_obj(
        {"text": "a. b?", "sentences": [{"start": 0, "end": 1.5, "text": "a."}]},
        "u1",
    )
    assert resp.text == "a. b?"
    assert resp.sentences[0].start == 0.0 and isinstance(resp.sentences[0].start, float)
    with pytest.raises(BackendError):
        BackendResponse.from_obj({"error": "nope"}, "u1")
    with pytest.raises(BackendError):
        BackendResponse.from_obj({"sentences": []}, "u1")


def test_request_serialization_omits_absent_fields():
    req = BackendRequest(id="u1", text="hi")
    assert req.to_obj() == {"id": "u1", "text": "hi"}


def test_builtin_backends():
    assert EchoBackend().run(BackendRequest("u1", text="a b")).text == "a b"
    assert EchoBackend().run(BackendRequest("u1", audio="x.wav")).text == ""
    assert UpperBackend().run(BackendRequest("u1", text="ab")).text == "AB"


def test_script_backend(tmp_path):
    script = tmp_path / "script.json"
    script.write_text(json.dumps({
        "u1": {"text": "scripted"},
        "u2": {"error": "boom"},
        "*": {"text": "default"},
    }))
    backend = ScriptBackend.from_file(script)
    assert backend.descriptor == "script:script.json"
    assert backend.run(BackendRequest("u1")).text == "scripted"
    assert backend.run(BackendRequest("zzz")).text == "default"
    with pytest.raises(BackendError):
        backend.run(BackendRequest("u2"))


def test_open_backend_specs(tmp_path):
    script = tmp_path / "s.json"
    script.write_text("{}")
    assert open_backend("builtin:echo").descriptor == "echo"
    assert open_backend("builtin:upper").descriptor == "upper"
    assert open_backend(f"builtin:script:{script}").descriptor == "script:s.json"
    with pytest.raises(BackendUnavailable):
        open_backend("nonsense")
    with pytest.raises(BackendUnavailable):
        open_backend("builtin:script:/no/such/file.json")


def test_exec_backend_round_trip():
    with ExecBackend(f"{sys.executable} -c \"{ECHO_WORKER}\"") as backend:
        assert backend.descriptor == "test-echo"
        assert backend.concurrency == 1
        assert backend.run(BackendRequest("u1", text="hello")).text == "hello"
        with pytest.raises(BackendError):
            backend.run(BackendRequest("u2", text="boom"))
        assert backend.run(BackendRequest("u3", text="still alive")).text == "still alive"


def test_exec_backend_requires_handshake():
    with pytest.raises(BackendUnavailable):
        ExecBackend(f"{sys.executable} -c \"print('hi there')\"")
    with pytest.raises(BackendUnavailable):
        ExecBackend(f"{sys.executable} -c \"pass\"")


def test_exec_backend_spawn_failure():
    with pytest.raises(BackendUnavailable):
        ExecBackend("/no/such/binary --flag")


class _Handler(BaseHTTPRequestHandler):
    def do_GET(self):
        body = json.dumps(
            {"protocol": "sgec-backend/1", "concurrency": 2, "descriptor": "test-http"}
        ).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        req = json.loads(self.rfile.read(length))
        if req.get("text") == "boom":
            body = json.dumps({"error": "kaput"}).encode()
        else:
            body = json.dumps({"text": req.get("text", "").swapcase()}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}/"
    server.shutdown()


def test_http_backend(http_server):
    backend = HttpBackend(http_server)
    assert backend.descriptor == "test-http"
    assert backend.concurrency == 2
    assert backend.run(BackendRequest("u1", text="Hi")).text == "hI"
    with pytest.raises(BackendError):
        backend.run(BackendRequest("u2", text="boom"))


def test_http_backend_unreachable():
    backend = HttpBackend("http://127.0.0.1:9/")  # discard port: nothing listens
    with pytest.raises(BackendUnavailable):
        backend.run(BackendRequest("u1", text="x"))
