"""Backend wire protocol and transport adapters.

Requests and responses travel as single-line JSON objects:

    request:  {"id": str, "audio": str?, "text": str?, "prompt": str?}
    response: {"text": str, "sentences": [{"start", "end", "text"}]?}
              or {"error": str}

Two transports are supported: a long-running child process speaking the
protocol over stdin/stdout (which must announce itself with a handshake
line ``{"protocol": "sgec-backend/1", ...}``), and HTTP POST of the same
JSON to a configured URL. Built-in in-process stubs cover CI and golden
tests without any model runtime.
"""
from __future__ import annotations

import json
import shlex
import subprocess
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional

from .errors import BackendError, BackendUnavailable

PROTOCOL_NAME = "sgec-backend/1"


@dataclass(frozen=True)
class BackendRequest:
    id: str
    audio: Optional[str] = None
    text: Optional[str] = None
    prompt: Optional[str] = None

    def to_obj(self) -> dict:
        obj = {"id": self.id}
        if self.audio is not None:
            obj["audio"] = self.audio
        if self.text is not None:
            obj["text"] = self.text
        if self.prompt is not None:
            obj["prompt"] = self.prompt
        return obj


@dataclass(frozen=True)
class SentenceSpan:
    start: float
    end: float
    text: str


@dataclass(frozen=True)
class BackendResponse:
    text: str
    sentences: Optional[tuple[SentenceSpan, ...]] = None

    @classmethod
    def from_obj(cls, obj: object, utterance_id: str) -> "BackendResponse":
        if not isinstance(obj, dict):
            raise BackendError(utterance_id, f"response is not an object: {obj!r}")
        if "error" in obj:
            raise BackendError(utterance_id, str(obj["error"]))
        text = obj.get("text")
        if not isinstance(text, str):
            raise BackendError(utterance_id, "response lacks a text field")
        sentences = None
        if obj.get("sentences") is not None:
            try:
                sentences = tuple(
                    SentenceSpan(float(s["start"]), float(s["end"]), str(s["text"]))
                    for s in obj["sentences"]
                )
            except (TypeError, KeyError, ValueError):
                raise BackendError(
                    utterance_id, "malformed sentences in response"
                ) from None
        return cls(text, sentences)


class Backend:
    """A transcript transformation service.

    ``concurrency`` caps in-flight requests; 0 means no declared limit.
    """

    descriptor: str = "backend"
    concurrency: int = 1

    def run(self, request: BackendRequest) -> BackendResponse:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self) -> "Backend":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class EchoBackend(Backend):
    """Returns the request text unchanged (empty for audio-only requests)."""

    descriptor = "echo"
    concurrency = 0

    def run(self, request: BackendRequest) -> BackendResponse:
        return BackendResponse(request.text if request.text is not None else "")


class UpperBackend(Backend):
    """Uppercases the request text; handy for asserting stage plumbing."""

    descriptor = "upper"
    concurrency = 0

    def run(self, request: BackendRequest) -> BackendResponse:
        return BackendResponse((request.text or "").upper())


class ScriptBackend(Backend):
    """Replays canned responses keyed by utterance id.

    The script is a JSON object mapping request ids to response objects
    (the ``*`` key, when present, answers any other id). Entries of the
    form ``{"error": ...}`` simulate per-utterance failures.
    """

    concurrency = 0

    def __init__(self, responses: Mapping[str, dict], descriptor: str = "script"):
        self.responses = dict(responses)
        self.descriptor = descriptor

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptBackend":
        path = Path(path)
        try:
            responses = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise BackendUnavailable(f"cannot load script {path}: {exc}") from None
        return cls(responses, descriptor=f"script:{path.name}")

    def run(self, request: BackendRequest) -> BackendResponse:
        obj = self.responses.get(request.id, self.responses.get("*"))
        if obj is None:
            raise BackendError(request.id, "no scripted response")
        return BackendResponse.from_obj(obj, request.id)


class ExecBackend(Backend):
    """Child process speaking line-delimited JSON over its standard streams.

    The child must print a handshake line first; its optional
    ``descriptor`` field names the backend in provenance records and its
    ``concurrency`` field declares a request cap (default 1). Requests are
    serialized over the single pipe pair with a lock.
    """

    def __init__(self, command: str):
        self.command = command
        self.descriptor = f"exec:{command}"
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise BackendUnavailable(f"cannot start {command!r}: {exc}") from None
        handshake_line = self._proc.stdout.readline()
        if not handshake_line:
            raise BackendUnavailable(f"{command!r} exited before its handshake")
        try:
            handshake = json.loads(handshake_line)
        except json.JSONDecodeError:
            raise BackendUnavailable(
                f"{command!r} sent a malformed handshake: {handshake_line!r}"
            ) from None
        if handshake.get("protocol") != PROTOCOL_NAME:
            raise BackendUnavailable(
                f"{command!r} speaks {handshake.get('protocol')!r}, "
                f"expected {PROTOCOL_NAME!r}"
            )
        self.concurrency = int(handshake.get("concurrency", 1))
        if handshake.get("descriptor"):
            self.descriptor = str(handshake["descriptor"])

    def run(self, request: BackendRequest) -> BackendResponse:
        line = json.dumps(request.to_obj(), ensure_ascii=False)
        with self._lock:
            if self._proc.poll() is not None:
                raise BackendUnavailable(f"{self.command!r} exited")
            try:
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError):
                raise BackendUnavailable(f"{self.command!r} closed its stdin") from None
            reply = self._proc.stdout.readline()
        if not reply:
            raise BackendUnavailable(f"{self.command!r} exited mid-request")
        try:
            obj = json.loads(reply)
        except json.JSONDecodeError:
            raise BackendError(request.id, f"malformed response line {reply!r}") from None
        return BackendResponse.from_obj(obj, request.id)

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class HttpBackend(Backend):
    """POSTs request JSON to a URL; GET on the same URL may serve the
    handshake (adopted for descriptor and concurrency when it does)."""

    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout
        self.descriptor = f"http:{url}"
        self.concurrency = 0
        try:
            with urllib.request.urlopen(url, timeout=timeout) as resp:
                handshake = json.loads(resp.read().decode("utf-8"))
            if handshake.get("protocol") == PROTOCOL_NAME:
                self.concurrency = int(handshake.get("concurrency", 0))
                if handshake.get("descriptor"):
                    self.descriptor = str(handshake["descriptor"])
        except (urllib.error.URLError, json.JSONDecodeError, OSError, ValueError):
            pass  # handshake is optional over HTTP; POST failures decide below

    def run(self, request: BackendRequest) -> BackendResponse:
        payload = json.dumps(request.to_obj(), ensure_ascii=False).encode("utf-8")
        req = urllib.request.Request(
            self.url, data=payload, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                body = resp.read().decode("utf-8")
        except urllib.error.HTTPError as exc:
            body = exc.read().decode("utf-8", errors="replace")
            try:
                obj = json.loads(body)
            except json.JSONDecodeError:
                raise BackendError(
                    request.id, f"HTTP {exc.code}: {body[:200]}"
                ) from None
            return BackendResponse.from_obj(obj, request.id)
        except (urllib.error.URLError, OSError) as exc:
            raise BackendUnavailable(f"cannot reach {self.url}: {exc}") from None
        try:
            obj = json.loads(body)
        except json.JSONDecodeError:
            raise BackendError(request.id, f"malformed response body {body[:200]!r}") from None
        return BackendResponse.from_obj(obj, request.id)


def open_backend(spec: str) -> Backend:
    """Build a backend from a CLI spec string.

    Syntax: ``exec:<command>``, ``http:<url>``, or ``builtin:<name>`` where
    name is ``echo``, ``upper``, or ``script:<path>``.
    """
    if spec.startswith(("http://", "https://")):
        return HttpBackend(spec)
    kind, _, rest = spec.partition(":")
    if kind == "exec" and rest:
        return ExecBackend(rest)
    if kind == "http" and rest:
        return HttpBackend(rest)
    if kind == "builtin":
        if rest == "echo":
            return EchoBackend()
        if rest == "upper":
            return UpperBackend()
        if rest.startswith("script:"):
            return ScriptBackend.from_file(rest[len("script:"):])
    raise BackendUnavailable(f"unrecognized backend spec {spec!r}")
