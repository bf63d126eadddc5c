"""Browser drivers: one contract, two implementations.

The harness drives simulations through a small capability surface (load,
click, set value, toggle, read content, screenshot, console errors, debug
flag, debug logs, button discovery). `FakeDriver` satisfies it from a
scripted behavior table for hermetic tests; `CdpDriver` binds to a real
headless browser over its remote-debugging protocol endpoint.
"""
from __future__ import annotations

import base64
import json
import os
import re
import socket
import struct
import time
from dataclasses import dataclass
from typing import Optional, Protocol, runtime_checkable

from .errors import DriverCrashError, ElementNotFoundError

_LOG_LINE_RE = re.compile(
    r"^DEBUG \[(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:\d{2})?)\]: (.*)$"
)


@dataclass(frozen=True)
class LogLine:
    timestamp: str
    message: str


def parse_log_line(line: str) -> Optional[LogLine]:
    """Parse a `DEBUG [<ISO-8601>]: <message>` line; near misses return None."""
    m = _LOG_LINE_RE.match(line)
    if not m:
        return None
    return LogLine(m.group(1), m.group(2))


@runtime_checkable
class BrowserDriver(Protocol):
    def load(self, document: str) -> None: ...

    def click(self, element_id: str) -> None: ...

    def set_value(self, element_id: str, value) -> None: ...

    def toggle(self, element_id: str) -> None: ...

    def read_content(self, element_id: str) -> str: ...

    def screenshot(self) -> bytes: ...

    def console_errors(self) -> list[str]: ...

    def set_debug_flag(self, enabled: bool) -> None: ...

    def debug_logs(self) -> list[LogLine]: ...

    def list_buttons(self) -> list[str]: ...


# --- scripted fake -----------------------------------------------------------

_PNG_STUB = bytes.fromhex(
    "89504e470d0a1a0a0000000d49484452000000010000000108060000001f15c489"
    "0000000a49444154789c63000100000500010d0a2db40000000049454e44ae426082"
)


class FakeDriver:
    """Deterministic scripted driver.

    Behavior profiles are chosen by document substring match ("*" is the
    default). Each element maps actions to emitted logs, console errors, and
    content updates; `{value}` in a template is replaced by the action value.
    Debug log lines are only emitted while the debug flag is on, timestamped
    from a logical clock so runs are reproducible.
    """

    def __init__(self, profiles: list[dict]):
        self.profiles = profiles
        self._flag = False
        self._profile: dict = {}
        self._errors: list[str] = []
        self._log_lines: list[str] = []
        self._content: dict[str, str] = {}
        self._clock = 0
        self._shots = 0
        self.loaded_document: Optional[str] = None

    @classmethod
    def from_file(cls, path) -> "FakeDriver":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f)["profiles"])

    # -- capability surface ---------------------------------------------------

    def load(self, document: str) -> None:
        self.loaded_document = document
        self._profile = self._select_profile(document)
        self._errors = list(self._profile.get("load_errors", []))
        self._log_lines = []
        self._content = {
            eid: spec.get("content", "")
            for eid, spec in self._profile.get("elements", {}).items()
        }
        self._clock = 0
        self._shots = 0
        if self._profile.get("crash_on_load"):
            raise DriverCrashError(self._profile["crash_on_load"])
        for line in self._profile.get("init_logs", []):
            self._emit(line)

    def click(self, element_id: str) -> None:
        self._perform(element_id, "click", None)

    def set_value(self, element_id: str, value) -> None:
        self._perform(element_id, "set_value", value)

    def toggle(self, element_id: str) -> None:
        self._perform(element_id, "toggle", None)

    def read_content(self, element_id: str) -> str:
        element = self._element(element_id)
        return self._content.get(element_id, element.get("content", ""))

    def screenshot(self) -> bytes:
        self._shots += 1
        return _PNG_STUB + self._shots.to_bytes(2, "big")

    def console_errors(self) -> list[str]:
        return list(self._errors)

    def set_debug_flag(self, enabled: bool) -> None:
        self._flag = enabled

    def debug_logs(self) -> list[LogLine]:
        parsed = [parse_log_line(line) for line in self._log_lines]
        return [p for p in parsed if p is not None]

    def list_buttons(self) -> list[str]:
        return list(self._profile.get("buttons", []))

    # -- internals ---------------------------------------------------------------

    def _select_profile(self, document: str) -> dict:
        default = None
        for profile in self.profiles:
            match = profile.get("match", "*")
            if match == "*":
                default = profile
            elif match in document:
                return profile
        if default is None:
            raise DriverCrashError("no behavior profile matches the document")
        return default

    def _element(self, element_id: str) -> dict:
        elements = self._profile.get("elements", {})
        if element_id not in elements:
            raise ElementNotFoundError(element_id)
        return elements[element_id]

    def _perform(self, element_id: str, action: str, value) -> None:
        element = self._element(element_id)
        spec = element.get(action, {})
        if spec.get("crash"):
            raise DriverCrashError(spec["crash"])
        for err in spec.get("errors", []):
            self._errors.append(err)
        for line in spec.get("logs", []):
            self._emit(_fill(line, value))
        for target, template in spec.get("content_updates", {}).items():
            self._content[target] = _fill(template, value)

    def _emit(self, message: str) -> None:
        if not self._flag:
            return
        self._clock += 1
        stamp = f"2024-01-01T00:00:{self._clock // 1000:02d}.{self._clock % 1000:03d}Z"
        self._log_lines.append(f"DEBUG [{stamp}]: {message}")


def _fill(template: str, value) -> str:
    return template.replace("{value}", "" if value is None else str(value))


# --- CDP binding ------------------------------------------------------------------


class _MiniWebSocket:
    """Just enough of the WebSocket client protocol for local CDP traffic."""

    def __init__(self, url: str, timeout_s: float = 30.0):
        m = re.match(r"ws://([^:/]+):(\d+)(/.*)?", url)
        if not m:
            raise DriverCrashError(f"unsupported websocket url: {url}")
        host, port, path = m.group(1), int(m.group(2)), m.group(3) or "/"
        self.sock = socket.create_connection((host, port), timeout=timeout_s)
        key = base64.b64encode(os.urandom(16)).decode("ascii")
        handshake = (
            f"GET {path} HTTP/1.1\r\nHost: {host}:{port}\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Key: {key}\r\nSec-WebSocket-Version: 13\r\n\r\n"
        )
        self.sock.sendall(handshake.encode("ascii"))
        response = b""
        while b"\r\n\r\n" not in response:
            chunk = self.sock.recv(4096)
            if not chunk:
                raise DriverCrashError("websocket handshake closed early")
            response += chunk
        if b" 101 " not in response.split(b"\r\n", 1)[0]:
            raise DriverCrashError("websocket handshake refused")
        self._buffer = response.split(b"\r\n\r\n", 1)[1]

    def send_text(self, payload: str) -> None:
        data = payload.encode("utf-8")
        header = bytearray([0x81])
        length = len(data)
        if length < 126:
            header.append(0x80 | length)
        elif length < 1 << 16:
            header.append(0x80 | 126)
            header += struct.pack(">H", length)
        else:
            header.append(0x80 | 127)
            header += struct.pack(">Q", length)
        mask = os.urandom(4)
        header += mask
        masked = bytes(b ^ mask[i % 4] for i, b in enumerate(data))
        self.sock.sendall(bytes(header) + masked)

    def _read_exact(self, n: int) -> bytes:
        while len(self._buffer) < n:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise DriverCrashError("websocket closed")
            self._buffer += chunk
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def recv_text(self, timeout_s: float = 30.0) -> str:
        self.sock.settimeout(timeout_s)
        fragments: list[bytes] = []
        while True:
            b1, b2 = self._read_exact(2)
            fin, opcode = b1 & 0x80, b1 & 0x0F
            length = b2 & 0x7F
            if length == 126:
                length = struct.unpack(">H", self._read_exact(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", self._read_exact(8))[0]
            mask = self._read_exact(4) if b2 & 0x80 else b""
            payload = self._read_exact(length)
            if mask:
                payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            if opcode == 0x9:  # ping
                self.sock.sendall(bytes([0x8A, 0x80]) + os.urandom(4))
                continue
            if opcode == 0x8:
                raise DriverCrashError("websocket closed by peer")
            if opcode in (0x1, 0x0):
                fragments.append(payload)
                if fin:
                    return b"".join(fragments).decode("utf-8")
                continue
            # binary / pong frames are irrelevant to CDP; skip

    def close(self) -> None:
        try:
            self.sock.sendall(bytes([0x88, 0x80]) + os.urandom(4))
        except OSError:
            pass
        self.sock.close()


class CdpDriver:
    """Headless-browser driver over a remote-debugging protocol endpoint."""

    def __init__(self, endpoint: str, settle_s: float = 0.1):
        self.endpoint = endpoint.rstrip("/")
        self.settle_s = settle_s
        self._ws: Optional[_MiniWebSocket] = None
        self._next_id = 1
        self._flag = False
        self._errors: list[str] = []
        self._log_lines: list[str] = []

    # -- plumbing -----------------------------------------------------------------

    def _connect(self) -> None:
        import httpx

        try:
            resp = httpx.put(f"{self.endpoint}/json/new?about:blank", timeout=10)
            if resp.status_code >= 400:
                resp = httpx.get(f"{self.endpoint}/json/new?about:blank", timeout=10)
            target = resp.json()
        except Exception as exc:
            raise DriverCrashError(f"cannot reach debugging endpoint: {exc}") from exc
        self._ws = _MiniWebSocket(target["webSocketDebuggerUrl"])
        self._cmd("Page.enable")
        self._cmd("Runtime.enable")

    def _cmd(self, method: str, params: Optional[dict] = None) -> dict:
        if self._ws is None:
            raise DriverCrashError("driver is not connected")
        msg_id = self._next_id
        self._next_id += 1
        self._ws.send_text(json.dumps({"id": msg_id, "method": method, "params": params or {}}))
        deadline = time.monotonic() + 30
        while time.monotonic() < deadline:
            data = json.loads(self._ws.recv_text())
            if data.get("id") == msg_id:
                if "error" in data:
                    raise DriverCrashError(f"{method}: {data['error'].get('message')}")
                return data.get("result", {})
            self._handle_event(data)
        raise DriverCrashError(f"{method}: no reply")

    def _handle_event(self, data: dict) -> None:
        method = data.get("method", "")
        params = data.get("params", {})
        if method == "Runtime.exceptionThrown":
            details = params.get("exceptionDetails", {})
            text = details.get("exception", {}).get("description") or details.get("text", "error")
            self._errors.append(text)
        elif method == "Runtime.consoleAPICalled":
            args = params.get("args", [])
            text = " ".join(str(a.get("value", "")) for a in args)
            if params.get("type") == "error":
                self._errors.append(text)
            elif text.startswith("DEBUG ["):
                self._log_lines.append(text)

    def _drain_events(self, duration_s: float = 0.15) -> None:
        if self._ws is None:
            return
        deadline = time.monotonic() + duration_s
        while time.monotonic() < deadline:
            try:
                self._ws.sock.settimeout(max(0.01, deadline - time.monotonic()))
                data = json.loads(self._ws.recv_text(timeout_s=max(0.01, deadline - time.monotonic())))
            except (TimeoutError, socket.timeout):
                break
            except DriverCrashError:
                break
            self._handle_event(data)

    def _eval(self, expression: str):
        result = self._cmd("Runtime.evaluate", {"expression": expression, "returnByValue": True})
        return result.get("result", {}).get("value")

    # -- capability surface -----------------------------------------------------------

    def load(self, document: str) -> None:
        if self._ws is None:
            self._connect()
        self._errors = []
        self._log_lines = []
        if self._flag:
            self._cmd(
                "Page.addScriptToEvaluateOnNewDocument", {"source": "window.LOG_DEBUG = true;"}
            )
        encoded = base64.b64encode(document.encode("utf-8")).decode("ascii")
        self._cmd("Page.navigate", {"url": f"data:text/html;base64,{encoded}"})
        deadline = time.monotonic() + 15
        while time.monotonic() < deadline:
            self._drain_events(0.1)
            if self._eval("document.readyState") == "complete":
                break
        time.sleep(self.settle_s)
        self._drain_events(0.1)

    def _require_element(self, element_id: str) -> None:
        exists = self._eval(f"document.getElementById({json.dumps(element_id)}) !== null")
        if not exists:
            raise ElementNotFoundError(element_id)

    def click(self, element_id: str) -> None:
        self._require_element(element_id)
        self._eval(f"document.getElementById({json.dumps(element_id)}).click()")
        self._drain_events()

    def set_value(self, element_id: str, value) -> None:
        self._require_element(element_id)
        self._eval(
            "(() => { const el = document.getElementById(%s);"
            " el.value = %s;"
            " el.dispatchEvent(new Event('input', {bubbles: true}));"
            " el.dispatchEvent(new Event('change', {bubbles: true})); })()"
            % (json.dumps(element_id), json.dumps(value))
        )
        self._drain_events()

    def toggle(self, element_id: str) -> None:
        self._require_element(element_id)
        self._eval(f"document.getElementById({json.dumps(element_id)}).click()")
        self._drain_events()

    def read_content(self, element_id: str) -> str:
        self._require_element(element_id)
        value = self._eval(
            "(() => { const el = document.getElementById(%s);"
            " return el.value !== undefined && el.value !== '' ? String(el.value) : el.textContent; })()"
            % json.dumps(element_id)
        )
        return value or ""

    def screenshot(self) -> bytes:
        result = self._cmd("Page.captureScreenshot", {"format": "png"})
        return base64.b64decode(result.get("data", ""))

    def console_errors(self) -> list[str]:
        self._drain_events()
        return list(self._errors)

    def set_debug_flag(self, enabled: bool) -> None:
        self._flag = enabled

    def debug_logs(self) -> list[LogLine]:
        self._drain_events()
        parsed = [parse_log_line(line) for line in self._log_lines]
        return [p for p in parsed if p is not None]

    def list_buttons(self) -> list[str]:
        ids = self._eval(
            "JSON.stringify(Array.from(document.querySelectorAll(\"button, [role='button']\")).map(b => b.id).filter(Boolean))"
        )
        return json.loads(ids) if ids else []

    def close(self) -> None:
        if self._ws is not None:
            self._ws.close()
            self._ws = None
