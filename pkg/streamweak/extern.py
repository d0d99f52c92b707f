"""Value oracle backed by an external process.

The child speaks UTF-8 JSON lines over its standard streams:

* handshake, child to parent: ``{"ready": true, "n": <positive int>}``
* request, parent to child: ``{"id": <u64>, "subset": [<sorted ids>]}``
* response, child to parent: ``{"id": <same id>, "value": <float >= 0>}``

Requests are answered one at a time. A request that times out is sent once
more under a new id; a late answer to the abandoned id is skipped. Anything
else the child prints on stdout is a protocol error; its stderr is passed
to the ``streamweak.extern.child`` logger.

No monotonicity or submodularity is assumed or checked for external
objectives, so no approximation guarantee applies.
"""

import collections
import json
import logging
import math
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import IO, Any, Deque, List, Mapping, Optional, Sequence, Set

from marshmallow import Schema, ValidationError, fields
from marshmallow.validate import Equal, Range

from .constants import EXTERN_TIMEOUT_MS
from .errors import (
    ExternConnectionError,
    OracleError,
    OracleViolation,
    ParameterError,
    ProtocolError,
)
from .oracle import ElementId, GroundSet, Subset, Valuation

logger = logging.getLogger(__name__)
child_logger = logging.getLogger("streamweak.extern.child")

#: Child stderr lines kept for error messages.
STDERR_TAIL = 50
#: Seconds a closing child gets before it is terminated.
CLOSE_GRACE_S = 1.0

_EOF = object()


class HandshakeSchema(Schema):
    ready = fields.Boolean(required=True, validate=Equal(True))
    n = fields.Integer(required=True, strict=True)


class ResponseSchema(Schema):
    id = fields.Integer(required=True, strict=True, validate=Range(min=0))
    value = fields.Float(required=True, allow_nan=True)


@dataclass
class ExternOracleConfig:
    """Command line of the child and the per request timeout."""

    command: List[str]
    timeout_ms: int = EXTERN_TIMEOUT_MS

    def __post_init__(self) -> None:
        if not self.command:
            raise ParameterError("External oracle command is empty.")
        if self.timeout_ms <= 0:
            raise ParameterError(f"Timeout must be > 0 ms: {self.timeout_ms}")


def _pump_stdout(stream: IO[str], lines: "queue.Queue[Any]") -> None:
    for line in stream:
        lines.put(line)
    lines.put(_EOF)


def _pump_stderr(stream: IO[str], tail: Deque[str]) -> None:
    for line in stream:
        line = line.rstrip("\n")
        tail.append(line)
        child_logger.warning(line)


class ExternOracle(Valuation):
    """Connection to a running child process.

    Use :func:`extern_connect` to create one.
    """

    concurrent_safe = False
    name = "extern"

    def __init__(self, config: ExternOracleConfig) -> None:
        self.config = config
        self._lock = threading.Lock()
        self._next_id = 0
        self._abandoned: Set[int] = set()
        self._lines: "queue.Queue[Any]" = queue.Queue()
        self._stderr: Deque[str] = collections.deque(maxlen=STDERR_TAIL)
        self._closed = True
        try:
            self._proc = subprocess.Popen(  # pylint: disable=consider-using-with
                config.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                bufsize=1,  # line buffering
                text=True,
                encoding="utf8",
            )
        except OSError as e:
            raise ExternConnectionError(f"Cannot spawn {config.command}: {e}") from e
        self._closed = False
        assert self._proc.stdout is not None and self._proc.stderr is not None
        self._threads = [
            threading.Thread(target=_pump_stdout, args=(self._proc.stdout, self._lines), daemon=True),
            threading.Thread(target=_pump_stderr, args=(self._proc.stderr, self._stderr), daemon=True),
        ]
        for thread in self._threads:
            thread.start()
        try:
            n = self._handshake()
        except Exception:
            self.close()
            raise
        super().__init__(GroundSet(n))
        logger.info("Connected to %s (n=%d)", " ".join(config.command), n)

    @property
    def timeout_s(self) -> float:
        return self.config.timeout_ms / 1000.0

    def stderr(self) -> str:
        """Recent stderr output of the child."""
        if self._proc.poll() is not None:
            self._threads[1].join(timeout=CLOSE_GRACE_S)
        return "\n".join(self._stderr)

    def _readline(self) -> Optional[str]:
        """Next stdout line, ``None`` on timeout.

        Raises:
            :class:`ExternConnectionError` once the child closed stdout.
        """
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            return None
        if line is _EOF:
            self._lines.put(_EOF)
            try:
                self._proc.wait(timeout=CLOSE_GRACE_S)
            except subprocess.TimeoutExpired:
                pass
            raise ExternConnectionError(
                f"External oracle exited with code {self._proc.returncode}.", self.stderr()
            )
        logger.debug("<- %s", line.rstrip("\n"))
        return str(line)

    def _handshake(self) -> int:
        line = self._readline()
        if line is None:
            raise ExternConnectionError(
                f"No handshake within {self.config.timeout_ms} ms.", self.stderr()
            )
        try:
            message = HandshakeSchema().load(json.loads(line))
        except (ValueError, ValidationError) as e:
            raise ExternConnectionError(f"Malformed handshake {line.strip()!r}: {e}", self.stderr()) from e
        n = int(message["n"])
        if n < 1:
            raise ParameterError(f"External oracle announced n={n}; need n >= 1.")
        return n

    def _send(self, request_id: int, members: Sequence[ElementId]) -> None:
        line = json.dumps({"id": request_id, "subset": list(members)})
        logger.debug("-> %s", line)
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as e:
            raise OracleError(f"Cannot write to external oracle: {e}") from e

    def _receive(self, request_id: int) -> Optional[float]:
        while True:
            line = self._readline()
            if line is None:
                return None
            try:
                message: Mapping[str, Any] = ResponseSchema().load(json.loads(line))
            except (ValueError, ValidationError) as e:
                raise ProtocolError(f"Malformed response: {e}", line.rstrip("\n")) from e
            if message["id"] == request_id:
                return float(message["value"])
            if message["id"] in self._abandoned:
                self._abandoned.discard(message["id"])
                logger.debug("Skipped late response %d", message["id"])
                continue
            raise ProtocolError(
                f"Response id {message['id']} does not match request {request_id}.",
                line.rstrip("\n"),
            )

    def request(self, members: Sequence[ElementId]) -> float:
        """Round trip for ``members``, sorted ascending on the wire."""
        members = sorted(members)
        with self._lock:
            if self._closed:
                raise OracleError("External oracle is closed.")
            for attempt in range(2):
                request_id = self._next_id
                self._next_id += 1
                self._send(request_id, members)
                value = self._receive(request_id)
                if value is not None:
                    break
                self._abandoned.add(request_id)
                logger.warning(
                    "Request %d timed out after %d ms (attempt %d)",
                    request_id,
                    self.config.timeout_ms,
                    attempt + 1,
                )
            else:
                raise OracleError(
                    f"External oracle did not answer within {self.config.timeout_ms} ms, twice."
                )
        if math.isnan(value) or math.isinf(value) or value < 0:
            raise OracleViolation(members, value)
        return value

    def value(self, members: Sequence[ElementId]) -> float:
        return self.request(members)

    def close(self) -> None:
        """Close stdin and wait for the child; terminate it if it lingers."""
        if getattr(self, "_closed", True):
            return
        self._closed = True
        try:
            if self._proc.stdin is not None:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=CLOSE_GRACE_S)
        except subprocess.TimeoutExpired:
            logger.debug("Terminating external oracle %d", self._proc.pid)
            self._proc.terminate()
            try:
                self._proc.wait(timeout=CLOSE_GRACE_S)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __del__(self) -> None:
        try:
            self.close()
        except Exception:  # pylint: disable=broad-except
            pass


def extern_connect(config: ExternOracleConfig) -> ExternOracle:
    """Spawn the child and complete the handshake.

    Raises:
        :class:`ExternConnectionError` if the child cannot be spawned, exits,
            times out or sends a malformed handshake.
        :class:`ParameterError` if the handshake announces ``n < 1``.
    """
    return ExternOracle(config)


def extern_evaluate(handle: ExternOracle, s: Subset) -> float:
    """f(s) as computed by the child.

    Examples:
        With the shipped echo oracle (``f(S) = |S| / n``) and ``n = 6``,
        ``extern_evaluate(handle, Subset([0, 2]))`` returns 0.3333333333333333.
    """
    handle.ground.validate(s.members)
    return handle.request(s.members)
