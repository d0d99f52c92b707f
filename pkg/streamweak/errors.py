"""Exception handling.

Every error raised by the package derives from :class:`StreamweakError` and
carries the exit code the command line front end terminates with.
"""

import logging
from typing import Any, Mapping, Optional, Sequence

from .constants import ExitCode

logger = logging.getLogger(__name__)


class StreamweakError(Exception):
    exit_code = ExitCode.PARAMETER

    def __init__(
        self, message: str, exit_code: Optional[ExitCode] = None, payload: Any = None
    ):
        Exception.__init__(self, message)
        self.message = message
        if exit_code is not None:
            self.exit_code = exit_code
        self.payload = payload

    def to_dict(self) -> Mapping[str, Any]:
        ret = dict(self.payload or ())
        ret["message"] = self.message
        ret["exit_code"] = self.exit_code.value
        return ret


class ParameterError(StreamweakError):
    """Invalid parameter or flag."""


class CapacityError(ParameterError):
    def __init__(self, what: str, size: int, limit: int, hint: str = "") -> None:
        msg = f"{what}: {size} exceeds the limit of {limit}."
        if hint:
            msg += " " + hint
        super().__init__(msg, payload={"size": size, "limit": limit})


class StreamError(ParameterError):
    """Malformed stream (duplicates or unknown ids)."""


class PreconditionError(ParameterError):
    pass


class MissingVariable(ParameterError):
    def __init__(self, variable: str):
        super().__init__(f"Missing variable: {variable}")
        self.variable = variable


class OracleError(StreamweakError):
    exit_code = ExitCode.ORACLE


class OracleViolation(OracleError):
    """Oracle returned a value outside of [0, inf)."""

    def __init__(self, subset: Sequence[int], value: float) -> None:
        super().__init__(
            f"Oracle returned {value!r} for subset {sorted(subset)}.",
            payload={"subset": sorted(subset), "value": value},
        )
        self.subset = tuple(subset)
        self.value = value


class InvariantError(OracleError):
    pass


class ExternConnectionError(OracleError):
    def __init__(self, message: str, stderr: str = "") -> None:
        if stderr:
            message = f"{message} Child stderr: {stderr.strip()}"
        super().__init__(message, payload={"stderr": stderr})
        self.stderr = stderr


class ProtocolError(OracleError):
    def __init__(self, message: str, line: Optional[str] = None) -> None:
        if line is not None:
            message = f"{message} Offending line: {line!r}"
        super().__init__(message, payload={"line": line})
        self.line = line


class StorageError(StreamweakError):
    exit_code = ExitCode.STORAGE

    def __init__(self, path: str, reason: Any) -> None:
        super().__init__(f"{path}: {reason}", payload={"path": path})
        self.path = path


def handle_error(error: StreamweakError) -> int:
    """Log error and map it to an exit code.

    Args:
        error: Error to handle.

    Returns:
        Exit code of ``error``.
    """
    logger.error(error.message)
    return int(error.exit_code.value)
