"""
General utility classes and methods.
"""

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar, TYPE_CHECKING

from tqdm import tqdm

from .constants import LogLevel
from .errors import ParameterError

if TYPE_CHECKING:
    from logging import LogRecord

T = TypeVar("T")
R = TypeVar("R")

_LEVELS = {
    LogLevel.ERROR: logging.ERROR,
    LogLevel.INFO: logging.INFO,
    LogLevel.DEBUG: logging.DEBUG,
}


class TqdmLoggingHandler(logging.StreamHandler):  # type: ignore
    """Logging handler for tqdm and multi-threaded application.

    Writes to the current ``sys.stderr``; stdout is reserved for results.
    """

    def emit(self, record: "LogRecord") -> None:
        try:
            msg = self.format(record)
            tqdm.write(msg, file=sys.stderr)
            self.flush()
        except (KeyboardInterrupt, SystemExit):
            raise
        except:  # pylint: disable=W0702
            self.handleError(record)


def init_logging(level: str) -> None:
    """Configure the package logger.

    Args:
        level: One of "error", "info" or "debug".

    Raises:
        :class:`ParameterError` for unknown levels.
    """
    try:
        log_level = _LEVELS[LogLevel(level.lower())]
    except ValueError as e:
        raise ParameterError(f"Unknown log level: {level!r}") from e

    logger = logging.getLogger("streamweak")
    for handler in list(logger.handlers):
        if isinstance(handler, TqdmLoggingHandler):
            logger.removeHandler(handler)
    handler = TqdmLoggingHandler()
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    logger.addHandler(handler)
    logger.setLevel(log_level)
    logger.propagate = False


def fan_out(
    func: Callable[[T], R], items: Iterable[T], jobs: int = 1
) -> List[R]:
    """Map ``func`` over ``items``, results in item order.

    Args:
        func: Function to apply.
        items: Arguments.
        jobs: Worker threads; 1 maps sequentially.

    Returns:
        ``[func(item) for item in items]``
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(jobs, len(items))) as executor:
        return list(executor.map(func, items))


def relative_close(a: float, b: float, rtol: float, floor: Optional[float] = 1.0) -> bool:
    """Compare ``a`` and ``b`` relative to their magnitude.

    Args:
        a: Value.
        b: Reference.
        rtol: Relative tolerance.
        floor: (Optional) Smallest magnitude the tolerance is scaled by.
            Default: 1.0

    Returns:
        True, if ``|a - b| <= rtol * max(|a|, |b|, floor)``.
    """
    scale = max(abs(a), abs(b), floor or 0.0)
    return abs(a - b) <= rtol * scale
