"""Utils for files.
"""
import hashlib
import logging
import os
import pathlib
from typing import Iterator, List

from .errors import StorageError

logger = logging.getLogger(__name__)


def md5(fname: str) -> str:
    """MD5 hash value for a file.

    Args:
        fname: File to calculate MD5.

    Returns:
        MD5 hash for filename.
    """
    md5h = hashlib.md5()
    try:
        with open(fname, "rb") as file:
            while True:
                data = file.read(1024 * 64)
                if not data:
                    break
                md5h.update(data)
    except OSError as e:
        raise StorageError(fname, e) from e
    return md5h.hexdigest()


def create_dir(dname: str) -> None:
    """Create directory.

    If directory does not exist, create it and write a log message.

    Args:
        dname: Directory to create.
    """
    if not os.path.exists(dname):
        try:
            pathlib.Path(dname).mkdir(parents=True)
        except OSError as e:
            raise StorageError(dname, e) from e
        logger.debug("Created directory: %s", dname)


def iter_ids(fname: str) -> Iterator[int]:
    """Integers of a file, one per line; blank lines and ``#`` comments are skipped."""
    try:
        with open(fname, "r", encoding="utf8") as file:
            for lineno, line in enumerate(file, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                try:
                    yield int(line)
                except ValueError as e:
                    raise StorageError(fname, f"line {lineno}: not an integer: {line!r}") from e
    except OSError as e:
        raise StorageError(fname, e) from e


def read_ids(fname: str) -> List[int]:
    return list(iter_ids(fname))
