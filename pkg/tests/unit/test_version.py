import re

from streamweak import VERSION, __version__


def test_version() -> None:
    assert VERSION == __version__.__VERSION__
    assert re.fullmatch(r"\d+\.\d+\.\d+(-\w+)?", VERSION)
