"""One-pass streaming maximization of (weakly) submodular set functions."""

from .__version__ import __VERSION__

VERSION: str = __VERSION__
