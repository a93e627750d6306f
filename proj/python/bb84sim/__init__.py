"""Python bindings for the bb84sim C++ core."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
