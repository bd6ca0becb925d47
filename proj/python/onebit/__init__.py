"""One-bit massive MIMO detection: linear receivers, ML, OBMNet and
nearest-neighbor second-stage search."""

from ._onebit import *  # noqa: F401,F403
from ._onebit import __version__  # noqa: F401
