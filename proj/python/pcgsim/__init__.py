"""Simulator for parity-controlled gates on a longitudinally coupled
superconducting-qubit device: circuit quantization, driven open-system
dynamics and process metrics. The heavy lifting lives in the C++ core."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
