"""Hybrid spike/integer matmul simulator bindings."""

from ._kirin import *  # noqa: F401,F403
