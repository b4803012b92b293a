"""Synthetic mmWave RSS map workbench (python bindings)."""

try:
    from rssgen._rssgen import *  # noqa: F401,F403  (installed package layout)
except ImportError:
    from _rssgen import *  # noqa: F401,F403  (in-tree build layout)
