"""Curiosity-driven iLQR on a learned arm dynamics model."""

try:
    from curilqr._core import *  # noqa: F401,F403
except ImportError:
    # Build-tree layout: the extension sits next to the package on sys.path.
    from _core import *  # noqa: F401,F403

__version__ = "0.1.0"
