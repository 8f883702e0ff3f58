"""Relative GNSS-vision fusion for teach-and-repeat navigation.

Teach a relative map by driving a route once, repeat against it with lazy
GNSS logging and localization-time fusion, replay recorded drives offline,
and compute report metrics. The compiled extension carries the full API;
this package re-exports it.
"""

try:
    # Installed layout: the extension lives inside the package.
    from ._relnav import *  # noqa: F401,F403
    from . import _relnav as _impl
except ImportError:
    # Build-tree layout: the extension sits on PYTHONPATH next to the package.
    from _relnav import *  # noqa: F401,F403
    import _relnav as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
__version__ = "0.1.0"
