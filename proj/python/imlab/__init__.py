"""Saturated induction-motor injection & observability lab."""

try:
    from ._imlab import *  # noqa: F401,F403  (installed wheel layout)
    from ._imlab import __version__  # noqa: F401
except ImportError:  # in-tree use: extension sits next to the build dir
    from _imlab import *  # noqa: F401,F403
    from _imlab import __version__  # noqa: F401
