"""Multi-phase piecewise-constant image segmentation by threshold dynamics.

The heavy lifting lives in the compiled extension `_tdseg`; this package
re-exports its surface. When running from a build tree (extension on
PYTHONPATH rather than installed into the package), fall back to the flat
module name.
"""

try:
    from ._tdseg import *  # noqa: F401,F403
    from ._tdseg import __version__  # noqa: F401
except ImportError:  # build-tree layout
    from _tdseg import *  # noqa: F401,F403
    from _tdseg import __version__  # noqa: F401
