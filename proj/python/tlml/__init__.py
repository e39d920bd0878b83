"""Locally weighted likelihood estimation for epidemic counts.

The compiled core is packaged as ``tlml._core`` in installed builds; during
in-tree development the extension sits on ``PYTHONPATH`` as a top-level
``_core`` module.
"""

try:
    from tlml._core import *  # noqa: F401,F403
    from tlml._core import __doc__ as _core_doc
except ImportError:  # in-tree build: extension not inside the package
    from _core import *  # noqa: F401,F403
    from _core import __doc__ as _core_doc

__doc__ = _core_doc or __doc__
__version__ = "0.1.0"
