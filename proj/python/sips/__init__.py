"""Stochastic-interpolant sampling with a predictive-generative drift split."""

try:
    from ._sips import *  # noqa: F401,F403  (installed package layout)
    from ._sips import __doc__ as _doc
except ImportError:  # in-tree builds put _sips next to the package on sys.path
    from _sips import *  # noqa: F401,F403
    from _sips import __doc__ as _doc

__doc__ = _doc
