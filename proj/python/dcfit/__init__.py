"""Doubly-robust average-causal-effect estimation with double cross-fitting.

Thin wrapper over the compiled extension; see the README for the CLI and
file formats.
"""

try:
    from dcfit._dcfit import *  # noqa: F401,F403  (installed layout)
    from dcfit._dcfit import __version__, rng_algorithm  # noqa: F401
except ImportError:  # in-tree build: extension on sys.path directly
    from _dcfit import *  # noqa: F401,F403
    from _dcfit import __version__, rng_algorithm  # noqa: F401
