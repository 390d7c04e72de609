"""Stochastic open-system dynamics.

Langevin ensembles with memory kernels and colored noise, phase-space
(Wigner) ensemble propagation, Onsager-Machlup path weights, and
influence-kernel construction from a classical process specification.
"""

try:
    from qisd._qisd import *  # noqa: F401,F403
    from qisd._qisd import __version__, oracle  # noqa: F401
except ImportError:  # development layout: extension built next to the package
    from _qisd import *  # noqa: F401,F403
    from _qisd import __version__, oracle  # noqa: F401
