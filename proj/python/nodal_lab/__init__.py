"""Random-wave nodal set laboratory.

Exact closed-form constants (jet covariance, signed permutation sums,
equidistribution constants) plus Monte Carlo experiments on flat-torus
random-wave ensembles: zero counts, nodal volume, Euler characteristics and
the conormal-cycle pairing.
"""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
