"""Built-in benchmark plants, sparsity pattern and reference controller.

The 5x5 lower-triangular plants are built from two scalar transfer
functions ``v`` and ``u``::

    [v 0 0 0 0]
    [v u 0 0 0]
    [v u v 0 0]
    [v u v v 0]
    [v u v v u]
"""

import numpy as np
from numpy.polynomial import polynomial as P

from .tf import CONTINUOUS, DISCRETE, RationalFunction, RationalMatrix

_LAYOUT = [
    "v....",
    "vu...",
    "vuv..",
    "vuvv.",
    "vuvvu",
]


def _chain_plant(v: RationalFunction, u: RationalFunction, domain: str) -> RationalMatrix:
    zero = RationalFunction([0.0])
    lookup = {"v": v, "u": u, ".": zero}
    return RationalMatrix([[lookup[ch] for ch in row] for row in _LAYOUT], domain)


def discrete_plant() -> RationalMatrix:
    """Unstable discrete plant with v = 0.1/(z-0.5), u = 1/(z-2)."""
    v = RationalFunction([0.1], [-0.5, 1.0])
    u = RationalFunction([1.0], [-2.0, 1.0])
    return _chain_plant(v, u, DISCRETE)


def continuous_plant() -> RationalMatrix:
    """Unstable continuous plant with v = 1/(s+1), u = 1/(s-1)."""
    v = RationalFunction([1.0], [1.0, 1.0])
    u = RationalFunction([1.0], [-1.0, 1.0])
    return _chain_plant(v, u, CONTINUOUS)


def lower_triangular_pattern(n: int = 5) -> np.ndarray:
    return np.tril(np.ones((n, n), dtype=int))


def reference_controller() -> RationalMatrix:
    """Published sparse stabilizing controller for :func:`continuous_plant`.

    ``K0 = 8/(s+7) * M`` with nonzero entries ``M[1,1] = -2``, ``M[3,1] = 1``,
    ``M[4,4] = -2`` and ``M[4,1] = 2(s+5)(s+3)/((s+1)(s+7))``.
    """
    g = RationalFunction([8.0], [7.0, 1.0])
    K = [[RationalFunction([0.0])] * 5 for _ in range(5)]
    K[1][1] = g * -2.0
    K[3][1] = g
    K[4][4] = g * -2.0
    K[4][1] = g * RationalFunction(
        2.0 * P.polyfromroots([-5.0, -3.0]), P.polyfromroots([-1.0, -7.0])
    )
    return RationalMatrix(K, CONTINUOUS)
