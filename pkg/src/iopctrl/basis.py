"""Finite expansions of the closed-loop maps on powers of ``1/sigma``.

Each block is written as ``sum_i C[i] * sigma**(-i)`` for ``i = 0..N`` with
``sigma = z`` in discrete time and ``sigma = s + a`` (``a > 0``) in continuous
time, so every expanded block is stable by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from numpy.polynomial import polynomial as P

from .tf import (
    CONTINUOUS,
    DISCRETE,
    ClosedLoopQuad,
    DomainError,
    RationalFunction,
    RationalMatrix,
    is_zero_poly,
    roots_of,
    trim,
)

DEFAULT_A = 3.0
DEFAULT_ORDER = {DISCRETE: 10, CONTINUOUS: 2}
BLOCKS = ("X", "Y", "W", "Z")


class InfiniteNormError(ValueError):
    """The continuous H2 norm diverges because a feedthrough term is nonzero."""


@dataclass(frozen=True, eq=False)
class TruncatedParam:
    """Coefficient stacks of shape ``(N+1, rows, cols)`` for X, Y, W and Z."""

    N: int
    domain: str
    X: np.ndarray
    Y: np.ndarray
    W: np.ndarray
    Z: np.ndarray
    a: float | None = None

    def __post_init__(self):
        if self.N < 0:
            raise ValueError("N must be nonnegative")
        if self.domain not in (DISCRETE, CONTINUOUS):
            raise DomainError(f"unknown domain {self.domain!r}")
        if self.domain == CONTINUOUS and not (self.a is not None and self.a > 0):
            raise ValueError("continuous expansion needs a > 0")
        for name in BLOCKS:
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.ndim != 3 or arr.shape[0] != self.N + 1:
                raise ValueError(f"{name} must have shape (N+1, r, c), got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        p, m = self.X.shape[1], self.Z.shape[1]
        want = {"X": (p, p), "Y": (m, p), "W": (p, m), "Z": (m, m)}
        for name, shp in want.items():
            if getattr(self, name).shape[1:] != shp:
                raise ValueError(f"{name} coefficients have shape {getattr(self, name).shape[1:]}, expected {shp}")

    @property
    def dims(self) -> tuple[int, int]:
        """``(p, m)``: plant outputs and inputs."""
        return self.X.shape[1], self.Z.shape[1]

    @classmethod
    def zeros(cls, N, p, m, domain=DISCRETE, a=None) -> "TruncatedParam":
        shp = {"X": (p, p), "Y": (m, p), "W": (p, m), "Z": (m, m)}
        return cls(N, domain, *(np.zeros((N + 1,) + shp[b]) for b in BLOCKS), a=a)

    def vector(self) -> np.ndarray:
        """Stacked coefficients in the order X, Y, W, Z (each row-major)."""
        return np.concatenate([getattr(self, b).ravel() for b in BLOCKS])

    @classmethod
    def from_vector(cls, x, N, p, m, domain=DISCRETE, a=None) -> "TruncatedParam":
        x = np.asarray(x, dtype=float)
        shp = {"X": (p, p), "Y": (m, p), "W": (p, m), "Z": (m, m)}
        out, k = [], 0
        for b in BLOCKS:
            size = (N + 1) * shp[b][0] * shp[b][1]
            out.append(x[k:k + size].reshape((N + 1,) + shp[b]))
            k += size
        if k != x.size:
            raise ValueError(f"vector has {x.size} entries, layout needs {k}")
        return cls(N, domain, *out, a=a)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def scaled(self, alpha: float) -> "TruncatedParam":
        return TruncatedParam.from_vector(alpha * self.vector(), self.N, *self.dims, self.domain, self.a)

    def _combine(self, other, alpha, beta):
        return TruncatedParam.from_vector(
            alpha * self.vector() + beta * other.vector(), self.N, *self.dims, self.domain, self.a
        )

    def to_dict(self) -> dict:
        d = {"N": self.N, "domain": self.domain, "a": self.a}
        for b in BLOCKS:
            d[b] = getattr(self, b).tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TruncatedParam":
        return cls(int(d["N"]), d["domain"], *(np.asarray(d[b], dtype=float) for b in BLOCKS), a=d.get("a"))


def sigma(domain: str, a: float | None = None) -> np.ndarray:
    """Coefficients of the basis variable: ``z`` or ``s + a``."""
    if domain == DISCRETE:
        return np.array([0.0, 1.0])
    return np.array([float(a), 1.0])


def sigma_power(k: int, domain: str, a: float | None = None) -> np.ndarray:
    return P.polypow(sigma(domain, a), k)


def expand_block(coeffs: np.ndarray, domain: str, a: float | None = None) -> RationalMatrix:
    """``sum_i coeffs[i] * sigma**(-i)`` as a rational matrix over ``sigma**N``."""
    coeffs = np.asarray(coeffs, dtype=float)
    N = coeffs.shape[0] - 1
    pows = [sigma_power(N - i, domain, a) for i in range(N + 1)]
    root = 0.0 if domain == DISCRETE else -float(a)
    rows, cols = coeffs.shape[1:]
    entries = []
    for r in range(rows):
        row = []
        for c in range(cols):
            num = np.zeros(N + 1)
            for i in range(N + 1):
                if coeffs[i, r, c] != 0.0:
                    num[: pows[i].size] += coeffs[i, r, c] * pows[i]
            num = trim(num)
            if is_zero_poly(num):
                row.append(RationalFunction([0.0]))
            else:
                row.append(RationalFunction.from_zpk(num[-1], roots_of(num), [root] * N))
        entries.append(row)
    return RationalMatrix(entries, domain)


def expand(tp: TruncatedParam) -> ClosedLoopQuad:
    return ClosedLoopQuad(*(expand_block(getattr(tp, b), tp.domain, tp.a) for b in BLOCKS))


def cost_blocks(tp: TruncatedParam) -> np.ndarray:
    """Coefficients ``J[i]`` of ``[[W, X - I], [Z - I, Y]]``, shape ``(N+1, p+m, m+p)``."""
    p, m = tp.dims
    J = np.zeros((tp.N + 1, p + m, m + p))
    J[:, :p, :m] = tp.W
    J[:, :p, m:] = tp.X
    J[:, p:, :m] = tp.Z
    J[:, p:, m:] = tp.Y
    J[0, :p, m:] -= np.eye(p)
    J[0, p:, :m] -= np.eye(m)
    return J


def h2_sq_discrete(tp: TruncatedParam) -> float:
    """Squared H2 norm of ``[[W, X-I], [Z-I, Y]]``: sum of ``trace(J[i]^T J[i])``."""
    if tp.domain != DISCRETE:
        raise DomainError("h2_sq_discrete needs a discrete-time expansion")
    return float(np.sum(cost_blocks(tp) ** 2))


def gram(N: int, a: float) -> np.ndarray:
    """H2 Gram matrix of ``(s+a)**-i``, ``i = 1..N``.

    ``<(s+a)**-i, (s+a)**-j> = C(i+j-2, i-1) / (2a)**(i+j-1)``, the integral of
    the product of the impulse responses ``t**(i-1) e**(-a t) / (i-1)!``.
    """
    if a <= 0:
        raise ValueError("a must be positive")
    G = np.empty((N, N))
    for i in range(1, N + 1):
        for j in range(1, N + 1):
            G[i - 1, j - 1] = comb(i + j - 2, i - 1) / (2.0 * a) ** (i + j - 1)
    return G


def h2_sq_continuous(tp: TruncatedParam, atol: float = 1e-12) -> float:
    if tp.domain != CONTINUOUS:
        raise DomainError("h2_sq_continuous needs a continuous-time expansion")
    J = cost_blocks(tp)
    if np.max(np.abs(J[0])) > atol:
        raise InfiniteNormError(
            "continuous H2 norm is infinite: need X[0] = I, Z[0] = I, Y[0] = 0, W[0] = 0"
        )
    if tp.N == 0:
        return 0.0
    inner = np.einsum("irc,jrc->ij", J[1:], J[1:])
    return float(np.sum(inner * gram(tp.N, tp.a)))
