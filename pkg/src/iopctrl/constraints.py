"""Linear equality system for truncated closed-loop parameters.

Under a finite expansion every entry of the residual maps

    X - I - G Y,    W - G Z,    -X G + W,    -Y G + Z - I

is a rational function whose numerator is linear in the expansion
coefficients.  Setting every numerator coefficient to zero yields the rows of
``A x = b``.  Sparsity of the controller is imposed on Y directly, which is
exact for quadratically invariant patterns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .basis import BLOCKS, sigma_power
from .tf import (
    CONTINUOUS,
    DISCRETE,
    RationalFunction,
    RationalMatrix,
    ShapeMismatch,
    poly_lcm,
    properness_class,
)
from .verify import closed_loop_maps, ImproperPlantError

_DEDUP_DECIMALS = 12


@dataclass(frozen=True)
class SparsityPattern:
    """Binary ``m x p`` mask; zero entries force the controller entry to vanish."""

    S: np.ndarray

    def __post_init__(self):
        S = np.asarray(self.S)
        if S.ndim != 2 or not np.isin(S, (0, 1)).all():
            raise ValueError("sparsity pattern must be a 2-D 0/1 matrix")
        S = S.astype(int)
        S.setflags(write=False)
        object.__setattr__(self, "S", S)

    @property
    def shape(self):
        return self.S.shape

    def violation(self, K: RationalMatrix) -> float:
        """Largest scaled numerator coefficient of ``K`` outside the pattern."""
        if K.shape != self.shape:
            raise ShapeMismatch(f"controller {K.shape} vs pattern {self.shape}")
        worst = 0.0
        for i, j in zip(*np.nonzero(self.S == 0)):
            e = K[i, j]
            worst = max(worst, float(np.max(np.abs(e.num)) / np.max(np.abs(e.den))))
        return worst

    def to_dict(self):
        return {"pattern": self.S.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["pattern"] if isinstance(d, dict) else d))


@dataclass(frozen=True, eq=False)
class EqualitySystem:
    """Rows of ``A x = b`` over the stacked coefficients of a truncated parameter."""

    A: np.ndarray
    b: np.ndarray
    var_index: dict = field(repr=False)
    N: int = 0
    dims: tuple = (0, 0)
    domain: str = DISCRETE
    a: float | None = None

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.A)) if self.A.size else 0

    def residual(self, x) -> float:
        return float(np.max(np.abs(self.A @ x - self.b))) if self.b.size else 0.0

    def stacked(self, other: "EqualitySystem") -> "EqualitySystem":
        return EqualitySystem(
            np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]),
            self.var_index, self.N, self.dims, self.domain, self.a,
        )

    def with_rows(self, A_extra, b_extra) -> "EqualitySystem":
        return EqualitySystem(
            np.vstack([self.A, A_extra]), np.concatenate([self.b, b_extra]),
            self.var_index, self.N, self.dims, self.domain, self.a,
        )

    def to_triplets(self) -> dict:
        """Sparse (row, col, value) export for debugging."""
        r, c = np.nonzero(self.A)
        return {
            "shape": list(self.A.shape),
            "rows": r.tolist(),
            "cols": c.tolist(),
            "vals": self.A[r, c].tolist(),
            "b": self.b.tolist(),
            "vars": [[*k, v] for k, v in sorted(self.var_index.items(), key=lambda kv: kv[1])],
        }


def variable_index(N: int, p: int, m: int) -> dict:
    shp = {"X": (p, p), "Y": (m, p), "W": (p, m), "Z": (m, m)}
    idx, k = {}, 0
    for blk in BLOCKS:
        r, c = shp[blk]
        for n in range(N + 1):
            for i in range(r):
                for j in range(c):
                    idx[(blk, n, i, j)] = k
                    k += 1
    return idx


def _lcm_of(dens: list) -> np.ndarray:
    uniq = []
    for d in dens:
        if d.size > 1 and not any(u.size == d.size and np.array_equal(u, d) for u in uniq):
            uniq.append(d)
    if not uniq:
        return np.ones(1)
    if len(uniq) == 1:
        return uniq[0].copy()
    return poly_lcm(uniq)


def _exact_quotient(L: np.ndarray, d: np.ndarray) -> np.ndarray:
    if d.size == 1:
        return L / d[0]
    if d.size == L.size and np.array_equal(d, L):
        return np.ones(1)
    q, _ = P.polydiv(L, d)
    return q


def _residual_rows(terms, const, N, domain, a, var_index, ncols):
    """Numerator-coefficient rows for one scalar residual entry.

    ``terms`` is a list of ``(multiplier, block, i, j)`` meaning
    ``multiplier * block[i, j]``; ``const`` is a rational constant.
    """
    dens = [m.den for m, *_ in terms if not m.is_zero()]
    if not const.is_zero():
        dens.append(const.den)
    L = _lcm_of(dens)
    pows = [sigma_power(N - n, domain, a) for n in range(N + 1)]
    polys = {}
    for mult, blk, i, j in terms:
        if mult.is_zero():
            continue
        base = P.polymul(mult.num, _exact_quotient(L, mult.den))
        for n in range(N + 1):
            col = var_index[(blk, n, i, j)]
            polys[col] = P.polyadd(polys.get(col, np.zeros(1)), P.polymul(base, pows[n]))
    rhs = np.zeros(1)
    if not const.is_zero():
        rhs = -P.polymul(P.polymul(const.num, _exact_quotient(L, const.den)), sigma_power(N, domain, a))
    width = max([p.size for p in polys.values()] + [rhs.size])
    A = np.zeros((width, ncols))
    for col, poly in polys.items():
        A[: poly.size, col] = poly
    b = np.zeros(width)
    b[: rhs.size] = rhs
    return A, b


def _clean_rows(A: np.ndarray, b: np.ndarray):
    """Scale rows to unit max magnitude, drop empty rows and duplicates."""
    mag = np.maximum(np.max(np.abs(A), axis=1), np.abs(b))
    keep = mag > 1e-14 * (np.max(mag) if mag.size else 1.0)
    A, b, mag = A[keep], b[keep], mag[keep]
    A = A / mag[:, None]
    b = b / mag
    if A.shape[0] == 0:
        return A, b
    # fix the sign so that +row and -row collapse together
    Ab = np.hstack([A, b[:, None]])
    first = Ab[np.arange(Ab.shape[0]), np.argmax(np.abs(Ab) > 1e-12, axis=1)]
    Ab = Ab * np.sign(first)[:, None]
    _, uniq = np.unique(np.round(Ab, _DEDUP_DECIMALS), axis=0, return_index=True)
    Ab = Ab[np.sort(uniq)]
    return Ab[:, :-1], Ab[:, -1]


def assemble(
    G: RationalMatrix,
    N: int,
    a: float | None = None,
    sparsity: SparsityPattern | None = None,
) -> EqualitySystem:
    """Equality system for the truncated affine subspace of closed-loop maps.

    Parameters
    ----------
    G : RationalMatrix
        Strictly proper ``p x m`` plant.
    N : int
        Truncation order (>= 1).
    a : float, optional
        Basis pole for continuous time; required iff ``G.domain == 's'``.
    sparsity : SparsityPattern, optional
        ``m x p`` controller pattern; adds ``Y[i]_jk = 0`` wherever ``S_jk = 0``.
    """
    if properness_class(G) != "strictly_proper":
        raise ImproperPlantError("plant must be strictly proper")
    if N < 1:
        raise ValueError("truncation order N must be >= 1")
    if G.domain == CONTINUOUS:
        if a is None or a <= 0:
            raise ValueError("continuous time requires a basis pole a > 0")
        a = float(a)
    else:
        a = None
    p, m = G.shape
    if sparsity is not None and sparsity.shape != (m, p):
        raise ShapeMismatch(f"sparsity pattern {sparsity.shape} does not match controller shape {(m, p)}")
    vidx = variable_index(N, p, m)
    nv = len(vidx)
    one = RationalFunction.const(1.0)
    zero = RationalFunction([0.0])
    minus_one = RationalFunction.const(-1.0)
    negG = [[-G[i, j] for j in range(m)] for i in range(p)]
    blocks_A, blocks_b = [], []

    def add(terms, const):
        A_, b_ = _residual_rows(terms, const, N, G.domain, a, vidx, nv)
        blocks_A.append(A_)
        blocks_b.append(b_)

    # X - G Y - I
    for i in range(p):
        for j in range(p):
            terms = [(one, "X", i, j)] + [(negG[i][k], "Y", k, j) for k in range(m)]
            add(terms, minus_one if i == j else zero)
    # W - G Z
    for i in range(p):
        for j in range(m):
            add([(one, "W", i, j)] + [(negG[i][k], "Z", k, j) for k in range(m)], zero)
    # -X G + W
    for i in range(p):
        for j in range(m):
            add([(negG[k][j], "X", i, k) for k in range(p)] + [(one, "W", i, j)], zero)
    # -Y G + Z - I
    for i in range(m):
        for j in range(m):
            terms = [(negG[k][j], "Y", i, k) for k in range(p)] + [(one, "Z", i, j)]
            add(terms, minus_one if i == j else zero)

    A, b = _clean_rows(np.vstack(blocks_A), np.concatenate(blocks_b))
    sys_ = EqualitySystem(A, b, vidx, N, (p, m), G.domain, a)
    if sparsity is not None:
        sys_ = sys_.with_rows(*sparsity_rows(sparsity, N, vidx, nv))
    return sys_


def sparsity_rows(sparsity: SparsityPattern, N: int, vidx: dict, nv: int):
    zs = list(zip(*np.nonzero(sparsity.S == 0)))
    A = np.zeros((len(zs) * (N + 1), nv))
    r = 0
    for n in range(N + 1):
        for j, k in zs:
            A[r, vidx[("Y", n, j, k)]] = 1.0
            r += 1
    return A, np.zeros(A.shape[0])


def fixed_term_rows(system: EqualitySystem, blocks=("Y", "W")):
    """Rows pinning the order-0 coefficients of ``blocks`` to zero."""
    rows = [col for (blk, n, _, _), col in system.var_index.items() if n == 0 and blk in blocks]
    A = np.zeros((len(rows), system.n_vars))
    A[np.arange(len(rows)), rows] = 1.0
    return A, np.zeros(len(rows))


# ---------------------------------------------------------------------------
# quadratic invariance


def qi_check_sparsity(S_K, S_G) -> bool:
    """Structural QI test: support of ``S_K S_G S_K`` lies inside ``S_K``."""
    SK = np.asarray(S_K.S if isinstance(S_K, SparsityPattern) else S_K, dtype=int)
    SG = np.asarray(S_G, dtype=int)
    m, p = SK.shape
    if SG.shape != (p, m):
        raise ShapeMismatch(f"plant support {SG.shape} does not conform to pattern {SK.shape}")
    prod = (SK @ SG @ SK) > 0
    return bool(np.all(~prod | (SK > 0)))


def support(G: RationalMatrix) -> np.ndarray:
    r, c = G.shape
    return np.array([[0 if G[i, j].is_zero() else 1 for j in range(c)] for i in range(r)])


def h_G_map(G: RationalMatrix, K: RationalMatrix) -> RationalMatrix:
    """Closed-loop transformation ``-K (I - G K)^-1``."""
    return -closed_loop_maps(G, K).Y
