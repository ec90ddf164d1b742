"""Rational functions and rational transfer matrices.

Polynomials are numpy arrays of real coefficients in ascending powers of the
domain variable (``z`` for discrete time, ``s`` for continuous time).  Every
rational function is kept in a canonical form: monic denominator, trimmed
coefficient arrays and no (numerically) common roots between numerator and
denominator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

DISCRETE = "z"
CONTINUOUS = "s"
DOMAINS = (DISCRETE, CONTINUOUS)

CANCEL_TOL = 1e-7
STAB_EPS = 1e-9
# relative size below which a coefficient is treated as round-off
_CHOP = 1e-13
# radius used to group numerically split multiple roots
_CLUSTER_RADIUS = 1e-3


class DomainError(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# polynomial helpers


def trim(c, tol: float = 0.0) -> np.ndarray:
    """Drop high-order coefficients with magnitude ``<= tol``; zero is ``[0.]``."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if c.size == 0:
        return np.zeros(1)
    nz = np.nonzero(np.abs(c) > tol)[0]
    if nz.size == 0:
        return np.zeros(1)
    return c[: nz[-1] + 1].copy()


def is_zero_poly(c) -> bool:
    return not np.any(np.asarray(c) != 0)


def degree(c) -> int:
    """Degree of a trimmed polynomial; the zero polynomial has degree -1."""
    c = trim(c)
    return -1 if is_zero_poly(c) else c.size - 1


def poly_roots(c) -> np.ndarray:
    """Roots via companion-matrix eigenvalues."""
    c = trim(c)
    if c.size <= 1:
        return np.zeros(0, dtype=complex)
    return np.asarray(P.polyroots(c), dtype=complex)


def poly_from_roots(roots: Sequence[complex], lead: float = 1.0) -> np.ndarray:
    if len(roots) == 0:
        return np.array([float(lead)])
    c = P.polyfromroots(np.asarray(roots, dtype=complex))
    return lead * np.real(c)


def _match_roots(ra: np.ndarray, rb: np.ndarray, tol: float):
    """Greedy nearest-pair matching; returns matched index lists (ia, ib)."""
    if ra.size == 0 or rb.size == 0:
        return [], []
    dist = np.abs(ra[:, None] - rb[None, :])
    scale = 1.0 + np.minimum(np.abs(ra)[:, None], np.abs(rb)[None, :])
    ok = dist < tol * scale
    ia, ib = [], []
    if not ok.any():
        return ia, ib
    order = np.argsort(dist, axis=None)
    used_a = np.zeros(ra.size, bool)
    used_b = np.zeros(rb.size, bool)
    for flat in order:
        i, j = divmod(int(flat), rb.size)
        if not ok[i, j]:
            break
        if used_a[i] or used_b[j]:
            continue
        used_a[i] = used_b[j] = True
        ia.append(i)
        ib.append(j)
    return ia, ib


def _match_clusters(ra: np.ndarray, rb: np.ndarray, tol: float):
    """Match multiple roots that round-off has split into small clusters.

    Roots of ``a`` and ``b`` are grouped by proximity; inside a group the
    centroids of the ``a`` part and the ``b`` part are compared, which is far
    better conditioned than the individual roots of a multiple factor.
    Returns ``(common, keep_a, keep_b)`` root lists.
    """
    allr = np.concatenate([ra, rb])
    n = allr.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(allr[i] - allr[j]) < _CLUSTER_RADIUS * (1 + abs(allr[i])):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    common, keep_a, keep_b = [], [], []
    for idx in groups.values():
        ga = [allr[i] for i in idx if i < ra.size]
        gb = [allr[i] for i in idx if i >= ra.size]
        if ga and gb:
            ca, cb = np.mean(ga), np.mean(gb)
            if abs(ca - cb) < tol * (1 + abs(ca)) * max(len(ga), len(gb)):
                k = min(len(ga), len(gb))
                centre = 0.5 * (ca + cb)
                common += [centre] * k
                keep_a += [ca] * (len(ga) - k)
                keep_b += [cb] * (len(gb) - k)
                continue
        keep_a += ga
        keep_b += gb
    return common, keep_a, keep_b


def _symmetrize(roots: list) -> list:
    """Snap near-real roots to the real axis so reconstruction stays real."""
    out = []
    for r in roots:
        r = complex(r)
        if abs(r.imag) < 1e-10 * (1 + abs(r)):
            r = complex(r.real, 0.0)
        out.append(r)
    return out


def _low_order_zeros(c: np.ndarray) -> int:
    """Number of leading (low-order) coefficients that are round-off zeros."""
    tol = _CHOP * np.max(np.abs(c))
    k = 0
    while k < c.size - 1 and abs(c[k]) <= tol:
        k += 1
    return k


def roots_of(c) -> np.ndarray:
    """Roots with exact zeros for vanishing low-order coefficients."""
    c = trim(c)
    if c.size <= 1:
        return np.zeros(0, dtype=complex)
    k = _low_order_zeros(c)
    return np.concatenate([np.zeros(k, dtype=complex), poly_roots(c[k:])])


def cancel_roots(zeros, poles, tol: float = CANCEL_TOL):
    """Remove numerically common roots; returns ``(zeros, poles, changed)``."""
    zeros = np.asarray(zeros, dtype=complex)
    poles = np.asarray(poles, dtype=complex)
    if zeros.size == 0 or poles.size == 0:
        return zeros, poles, False
    ia, ib = _match_roots(zeros, poles, tol)
    zr = np.delete(zeros, ia)
    pr = np.delete(poles, ib)
    extra, keep_z, keep_p = _match_clusters(zr, pr, tol)
    if not ia and not extra:
        return zeros, poles, False
    if extra:
        zr = np.asarray(keep_z, dtype=complex)
        pr = np.asarray(keep_p, dtype=complex)
    return zr, pr, True


def cancel(num, den, tol: float = CANCEL_TOL):
    """Normalize ``num/den``: trim, cancel common roots, make ``den`` monic."""
    f = RationalFunction(num, den)
    return f.num.copy(), f.den.copy()


def poly_lcm(polys: Iterable[np.ndarray], tol: float = CANCEL_TOL) -> np.ndarray:
    """Monic least common multiple, built from matched roots."""
    roots: list[complex] = []
    for c in polys:
        c = trim(c)
        if is_zero_poly(c):
            raise ZeroDivisionError("lcm of zero polynomial")
        r = roots_of(c)
        if roots:
            ia, ib = _match_roots(np.asarray(roots), r, tol)
            r = np.delete(r, ib)
        roots.extend(r.tolist())
    return poly_from_roots(_symmetrize(roots))


# ---------------------------------------------------------------------------
# scalar rational functions


class RationalFunction:
    """Ratio of two real polynomials, ``gain * prod(x - zeros) / prod(x - poles)``.

    The function is stored both as roots (exact under multiplication) and as
    ascending coefficient arrays ``num``/``den`` with ``den`` monic.  Common
    numerator and denominator roots are cancelled on construction unless
    ``normalize=False``.
    """

    __slots__ = ("gain", "_zeros", "_poles", "_num", "_den")

    def __init__(self, num, den=(1.0,), normalize: bool = True):
        n, d = trim(num), trim(den)
        if is_zero_poly(d):
            raise ZeroDivisionError("zero denominator polynomial")
        if is_zero_poly(n):
            self._set(0.0, (), (), np.zeros(1), np.ones(1))
            return
        zr, pr = roots_of(n), roots_of(d)
        changed = False
        if normalize:
            zr, pr, changed = cancel_roots(zr, pr)
        gain = n[-1] / d[-1]
        if changed:
            self._set(gain, zr, pr)
        else:
            self._set(gain, zr, pr, n / d[-1], d / d[-1])

    def _set(self, gain, zeros, poles, num=None, den=None):
        zeros = np.asarray(_symmetrize(list(zeros)), dtype=complex)
        poles = np.asarray(_symmetrize(list(poles)), dtype=complex)
        zeros.setflags(write=False)
        poles.setflags(write=False)
        for arr in (num, den):
            if arr is not None:
                arr += 0.0  # no negative zeros
                arr.setflags(write=False)
        object.__setattr__(self, "gain", float(gain))
        object.__setattr__(self, "_zeros", zeros)
        object.__setattr__(self, "_poles", poles)
        object.__setattr__(self, "_num", num)
        object.__setattr__(self, "_den", den)

    def __setattr__(self, key, value):
        raise AttributeError("RationalFunction is immutable")

    @classmethod
    def from_zpk(cls, gain, zeros, poles, normalize: bool = True) -> "RationalFunction":
        self = object.__new__(cls)
        if gain == 0.0:
            self._set(0.0, (), (), np.zeros(1), np.ones(1))
            return self
        zeros = np.asarray(zeros, dtype=complex)
        poles = np.asarray(poles, dtype=complex)
        if normalize:
            zeros, poles, _ = cancel_roots(zeros, poles)
        self._set(gain, zeros, poles)
        return self

    @classmethod
    def const(cls, c: float) -> "RationalFunction":
        return cls([float(c)], [1.0])

    @property
    def num(self) -> np.ndarray:
        if self._num is None:
            c = poly_from_roots(self._zeros, self.gain) + 0.0
            c.setflags(write=False)
            object.__setattr__(self, "_num", c)
        return self._num

    @property
    def den(self) -> np.ndarray:
        if self._den is None:
            c = poly_from_roots(self._poles) + 0.0
            c.setflags(write=False)
            object.__setattr__(self, "_den", c)
        return self._den

    def is_zero(self) -> bool:
        return self.gain == 0.0

    def is_constant(self) -> bool:
        return self._zeros.size == 0 and self._poles.size == 0

    @property
    def relative_degree(self) -> int:
        if self.is_zero():
            return np.iinfo(int).max
        return self._poles.size - self._zeros.size

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.full(x.shape, self.gain, dtype=complex)
        for r in self._zeros:
            out = out * (x - r)
        for r in self._poles:
            out = out / (x - r)
        return out

    def __add__(self, other):
        other = _as_rf(other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        ia, ib = _match_roots(self._poles, other._poles, CANCEL_TOL)
        a_rest = np.delete(self._poles, ia)
        b_rest = np.delete(other._poles, ib)
        t1 = P.polymul(self.num, poly_from_roots(b_rest))
        t2 = P.polymul(other.num, poly_from_roots(a_rest))
        s = P.polyadd(t1, t2)
        s[np.abs(s) <= _CHOP * max(np.max(np.abs(t1)), np.max(np.abs(t2)))] = 0.0
        s = trim(s)
        if is_zero_poly(s):
            return RationalFunction([0.0])
        poles = np.concatenate([self._poles, b_rest])
        zeros, poles, changed = cancel_roots(roots_of(s), poles)
        out = object.__new__(RationalFunction)
        if changed:
            out._set(s[-1], zeros, poles)
        else:
            out._set(s[-1], zeros, poles, s.copy(), None)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = object.__new__(RationalFunction)
        num = None if self._num is None else -self._num
        out._set(-self.gain, self._zeros, self._poles, num, None if self._den is None else self._den.copy())
        return out

    def __sub__(self, other):
        return self + (-_as_rf(other))

    def __rsub__(self, other):
        return _as_rf(other) + (-self)

    def __mul__(self, other):
        other = _as_rf(other)
        if self.is_zero() or other.is_zero():
            return RationalFunction([0.0])
        if other.is_constant() or self.is_constant():
            f, k = (self, other.gain) if other.is_constant() else (other, self.gain)
            out = object.__new__(RationalFunction)
            out._set(
                f.gain * k, f._zeros, f._poles,
                None if f._num is None else f._num * k,
                None if f._den is None else f._den.copy(),
            )
            return out
        return RationalFunction.from_zpk(
            self.gain * other.gain,
            np.concatenate([self._zeros, other._zeros]),
            np.concatenate([self._poles, other._poles]),
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "RationalFunction":
        if self.is_zero():
            raise ZeroDivisionError("reciprocal of zero rational function")
        return RationalFunction.from_zpk(1.0 / self.gain, self._poles, self._zeros, normalize=False)

    def __truediv__(self, other):
        return self * _as_rf(other).reciprocal()

    def poles(self) -> np.ndarray:
        return self._poles

    def zeros(self) -> np.ndarray:
        return self._zeros

    def allclose(self, other, tol: float = 1e-9) -> bool:
        other = _as_rf(other)
        return entry_residual(self.num, self.den, -other.num, other.den) <= tol

    def __repr__(self):
        return f"RationalFunction(num={self.num.tolist()}, den={self.den.tolist()})"


def _as_rf(x) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    if np.isscalar(x):
        return RationalFunction.const(float(x))
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational function")


def poly_gcd(a, b, tol: float = CANCEL_TOL) -> np.ndarray:
    """Monic common factor of two polynomials from matched roots."""
    ra, rb = roots_of(a), roots_of(b)
    ia, ib = _match_roots(ra, rb, tol)
    return poly_from_roots(_symmetrize([0.5 * (ra[i] + rb[j]) for i, j in zip(ia, ib)]))



def entry_residual(n1, d1, n2, d2) -> float:
    """Scale-free size of ``n1/d1 + n2/d2`` without any root cancellation.

    The sum is put over the denominator ``d1*d2``; the result is the largest
    numerator coefficient magnitude divided by the largest denominator
    coefficient magnitude (exactly zero for identical functions).
    """
    num = P.polyadd(P.polymul(n1, d2), P.polymul(n2, d1))
    den = P.polymul(d1, d2)
    return float(np.max(np.abs(num)) / np.max(np.abs(den)))


# ---------------------------------------------------------------------------
# rational matrices


class RationalMatrix:
    """Immutable ``rows x cols`` grid of rational functions tagged with a domain."""

    __slots__ = ("_entries", "domain")

    def __init__(self, entries, domain: str = DISCRETE):
        if domain not in DOMAINS:
            raise DomainError(f"unknown domain {domain!r}; expected 'z' or 's'")
        rows = tuple(tuple(_as_rf(e) for e in row) for row in entries)
        if rows and len({len(r) for r in rows}) != 1:
            raise ShapeMismatch("ragged rows")
        object.__setattr__(self, "_entries", rows)
        object.__setattr__(self, "domain", domain)

    def __setattr__(self, key, value):
        raise AttributeError("RationalMatrix is immutable")

    # construction -----------------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int, domain: str = DISCRETE) -> "RationalMatrix":
        z = RationalFunction([0.0])
        return cls([[z] * cols for _ in range(rows)], domain)

    @classmethod
    def identity(cls, n: int, domain: str = DISCRETE) -> "RationalMatrix":
        one, z = RationalFunction.const(1.0), RationalFunction([0.0])
        return cls([[one if i == j else z for j in range(n)] for i in range(n)], domain)

    @classmethod
    def from_array(cls, a, domain: str = DISCRETE) -> "RationalMatrix":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return cls([[RationalFunction.const(v) for v in row] for row in a], domain)

    @classmethod
    def scalar(cls, num, den=(1.0,), domain: str = DISCRETE) -> "RationalMatrix":
        return cls([[RationalFunction(num, den)]], domain)

    @classmethod
    def block(cls, blocks: Sequence[Sequence["RationalMatrix"]]) -> "RationalMatrix":
        domain = blocks[0][0].domain
        rows = []
        for brow in blocks:
            if len({b.shape[0] for b in brow}) != 1:
                raise ShapeMismatch("block row heights differ")
            for b in brow:
                _check_domain(blocks[0][0], b)
            for i in range(brow[0].shape[0]):
                rows.append([e for b in brow for e in b._entries[i]])
        return cls(rows, domain)

    # access -----------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return len(self._entries), (len(self._entries[0]) if self._entries else 0)

    @property
    def entries(self) -> tuple[tuple[RationalFunction, ...], ...]:
        return self._entries

    def __getitem__(self, idx):
        i, j = idx
        if isinstance(i, slice) or isinstance(j, slice):
            rows = self._entries[i] if isinstance(i, slice) else [self._entries[i]]
            return RationalMatrix(
                [r[j] if isinstance(j, slice) else [r[j]] for r in rows], self.domain
            )
        return self._entries[i][j]

    def __iter__(self):
        raise TypeError("iterate over .entries instead")

    def T(self) -> "RationalMatrix":
        r, c = self.shape
        return RationalMatrix([[self[i, j] for i in range(r)] for j in range(c)], self.domain)

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self._entries for e in row)

    def __call__(self, x) -> np.ndarray:
        """Evaluate at a point (or 1-D array of points, giving ``(k, r, c)``)."""
        x = np.asarray(x)
        r, c = self.shape
        out = np.empty(x.shape + (r, c), dtype=np.result_type(x, complex))
        for i in range(r):
            for j in range(c):
                out[..., i, j] = self[i, j](x)
        return out

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        return rm_add(self, _as_rm(other, self))

    __radd__ = __add__

    def __neg__(self):
        return RationalMatrix([[-e for e in row] for row in self._entries], self.domain)

    def __sub__(self, other):
        return rm_add(self, -_as_rm(other, self))

    def __rsub__(self, other):
        return rm_add(_as_rm(other, self), -self)

    def __mul__(self, other):
        if np.isscalar(other) or isinstance(other, RationalFunction):
            return RationalMatrix([[e * other for e in row] for row in self._entries], self.domain)
        return rm_mul(self, other)

    def __rmul__(self, other):
        if np.isscalar(other) or isinstance(other, RationalFunction):
            return self * other
        return NotImplemented

    __matmul__ = __mul__

    def inv(self) -> "RationalMatrix":
        return rm_inverse(self)

    # analysis ---------------------------------------------------------------
    def poles(self) -> np.ndarray:
        return poles(self)

    def is_stable(self, eps: float = STAB_EPS) -> bool:
        return is_stable(self, eps)

    def properness(self) -> str:
        return properness_class(self)

    def allclose(self, other: "RationalMatrix", tol: float = 1e-9) -> bool:
        return self.shape == other.shape and max_residual(self, other) <= tol

    # serialization ----------------------------------------------------------
    def to_dict(self) -> dict:
        r, c = self.shape
        return {
            "domain": self.domain,
            "rows": r,
            "cols": c,
            "entries": [
                [{"num": e.num.tolist(), "den": e.den.tolist()} for e in row]
                for row in self._entries
            ],
        }

    @classmethod
    def from_dict(cls, d: dict, normalize: bool = True) -> "RationalMatrix":
        try:
            domain = d["domain"]
            rows, cols = int(d["rows"]), int(d["cols"])
            raw = d["entries"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed rational matrix: missing {exc}") from None
        if len(raw) != rows or any(len(r) != cols for r in raw):
            raise ShapeMismatch(f"entries do not match declared shape {rows}x{cols}")
        entries = []
        for row in raw:
            out = []
            for e in row:
                num, den = e["num"], e.get("den", [1.0])
                if is_zero_poly(trim(den)):
                    raise ZeroDivisionError("zero denominator in rational matrix entry")
                out.append(RationalFunction(num, den, normalize=normalize))
            entries.append(out)
        return cls(entries, domain)

    def __repr__(self):
        return f"RationalMatrix(shape={self.shape}, domain={self.domain!r})"


def _as_rm(x, like: RationalMatrix) -> RationalMatrix:
    if isinstance(x, RationalMatrix):
        return x
    if np.isscalar(x):
        r, c = like.shape
        if r != c:
            raise ShapeMismatch("scalar promotion needs a square matrix")
        return RationalMatrix.identity(r, like.domain) * float(x)
    return RationalMatrix.from_array(x, like.domain)


def _check_domain(a: RationalMatrix, b: RationalMatrix):
    if a.domain != b.domain:
        raise DomainError(f"domain mismatch: {a.domain!r} vs {b.domain!r}")


def rm_add(A: RationalMatrix, B: RationalMatrix) -> RationalMatrix:
    """Entrywise sum of two equally sized matrices in the same domain."""
    _check_domain(A, B)
    if A.shape != B.shape:
        raise ShapeMismatch(f"cannot add {A.shape} and {B.shape}")
    return RationalMatrix(
        [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A.entries, B.entries)],
        A.domain,
    )


def rm_mul(A: RationalMatrix, B: RationalMatrix) -> RationalMatrix:
    """Matrix product with per-entry normalization."""
    _check_domain(A, B)
    (m, k), (k2, n) = A.shape, B.shape
    if k != k2:
        raise ShapeMismatch(f"cannot multiply {A.shape} by {B.shape}")
    out = []
    for i in range(m):
        row = []
        for j in range(n):
            acc = RationalFunction([0.0])
            for t in range(k):
                a, b = A[i, t], B[t, j]
                if a.is_zero() or b.is_zero():
                    continue
                acc = acc + a * b
            row.append(acc)
        out.append(row)
    return RationalMatrix(out, A.domain)


def _support(A: RationalMatrix) -> np.ndarray:
    return np.array([[not e.is_zero() for e in row] for row in A.entries])


def _is_triangular(S: np.ndarray) -> bool:
    return not np.triu(S, 1).any() or not np.tril(S, -1).any()


def _has_perfect_matching(S: np.ndarray) -> bool:
    if S.shape[0] == 0:
        return True
    match = maximum_bipartite_matching(csr_matrix(S.astype(int)), perm_type="column")
    return bool(np.all(match >= 0))


def rm_inverse(A: RationalMatrix) -> RationalMatrix:
    """Inverse of a square rational matrix.

    Triangular matrices go through Gauss-Jordan elimination with diagonal
    pivots, which keeps structural zeros exact.  Dense 2 x 2 matrices use the
    better of the closed-form adjugate and Gauss-Jordan, judged by backward
    error at probe points.  Larger dense matrices are
    inverted through the adjugate of the polynomial matrix obtained by
    clearing row denominators (see :func:`_inverse_adjugate`), so degrees never
    exceed the fraction-free bound.

    Raises
    ------
    SingularMatrixError
        If the determinant vanishes identically.
    """
    n, c = A.shape
    if n != c:
        raise ShapeMismatch(f"cannot invert non-square {A.shape} matrix")
    if n == 1:
        if A[0, 0].is_zero():
            raise SingularMatrixError("matrix is singular")
        return RationalMatrix([[A[0, 0].reciprocal()]], A.domain)
    S = _support(A)
    if not _has_perfect_matching(S):
        raise SingularMatrixError("matrix is structurally singular")
    if _is_triangular(S):
        return _inverse_gauss_jordan(A)
    if n == 2:
        # neither route dominates; keep the one with the smaller backward error
        return min((_inverse_2x2(A), _inverse_gauss_jordan(A)), key=lambda B: _backward_error(A, B))
    return _inverse_adjugate(A, S)


_PROBES = np.array([0.37 + 1.1j, -0.8 + 0.6j, 1.7 - 0.4j, 2.9 + 2.3j, -0.2 - 1.6j])


def _backward_error(A: RationalMatrix, B: RationalMatrix) -> float:
    """Largest ``|A(x) B(x) - I|`` over fixed off-axis probe points."""
    n = A.shape[0]
    with np.errstate(all="ignore"):
        errs = [np.abs(A(x) @ B(x) - np.eye(n)).max() for x in _PROBES]
    return float(np.nanmax(errs)) if np.all(np.isfinite(errs)) else np.inf


def _inverse_2x2(A: RationalMatrix) -> RationalMatrix:
    """Closed-form adjugate over ``ad - bc``; one subtraction, so no error build-up."""
    (a, b), (c, d) = A.entries
    det = a * d - b * c
    if det.is_zero():
        raise SingularMatrixError("matrix is singular")
    r = det.reciprocal()
    return RationalMatrix([[d * r, -(b * r)], [-(c * r), a * r]], A.domain)


def _inverse_gauss_jordan(A: RationalMatrix) -> RationalMatrix:
    n = A.shape[0]
    one, zero = RationalFunction.const(1.0), RationalFunction([0.0])
    M = [list(A.entries[i]) + [one if i == j else zero for j in range(n)] for i in range(n)]

    def cost(e: RationalFunction):
        return e.num.size + e.den.size

    for col in range(n):
        cands = [r for r in range(col, n) if not M[r][col].is_zero()]
        if not cands:
            raise SingularMatrixError("matrix is singular")
        # the diagonal pivot keeps triangular structure exact
        piv = col if col in cands else min(cands, key=lambda r: cost(M[r][col]))
        M[col], M[piv] = M[piv], M[col]
        inv_p = M[col][col].reciprocal()
        M[col] = [e * inv_p if not e.is_zero() else e for e in M[col]]
        M[col][col] = one
        for r in range(n):
            if r == col or M[r][col].is_zero():
                continue
            f = M[r][col]
            M[r] = [
                e - f * p if not p.is_zero() else e for e, p in zip(M[r], M[col])
            ]
            M[r][col] = zero
    return RationalMatrix([row[n:] for row in M], A.domain)


def _row_poles(row) -> np.ndarray:
    """Least common multiple of a row's denominators, as roots."""
    acc = np.zeros(0, dtype=complex)
    for e in row:
        p = e.poles()
        if acc.size and p.size:
            _, ib = _match_roots(acc, p, CANCEL_TOL)
            p = np.delete(p, ib)
        acc = np.concatenate([acc, p])
    return acc


def _inverse_adjugate(A: RationalMatrix, S: np.ndarray) -> RationalMatrix:
    """``A^-1 = adj(Ap) D / det(Ap)`` with ``A = D^-1 Ap``, ``Ap`` polynomial.

    ``det(Ap)`` and ``adj(Ap)`` are recovered from samples on a circle by
    FFT; their degrees are bounded a priori by the row degrees of ``Ap``.
    """
    n = A.shape[0]
    d_roots = [_row_poles(row) for row in A.entries]
    Ap = [[None] * n for _ in range(n)]
    row_deg = np.zeros(n, dtype=int)
    scales = []
    for i, row in enumerate(A.entries):
        for j, e in enumerate(row):
            if e.is_zero():
                Ap[i][j] = np.zeros(1)
                continue
            _, ib = _match_roots(e.poles(), d_roots[i], CANCEL_TOL)
            extra = np.delete(d_roots[i], ib)
            zr = np.concatenate([e.zeros(), extra])
            Ap[i][j] = poly_from_roots(_symmetrize(list(zr)), e.gain)
            row_deg[i] = max(row_deg[i], zr.size)
            scales += [abs(r) for r in zr if abs(r) > 1e-12]
    rho = float(np.clip(np.exp(np.mean(np.log(scales))), 1e-3, 1e3)) if scales else 1.0
    total = int(row_deg.sum())
    M = 1 << max(3, int(np.ceil(np.log2(total + 2))))
    x = rho * np.exp(2j * np.pi * (np.arange(M) + 0.5) / M)
    vals = np.empty((M, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            vals[:, i, j] = P.polyval(x, Ap[i][j])
    det = np.linalg.det(vals)
    if np.max(np.abs(det)) <= _CHOP * np.prod(np.max(np.abs(vals), axis=(0, 2))):
        raise SingularMatrixError("matrix is singular")
    adj = det[:, None, None] * np.linalg.inv(vals)

    shift = np.exp(-1j * np.pi * np.arange(M) / M)

    def coeffs(samples, deg):
        a = np.real(np.fft.fft(samples) / M * shift)[: deg + 1]
        a = trim(a, _CHOP * np.max(np.abs(a)))
        return a / rho ** np.arange(a.size)

    det_c = coeffs(det, total)
    det_roots = roots_of(det_c)
    adj_scale = np.max(np.abs(adj))
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            # structural zero of the (j, i) cofactor
            minor = np.delete(np.delete(S, j, axis=0), i, axis=1)
            if not _has_perfect_matching(minor):
                row.append(RationalFunction([0.0]))
                continue
            if np.max(np.abs(adj[:, i, j])) <= _CHOP * adj_scale:
                row.append(RationalFunction([0.0]))
                continue
            c = coeffs(adj[:, i, j], total - row_deg[j])
            zr = np.concatenate([roots_of(c), d_roots[j]])
            row.append(RationalFunction.from_zpk(c[-1] / det_c[-1], zr, det_roots))
        out.append(row)
    return RationalMatrix(out, A.domain)



def poles(A: RationalMatrix) -> np.ndarray:
    """Union (with multiplicity) of all entries' denominator roots."""
    r = [e.poles() for row in A.entries for e in row if not e.is_zero()]
    return np.concatenate(r) if r else np.zeros(0, dtype=complex)


def unstable_poles(p: np.ndarray, domain: str, eps: float = STAB_EPS) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if domain == DISCRETE:
        return p[np.abs(p) >= 1 - eps]
    return p[p.real >= -eps]


def is_stable(A: RationalMatrix, eps: float = STAB_EPS) -> bool:
    """No poles in the closed unstable region (|z| >= 1 or Re s >= 0), with margin ``eps``.

    An improper entry has a pole at infinity and is never stable.
    """
    if properness_class(A) == "improper":
        return False
    return unstable_poles(poles(A), A.domain, eps).size == 0


def properness_class(A: RationalMatrix) -> str:
    rel = [e.relative_degree for row in A.entries for e in row if not e.is_zero()]
    if not rel or min(rel) > 0:
        return "strictly_proper"
    if min(rel) == 0:
        return "proper"
    return "improper"


def max_residual(A: RationalMatrix, B: RationalMatrix) -> float:
    """Largest :func:`entry_residual` of ``A - B`` over all entries."""
    if A.shape != B.shape:
        raise ShapeMismatch(f"{A.shape} vs {B.shape}")
    worst = 0.0
    for ra, rb in zip(A.entries, B.entries):
        for a, b in zip(ra, rb):
            worst = max(worst, entry_residual(a.num, a.den, -b.num, b.den))
    return worst


# ---------------------------------------------------------------------------
# closed-loop quadruple


@dataclass(frozen=True)
class ClosedLoopQuad:
    """The four closed-loop maps from ``(w_y, w_u)`` to ``(y, u)``.

    ``X`` is p x p, ``Y`` is m x p, ``W`` is p x m and ``Z`` is m x m for a
    plant with p outputs and m inputs.
    """

    X: RationalMatrix
    Y: RationalMatrix
    W: RationalMatrix
    Z: RationalMatrix

    def __post_init__(self):
        p, m = self.X.shape[0], self.Z.shape[0]
        want = {"X": (p, p), "Y": (m, p), "W": (p, m), "Z": (m, m)}
        for name, shp in want.items():
            blk = getattr(self, name)
            if blk.shape != shp:
                raise ShapeMismatch(f"block {name} has shape {blk.shape}, expected {shp}")
            if blk.domain != self.X.domain:
                raise DomainError("closed-loop blocks must share one domain")

    @property
    def domain(self) -> str:
        return self.X.domain

    @property
    def blocks(self) -> dict[str, RationalMatrix]:
        return {"X": self.X, "Y": self.Y, "W": self.W, "Z": self.Z}

    def to_dict(self) -> dict:
        return {k: v.to_dict() for k, v in self.blocks.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "ClosedLoopQuad":
        return cls(*(RationalMatrix.from_dict(d[k]) for k in "XYWZ"))
