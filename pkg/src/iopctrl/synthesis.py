"""Controller synthesis over the truncated closed-loop parametrization.

Both problems reduce to

    minimize ||M x - r||^2   subject to   A x = b,

where ``A x = b`` is the assembled equality system.  Feasibility uses
``M = I, r = 0`` (the minimum-norm feasible point); H2 synthesis uses the
quadratic cost of the sensitivity block matrix or of user-supplied weights.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .basis import DEFAULT_A, TruncatedParam, expand, gram, h2_sq_continuous, h2_sq_discrete
from .constraints import EqualitySystem, SparsityPattern, assemble, fixed_term_rows
from .tf import CONTINUOUS, DISCRETE, ClosedLoopQuad, RationalMatrix, ShapeMismatch
from .verify import (
    DEFAULT_TOL,
    MembershipReport,
    StabilityReport,
    check_iop_membership,
    is_internally_stabilizing,
    recover_controller,
)

log = logging.getLogger(__name__)

INFEASIBLE_TOL = 1e-6
# solution coefficients this small relative to the largest are round-off
SNAP_TOL = 1e-12


class InfeasibleError(RuntimeError):
    """No truncated parameter of the requested order satisfies the constraints."""

    def __init__(self, residual: float, N: int):
        self.residual = residual
        self.N = N
        super().__init__(
            f"equality system infeasible at order N={N} "
            f"(least-squares residual {residual:.3e}); try a larger N"
        )


class WeightError(ValueError):
    pass


@dataclass
class SynthesisProblem:
    G: RationalMatrix
    N: int
    a: float | None = None
    sparsity: SparsityPattern | None = None
    objective: str = "none"
    weights: tuple | None = None

    def __post_init__(self):
        if self.objective not in ("none", "h2"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.G.domain == CONTINUOUS and self.a is None:
            self.a = DEFAULT_A
        if self.G.domain == DISCRETE:
            self.a = None
        if self.weights is not None:
            if self.objective != "h2":
                raise ValueError("weights only apply to the h2 objective")
            if len(self.weights) != 3:
                raise ValueError("weights must be a (P_zw, P_zu, P_yw) triple")
            Pzw, Pzu, Pyw = self.weights
            p, m = self.G.shape
            if Pzu.shape[1] != m or Pyw.shape[0] != p:
                raise ShapeMismatch("weights do not conform to the plant")
            if Pzw.shape != (Pzu.shape[0], Pyw.shape[1]):
                raise ShapeMismatch("P_zw must be q x r for P_zu q x m and P_yw p x r")


@dataclass
class SynthesisResult:
    tp: TruncatedParam
    quad: ClosedLoopQuad
    K: RationalMatrix | None
    h2_norm: float | None
    membership: MembershipReport | None
    stability: StabilityReport | None
    sparsity_violation: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def sparsity_ok(self) -> bool:
        return all(v < 1e-7 for v in self.sparsity_violation.values())

    @property
    def verified(self) -> bool:
        return bool(self.membership) and bool(self.stability) and self.sparsity_ok


# ---------------------------------------------------------------------------
# linear algebra


def min_norm_solution(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    x, *_ = sla.lstsq(A, b, lapack_driver="gelsd")
    return x


def constrained_lstsq(A, b, M, r):
    """Minimize ``||M x - r||`` over ``{x : A x = b}`` by the null-space method.

    Returns ``(x, info)`` with the primal residual and the KKT stationarity
    residual ``||M^T (M x - r) + A^T lam||`` for least-squares multipliers.
    """
    x_p = min_norm_solution(A, b)
    F = sla.null_space(A)
    if F.shape[1]:
        t, *_ = sla.lstsq(M @ F, r - M @ x_p, lapack_driver="gelsd")
        x = x_p + F @ t
    else:
        x = x_p
    grad = M.T @ (M @ x - r)
    lam, *_ = sla.lstsq(A.T, -grad, lapack_driver="gelsd")
    scale = max(1.0, float(np.max(np.abs(M.T @ r))) if r.size else 1.0)
    info = {
        "equality_residual": float(np.max(np.abs(A @ x - b))) if b.size else 0.0,
        "kkt_residual": float(np.max(np.abs(grad + A.T @ lam))) / scale,
        "null_space_dim": int(F.shape[1]),
    }
    return x, info


def _snap(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    big = np.max(np.abs(x)) if x.size else 0.0
    x[np.abs(x) <= SNAP_TOL * big] = 0.0
    return x


# ---------------------------------------------------------------------------
# objectives


def _sensitivity_objective(system: EqualitySystem):
    """``(M, r)`` for the H2 cost of ``[[W, X - I], [Z - I, Y]]``."""
    p, m = system.dims
    N, nv = system.N, system.n_vars
    vidx = system.var_index
    if system.domain == DISCRETE:
        r = np.zeros(nv)
        for i in range(p):
            r[vidx[("X", 0, i, i)]] = 1.0
        for i in range(m):
            r[vidx[("Z", 0, i, i)]] = 1.0
        return np.eye(nv), r
    # continuous: sum_ij trace(J_i^T J_j) Gram_ij over i, j >= 1
    Lt = np.linalg.cholesky(gram(N, system.a)).T
    groups: dict = {}
    for (blk, n, i, j), col in vidx.items():
        if n >= 1:
            groups.setdefault((blk, i, j), {})[n] = col
    M = np.zeros((len(groups) * N, nv))
    for g, cols in enumerate(groups.values()):
        for k in range(N):
            for n, col in cols.items():
                M[g * N + k, col] = Lt[k, n - 1]
    return M, np.zeros(M.shape[0])


def fir_coefficients(F: RationalMatrix) -> np.ndarray:
    """Impulse-response coefficients ``(L, r, c)`` of a discrete FIR matrix.

    Raises
    ------
    WeightError
        If some entry has a pole away from the origin or is improper.
    """
    if F.domain != DISCRETE:
        raise WeightError("FIR weights exist only in discrete time")
    r, c = F.shape
    taps = {}
    L = 1
    for i in range(r):
        for j in range(c):
            e = F[i, j]
            if e.is_zero():
                continue
            if np.any(np.abs(e.poles()) > 1e-12):
                raise WeightError(f"weight entry ({i},{j}) is not FIR (pole away from z=0)")
            d = e.poles().size
            num = np.zeros(d + 1)
            if e.num.size > d + 1:
                raise WeightError(f"weight entry ({i},{j}) is improper")
            num[: e.num.size] = e.num
            h = num[::-1]
            taps[(i, j)] = h
            L = max(L, h.size)
    out = np.zeros((L, r, c))
    for (i, j), h in taps.items():
        out[: h.size, i, j] = h
    return out


def _weighted_objective(system: EqualitySystem, weights):
    """``(M, r)`` for ``||P_zw + P_zu Y P_yw||_H2^2`` with FIR weights."""
    if system.domain != DISCRETE:
        raise WeightError("weighted objectives are supported in discrete time only")
    Pzw, Pzu, Pyw = (fir_coefficients(w) for w in weights)
    q, rr = Pzw.shape[1:]
    N = system.N
    m, p = system.dims[1], system.dims[0]
    L = max(Pzw.shape[0], Pzu.shape[0] + N + Pyw.shape[0] - 1)
    nv = system.n_vars
    M = np.zeros((L * q * rr, nv))
    r = np.zeros(L * q * rr)
    r[: Pzw.size] = -Pzw.ravel()
    ycols = np.array([[system.var_index[("Y", n, i, j)] for i in range(m) for j in range(p)] for n in range(N + 1)])
    for ka, A_ in enumerate(Pzu):
        for n in range(N + 1):
            for kc, C_ in enumerate(Pyw):
                k = ka + n + kc
                block = np.kron(A_, C_.T)  # row-major vec(A Y C) = (A kron C^T) vec(Y)
                rows = slice(k * q * rr, (k + 1) * q * rr)
                M[rows, ycols[n]] += block
    return M, r


# ---------------------------------------------------------------------------
# drivers


def _finish(prob, system, x, info, t0, verify, tol) -> SynthesisResult:
    p, m = system.dims
    tp = TruncatedParam.from_vector(_snap(x), prob.N, p, m, prob.G.domain, prob.a)
    quad = expand(tp)
    diag = {
        "N": prob.N,
        "a": prob.a,
        "n_vars": system.n_vars,
        "n_rows": int(system.A.shape[0]),
        "rank": system.rank,
        "solver": "svd-nullspace",
        **info,
        "solve_time": time.perf_counter() - t0,
    }
    K = membership = stability = None
    viol = {}
    if verify:
        t1 = time.perf_counter()
        membership = check_iop_membership(prob.G, quad, tol)
        K = recover_controller(quad)
        stability = is_internally_stabilizing(prob.G, K)
        if prob.sparsity is not None:
            viol = {"Y": prob.sparsity.violation(quad.Y), "K": prob.sparsity.violation(K)}
        diag["verify_time"] = time.perf_counter() - t1
    return SynthesisResult(tp, quad, K, None, membership, stability, viol, diag)


def solve_feasibility(prob: SynthesisProblem, verify: bool = True, tol: float = DEFAULT_TOL) -> SynthesisResult:
    """Minimum-norm coefficients satisfying the truncated constraints.

    Raises
    ------
    InfeasibleError
        If the least-squares residual of the equality system exceeds 1e-6.
    """
    t0 = time.perf_counter()
    system = assemble(prob.G, prob.N, prob.a, prob.sparsity)
    x = min_norm_solution(system.A, system.b)
    res = system.residual(x)
    log.info("feasibility: %d rows, %d vars, residual %.2e", *system.A.shape, res)
    if res > INFEASIBLE_TOL:
        raise InfeasibleError(res, prob.N)
    info = {"equality_residual": res, "solver_iterations": 1}
    return _finish(prob, system, x, info, t0, verify, tol)


def solve_h2(prob: SynthesisProblem, verify: bool = True, tol: float = DEFAULT_TOL) -> SynthesisResult:
    """Global minimizer of the H2 cost over the truncated affine set."""
    if prob.objective != "h2":
        raise ValueError("solve_h2 needs objective='h2'")
    t0 = time.perf_counter()
    system = assemble(prob.G, prob.N, prob.a, prob.sparsity)
    if prob.weights is not None:
        M, r = _weighted_objective(system, prob.weights)
    else:
        if system.domain == CONTINUOUS:
            # a finite norm needs zero feedthrough in Y and W
            system = system.with_rows(*fixed_term_rows(system, ("Y", "W")))
        M, r = _sensitivity_objective(system)
    x_ls = min_norm_solution(system.A, system.b)
    res = system.residual(x_ls)
    if res > INFEASIBLE_TOL:
        raise InfeasibleError(res, prob.N)
    x, info = constrained_lstsq(system.A, system.b, M, r)
    info["solver_iterations"] = 1
    log.info("h2: kkt residual %.2e, equality residual %.2e", info["kkt_residual"], info["equality_residual"])
    out = _finish(prob, system, x, info, t0, verify, tol)
    if prob.weights is not None:
        cost = float(np.sum((M @ out.tp.vector() - r) ** 2))
    elif prob.G.domain == DISCRETE:
        cost = h2_sq_discrete(out.tp)
    else:
        cost = h2_sq_continuous(out.tp, atol=1e-9)
    out.h2_norm = float(np.sqrt(max(cost, 0.0)))
    out.diagnostics["cost"] = cost
    return out


def solve(prob: SynthesisProblem, **kw) -> SynthesisResult:
    return solve_h2(prob, **kw) if prob.objective == "h2" else solve_feasibility(prob, **kw)


def cost_sweep(G, orders, sparsity=None, a=None) -> list[dict]:
    """Optimal sensitivity H2 norm for each truncation order (no verification)."""
    out = []
    for N in orders:
        r = solve_h2(SynthesisProblem(G, N, a, sparsity, "h2"), verify=False)
        out.append({"N": N, "h2_norm": r.h2_norm, "cost": r.diagnostics["cost"]})
    return out
