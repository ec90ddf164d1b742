"""Closed-loop maps, internal stability and affine-subspace membership."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tf import (
    ClosedLoopQuad,
    RationalMatrix,
    ShapeMismatch,
    SingularMatrixError,
    is_stable,
    max_residual,
    poles,
    properness_class,
    rm_inverse,
    unstable_poles,
)

DEFAULT_TOL = 1e-6


class IllPosedError(ArithmeticError):
    """``I - G K`` has no rational inverse."""


class ImproperPlantError(ValueError):
    pass


def _check_pair(G: RationalMatrix, K: RationalMatrix):
    p, m = G.shape
    if K.shape != (m, p):
        raise ShapeMismatch(f"controller shape {K.shape} does not match plant {G.shape}")
    if G.domain != K.domain:
        raise ValueError(f"plant domain {G.domain!r} differs from controller domain {K.domain!r}")
    if properness_class(G) != "strictly_proper":
        raise ImproperPlantError("plant must be strictly proper for a well-posed loop")
    if properness_class(K) == "improper":
        raise ImproperPlantError("controller must be proper")


def closed_loop_maps(G: RationalMatrix, K: RationalMatrix) -> ClosedLoopQuad:
    """Maps from ``(w_y, w_u)`` to ``(y, u)`` for ``y = G u + w_y``, ``u = K y + w_u``.

    ``X = (I - GK)^-1``, ``Y = K X``, ``W = X G`` and ``Z = I + K X G``, the
    last being the push-through form of ``(I - KG)^-1``.
    """
    _check_pair(G, K)
    p, m = G.shape
    try:
        X = rm_inverse(RationalMatrix.identity(p, G.domain) - G * K)
    except SingularMatrixError:
        raise IllPosedError("I - G K is singular") from None
    Y = K * X
    W = X * G
    Z = RationalMatrix.identity(m, G.domain) + Y * G
    return ClosedLoopQuad(X, Y, W, Z)


@dataclass
class StabilityReport:
    stabilizing: bool
    blocks: dict = field(default_factory=dict)

    def __bool__(self):
        return self.stabilizing

    def to_dict(self) -> dict:
        return {"stabilizing": self.stabilizing, "blocks": self.blocks}


def _pole_list(pl) -> list:
    return [[float(np.real(z)), float(np.imag(z))] for z in pl]


def stability_report(quad: ClosedLoopQuad) -> StabilityReport:
    blocks = {}
    for name, blk in quad.blocks.items():
        pl = poles(blk)
        bad = unstable_poles(pl, blk.domain)
        blocks[name] = {
            "stable": bool(is_stable(blk)),
            "poles": _pole_list(pl),
            "unstable_poles": _pole_list(bad),
        }
    return StabilityReport(all(b["stable"] for b in blocks.values()), blocks)


def is_internally_stabilizing(G: RationalMatrix, K: RationalMatrix) -> StabilityReport:
    """Whether all four closed-loop maps are stable; the report lists poles per block."""
    return stability_report(closed_loop_maps(G, K))


@dataclass
class MembershipReport:
    member: bool
    residuals: dict
    stable: dict
    tol: float

    def __bool__(self):
        return self.member

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def to_dict(self) -> dict:
        return {
            "member": self.member,
            "tol": self.tol,
            "residuals": self.residuals,
            "stable": self.stable,
        }


def iop_residuals(G: RationalMatrix, quad: ClosedLoopQuad) -> dict:
    p, m = G.shape
    if quad.X.shape != (p, p) or quad.Z.shape != (m, m):
        raise ShapeMismatch(f"quad blocks do not conform to a {p}x{m} plant")
    Ip = RationalMatrix.identity(p, G.domain)
    Im = RationalMatrix.identity(m, G.domain)
    X, Y, W, Z = quad.X, quad.Y, quad.W, quad.Z
    return {
        "X-GY-I": max_residual(X, Ip + G * Y),
        "W-GZ": max_residual(W, G * Z),
        "-XG+W": max_residual(W, X * G),
        "-YG+Z-I": max_residual(Z, Im + Y * G),
    }


def check_iop_membership(
    G: RationalMatrix, quad: ClosedLoopQuad, tol: float = DEFAULT_TOL
) -> MembershipReport:
    """Whether ``quad`` satisfies the four affine equations and is stable blockwise."""
    res = iop_residuals(G, quad)
    stable = {name: bool(is_stable(blk)) for name, blk in quad.blocks.items()}
    ok = all(v <= tol for v in res.values()) and all(stable.values())
    return MembershipReport(ok, res, stable, tol)


def recover_controller(quad: ClosedLoopQuad) -> RationalMatrix:
    """``K = Y X^-1``."""
    try:
        Xinv = rm_inverse(quad.X)
    except SingularMatrixError:
        raise SingularMatrixError("X is singular; no controller can be recovered") from None
    return quad.Y * Xinv
