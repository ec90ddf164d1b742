"""Conversions between a Youla parameter and the closed-loop quadruple.

Factorizations are consumed, never computed: use :func:`trivial_dcf` for a
stable plant or supply the eight blocks explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .tf import (
    ClosedLoopQuad,
    RationalMatrix,
    ShapeMismatch,
    is_stable,
    max_residual,
    properness_class,
)
from .verify import DEFAULT_TOL, check_iop_membership

DCF_TOL = 1e-7


class UnstableParameterError(ValueError):
    pass


class MembershipError(ValueError):
    pass


@dataclass(frozen=True)
class DoublyCoprimeFactorization:
    """Stable proper blocks with ``G = Nr Mr^-1 = Ml^-1 Nl`` and the Bezout identity

    ``[[Ul, -Vl], [-Nl, Ml]] @ [[Mr, Vr], [Nr, Ur]] = I``.
    """

    Ur: RationalMatrix
    Vr: RationalMatrix
    Ul: RationalMatrix
    Vl: RationalMatrix
    Mr: RationalMatrix
    Ml: RationalMatrix
    Nr: RationalMatrix
    Nl: RationalMatrix

    def __post_init__(self):
        p, m = self.Nr.shape
        want = {
            "Mr": (m, m), "Nr": (p, m), "Vr": (m, p), "Ur": (p, p),
            "Ml": (p, p), "Nl": (p, m), "Ul": (m, m), "Vl": (m, p),
        }
        for name, shp in want.items():
            if getattr(self, name).shape != shp:
                raise ShapeMismatch(f"{name} has shape {getattr(self, name).shape}, expected {shp}")

    @property
    def blocks(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_dict(self) -> dict:
        return {k: v.to_dict() for k, v in self.blocks.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "DoublyCoprimeFactorization":
        return cls(**{f.name: RationalMatrix.from_dict(d[f.name]) for f in fields(cls)})


def trivial_dcf(G: RationalMatrix) -> DoublyCoprimeFactorization:
    """``Mr = Ml = I``, ``Nr = Nl = G``, ``Ur = Ul = I``, ``Vr = Vl = 0`` (valid for stable G)."""
    p, m = G.shape
    d = G.domain
    Im, Ip = RationalMatrix.identity(m, d), RationalMatrix.identity(p, d)
    return DoublyCoprimeFactorization(
        Ur=Ip, Vr=RationalMatrix.zeros(m, p, d), Ul=Im, Vl=RationalMatrix.zeros(m, p, d),
        Mr=Im, Ml=Ip, Nr=G, Nl=G,
    )


@dataclass
class DCFReport:
    valid: bool
    residuals: dict
    stable: dict
    proper: dict

    def __bool__(self):
        return self.valid

    def to_dict(self):
        return {"valid": self.valid, "residuals": self.residuals, "stable": self.stable, "proper": self.proper}


def verify_dcf(G: RationalMatrix, dcf: DoublyCoprimeFactorization, tol: float = DCF_TOL) -> DCFReport:
    """Check stability, properness, both factorizations and the Bezout identity."""
    b = dcf.blocks
    stable = {k: bool(is_stable(v)) for k, v in b.items()}
    proper = {k: properness_class(v) != "improper" for k, v in b.items()}
    p, m = G.shape
    d = G.domain
    # G Mr = Nr and Ml G = Nl avoid inverting the factors
    res = {
        "G*Mr-Nr": max_residual(G * dcf.Mr, dcf.Nr),
        "Ml*G-Nl": max_residual(dcf.Ml * G, dcf.Nl),
    }
    left = RationalMatrix.block([[dcf.Ul, -dcf.Vl], [-dcf.Nl, dcf.Ml]])
    right = RationalMatrix.block([[dcf.Mr, dcf.Vr], [dcf.Nr, dcf.Ur]])
    res["bezout"] = max_residual(left * right, RationalMatrix.identity(m + p, d))
    ok = all(stable.values()) and all(proper.values()) and all(v <= tol for v in res.values())
    return DCFReport(ok, res, stable, proper)


def youla_to_iop(Q: RationalMatrix, dcf: DoublyCoprimeFactorization) -> ClosedLoopQuad:
    """Closed-loop quadruple of the controller ``(Vr - Mr Q)(Ur - Nr Q)^-1``.

    ``X = (Ur - Nr Q) Ml``, ``Y = (Vr - Mr Q) Ml``, ``W = (Ur - Nr Q) Nl``
    and ``Z = I + (Vr - Mr Q) Nl``.
    """
    if not is_stable(Q):
        raise UnstableParameterError("Youla parameter must be stable and proper")
    m = dcf.Mr.shape[0]
    A = dcf.Ur - dcf.Nr * Q
    B = dcf.Vr - dcf.Mr * Q
    return ClosedLoopQuad(
        A * dcf.Ml, B * dcf.Ml, A * dcf.Nl, RationalMatrix.identity(m, Q.domain) + B * dcf.Nl
    )


def iop_to_youla(
    quad: ClosedLoopQuad,
    dcf: DoublyCoprimeFactorization,
    G: RationalMatrix | None = None,
    tol: float = DEFAULT_TOL,
) -> RationalMatrix:
    """``Q = Vl X Ur - Ul Y Ur - Vl W Vr + Ul Z Vr - Vl Ur``.

    When ``G`` is given, the quadruple is first checked for membership.
    """
    if G is not None:
        rep = check_iop_membership(G, quad, tol)
        if not rep:
            raise MembershipError(f"quadruple is not in the stabilizing subspace: {rep.to_dict()}")
    X, Y, W, Z = quad.X, quad.Y, quad.W, quad.Z
    Ur, Vr, Ul, Vl = dcf.Ur, dcf.Vr, dcf.Ul, dcf.Vl
    return Vl * X * Ur - Ul * Y * Ur - Vl * W * Vr + Ul * Z * Vr - Vl * Ur


def youla_controller(Q: RationalMatrix, dcf: DoublyCoprimeFactorization) -> RationalMatrix:
    return (dcf.Vr - dcf.Mr * Q) * (dcf.Ur - dcf.Nr * Q).inv()
