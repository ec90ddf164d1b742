import numpy as np
import pytest

from iopctrl.tf import ClosedLoopQuad, RationalFunction as RF, RationalMatrix as RM
from iopctrl.verify import check_iop_membership, closed_loop_maps, recover_controller
from iopctrl.youla import (
    DoublyCoprimeFactorization,
    MembershipError,
    UnstableParameterError,
    iop_to_youla,
    trivial_dcf,
    verify_dcf,
    youla_controller,
    youla_to_iop,
)

from conftest import random_fir

g = RM.scalar([1.0, 0.5], [0.2, -0.9, 1.0])
one = RM.identity(1)


def _s(num, den=(1.0,)):
    return RF(num, den)


def unstable_fixture():
    """Factorization of ``1/(z-2)`` with ``K = -2`` as the central controller."""
    c = lambda f: RM([[f]])
    return DoublyCoprimeFactorization(
        Ur=c(_s([1.0])), Vr=c(_s([-2.0])), Ul=c(_s([1.0])), Vl=c(_s([-2.0])),
        Mr=c(_s([-2, 1], [0, 1])), Ml=c(_s([-2, 1], [0, 1])),
        Nr=c(_s([1], [0, 1])), Nl=c(_s([1], [0, 1])),
    )


def test_verify_dcf_examples():
    assert verify_dcf(g, trivial_dcf(g))
    bad = DoublyCoprimeFactorization(**{**trivial_dcf(g).blocks, "Vr": one})
    rep = verify_dcf(g, bad)
    assert not rep and rep.residuals["bezout"] > 1e-3
    G = RM.scalar([1.0], [-2.0, 1.0])
    rep = verify_dcf(G, trivial_dcf(G))
    assert not rep and not rep.stable["Nr"]
    assert verify_dcf(G, unstable_fixture())


def test_youla_to_iop_examples():
    q = youla_to_iop(RM.zeros(1, 1), trivial_dcf(g))
    assert q.X.allclose(one) and q.Y.is_zero() and q.W.allclose(g) and q.Z.allclose(one)
    Q = RM.scalar([0.3, 1.0], [0.0, 1.0])
    q = youla_to_iop(Q, trivial_dcf(g))
    assert q.X.allclose(one - g * Q)
    assert q.Y.allclose(-Q)
    assert q.W.allclose((one - g * Q) * g)
    assert q.Z.allclose(one - Q * g)
    with pytest.raises(UnstableParameterError):
        youla_to_iop(RM.scalar([1.0], [-1.5, 1.0]), trivial_dcf(g))


def test_iop_to_youla_examples():
    quad = ClosedLoopQuad(one, RM.zeros(1, 1), g, one)
    assert iop_to_youla(quad, trivial_dcf(g), g).is_zero()
    with pytest.raises(MembershipError):
        iop_to_youla(ClosedLoopQuad(one + one, RM.zeros(1, 1), g, one), trivial_dcf(g), g)


def test_closed_loop_of_stabilizing_controller():
    k = RM.scalar([0.2], [0.1, 1.0])
    quad = closed_loop_maps(g, k)
    dcf = trivial_dcf(g)
    Q = iop_to_youla(quad, dcf, g)
    # trivial factorization gives Q = -Y
    assert Q.allclose(-quad.Y)
    assert youla_controller(Q, dcf).allclose(recover_controller(quad))


def test_nontrivial_fixture_round_trip(rng):
    G = RM.scalar([1.0], [-2.0, 1.0])
    dcf = unstable_fixture()
    assert youla_controller(RM.zeros(1, 1), dcf).allclose(RM.scalar([-2.0]))
    for _ in range(10):
        Q = random_fir(rng, 1, 1, L=2)
        quad = youla_to_iop(Q, dcf)
        assert check_iop_membership(G, quad)
        assert iop_to_youla(quad, dcf, G).allclose(Q, 1e-8)
        assert recover_controller(quad).allclose(youla_controller(Q, dcf), 1e-8)


def test_json_round_trip():
    dcf = unstable_fixture()
    back = DoublyCoprimeFactorization.from_dict(dcf.to_dict())
    for k, v in dcf.blocks.items():
        assert back.blocks[k].allclose(v)
