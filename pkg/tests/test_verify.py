import numpy as np
import pytest

from iopctrl import fixtures
from iopctrl.tf import ClosedLoopQuad, RationalFunction as RF, RationalMatrix as RM
from iopctrl.verify import (
    ImproperPlantError,
    check_iop_membership,
    closed_loop_maps,
    is_internally_stabilizing,
    recover_controller,
)

import oracles

G1 = RM.scalar([1.0], [-2.0, 1.0], "z")
K1 = RM.scalar([-2.0], domain="z")


def test_scalar_closed_loop_oracle():
    q = closed_loop_maps(G1, K1)
    X, Y, W, Z = oracles.scalar_closed_loop([1.0], [-2.0, 1.0], [-2.0], [1.0])
    pts = np.array([0.3 + 0.4j, -1.7, 2.5j])
    for blk, (n, d) in zip((q.X, q.Y, q.W, q.Z), (X, Y, W, Z)):
        np.testing.assert_allclose(blk(pts)[:, 0, 0], oracles.evaluate(n, d, pts), rtol=1e-12)
    assert q.X.allclose(RM.scalar([-2, 1], [0, 1]))
    assert q.Y.allclose(RM.scalar([4, -2], [0, 1]))
    assert q.W.allclose(RM.scalar([1], [0, 1]))
    assert q.Z.allclose(RM.scalar([-2, 1], [0, 1]))


def test_open_loop_and_zero_plant():
    q = closed_loop_maps(G1, RM.zeros(1, 1))
    assert q.X.allclose(RM.identity(1)) and q.Y.is_zero() and q.W.allclose(G1)
    K = RM.scalar([0.5, 1], [0.2, 1])
    q = closed_loop_maps(RM.zeros(1, 1), K)
    assert q.X.allclose(RM.identity(1)) and q.Y.allclose(K) and q.W.is_zero()


def test_stabilizing_examples():
    rep = is_internally_stabilizing(G1, K1)
    assert rep.stabilizing
    assert all(np.allclose(b["poles"], 0) for b in rep.to_dict()["blocks"].values())
    rep = is_internally_stabilizing(G1, RM.zeros(1, 1))
    assert not rep
    assert np.allclose(rep.blocks["W"]["unstable_poles"], [[2.0, 0.0]])  # [re, im] pairs


def test_reference_controller_stabilizes_continuous_plant():
    assert is_internally_stabilizing(fixtures.continuous_plant(), fixtures.reference_controller())


def test_membership_examples():
    q = closed_loop_maps(G1, K1)
    assert check_iop_membership(G1, q)
    bad = ClosedLoopQuad(RM.identity(1), RM.zeros(1, 1), G1, RM.identity(1))
    rep = check_iop_membership(G1, bad)
    assert max(rep.residuals.values()) < 1e-12 and not rep.member
    pert = ClosedLoopQuad(q.X + RM.scalar([0.1]), q.Y, q.W, q.Z)
    rep = check_iop_membership(G1, pert)
    assert not rep and rep.residuals["X-GY-I"] > 1e-6


def test_recover_controller():
    Y0 = RM.scalar([0.3, 1], [0.5, 1])
    I = RM.identity(1)
    assert recover_controller(ClosedLoopQuad(I, Y0, RM.zeros(1, 1), I)).allclose(Y0)
    assert recover_controller(closed_loop_maps(G1, K1)).allclose(K1)


def test_well_posedness_checks():
    with pytest.raises(ImproperPlantError):
        closed_loop_maps(RM.scalar([1.0]), K1)
    # an improper controller could make I - G K singular
    with pytest.raises(ImproperPlantError):
        closed_loop_maps(G1, RM.scalar([0, 0, 1], [1]))


def test_closed_loop_reconstruction_from_member():
    q = closed_loop_maps(G1, K1)
    q2 = closed_loop_maps(G1, recover_controller(q))
    for k in "XYWZ":
        assert q.blocks[k].allclose(q2.blocks[k])
