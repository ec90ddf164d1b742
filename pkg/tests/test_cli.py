import json

import numpy as np
import pytest

from iopctrl import cli, fixtures
from iopctrl.synthesis import SynthesisProblem, solve
from iopctrl.tf import RationalMatrix as RM
from iopctrl.youla import trivial_dcf


def _dump(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


PLANT = {"domain": "z", "rows": 1, "cols": 1, "entries": [[{"num": [1], "den": [-2, 1]}]]}


def test_parse_plant(tmp_path):
    G = cli.parse_plant(_dump(tmp_path, "g.json", PLANT))
    assert G.allclose(RM.scalar([1.0], [-2.0, 1.0]))
    bad = {**PLANT, "entries": [[{"num": [1], "den": [0]}]]}
    with pytest.raises(cli.InputError, match="zero denominator"):
        cli.parse_plant(_dump(tmp_path, "b.json", bad))
    proper = {**PLANT, "entries": [[{"num": [0, 1], "den": [-2, 1]}]]}
    with pytest.raises(cli.InputError, match="well-posedness"):
        cli.parse_plant(_dump(tmp_path, "p.json", proper))
    (tmp_path / "m.json").write_text("{not json")
    with pytest.raises(cli.InputError, match="malformed"):
        cli.parse_plant(str(tmp_path / "m.json"))


def test_synth_exit_codes(tmp_path, capsys):
    g = _dump(tmp_path, "g.json", PLANT)
    out = tmp_path / "r.json"
    assert cli.main(["synth", "--plant", g, "--order", "3", "--objective", "h2", "--out", str(out)]) == 0
    res = json.loads(out.read_text())
    assert {"h2_norm", "stabilizing", "membership_residual", "sparsity_ok", "tp", "K"} <= res.keys()
    assert res["stabilizing"] is True and res["membership_residual"] < 1e-6
    hard = {**PLANT, "entries": [[{"num": [1], "den": [6, -5, 1]}]]}
    assert cli.main(["synth", "--plant", _dump(tmp_path, "h.json", hard), "--order", "2"]) == 2
    proper = {**PLANT, "entries": [[{"num": [0, 1], "den": [-2, 1]}]]}
    assert cli.main(["synth", "--plant", _dump(tmp_path, "p.json", proper)]) == 1


def test_report_deterministic(tmp_path):
    g = _dump(tmp_path, "g.json", PLANT)
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        cli.main(["synth", "--plant", g, "--order", "4", "--objective", "h2", "--out", str(out)])
        d = json.loads(out.read_text())
        d.pop("timings")
        outs.append(json.dumps(d, sort_keys=True))
    assert outs[0] == outs[1]


def test_text_report():
    r = solve(SynthesisProblem(RM.scalar([1.0], [-2.0, 1.0]), 3, objective="h2"))
    text = cli.emit_report(cli.result_report(r), "text")
    for clause in ("membership: PASS", "internal stability: PASS", "overall: PASS"):
        assert clause in text


def test_verify_commands(tmp_path, capsys):
    g = _dump(tmp_path, "g.json", PLANT)
    k = _dump(tmp_path, "k.json", RM.scalar([-2.0]).to_dict())
    assert cli.main(["verify-stab", "--plant", g, "--controller", k]) == 0
    assert json.loads(capsys.readouterr().out)["stabilizing"] is True
    k0 = _dump(tmp_path, "k0.json", RM.zeros(1, 1).to_dict())
    assert cli.main(["verify-stab", "--plant", g, "--controller", k0]) == 3
    capsys.readouterr()
    from iopctrl.verify import closed_loop_maps

    quad = closed_loop_maps(RM.scalar([1.0], [-2.0, 1.0]), RM.scalar([-2.0]))
    qp = _dump(tmp_path, "q.json", quad.to_dict())
    assert cli.main(["verify-iop", "--plant", g, "--quad", qp, "--tol", "1e-6"]) == 0


def test_qi_command(tmp_path, capsys):
    S = _dump(tmp_path, "s.json", {"pattern": fixtures.lower_triangular_pattern().tolist()})
    G = _dump(tmp_path, "g.json", fixtures.discrete_plant().to_dict())
    assert cli.main(["qi-check", "--pattern", S, "--plant-support", G]) == 0
    assert json.loads(capsys.readouterr().out)["qi"] is True
    D = _dump(tmp_path, "d.json", {"pattern": np.eye(3, dtype=int).tolist()})
    F = _dump(tmp_path, "f.json", np.ones((3, 3), int).tolist())
    cli.main(["qi-check", "--pattern", D, "--plant-support", F])
    assert json.loads(capsys.readouterr().out)["qi"] is False


def test_youla_commands(tmp_path, capsys):
    g = RM.scalar([1.0, 0.5], [0.2, -0.9, 1.0])
    gp = _dump(tmp_path, "g.json", g.to_dict())
    dp = _dump(tmp_path, "dcf.json", trivial_dcf(g).to_dict())
    qp = _dump(tmp_path, "q.json", RM.scalar([0.3, 1.0], [0.0, 1.0]).to_dict())
    assert cli.main(["youla", "verify-dcf", "--plant", gp, "--dcf", dp]) == 0
    capsys.readouterr()
    assert cli.main(["youla", "to-iop", "--q", qp, "--dcf", dp]) == 0
    quad = _dump(tmp_path, "quad.json", json.loads(capsys.readouterr().out))
    assert cli.main(["youla", "from-iop", "--quad", quad, "--dcf", dp, "--plant", gp]) == 0
    Q = RM.from_dict(json.loads(capsys.readouterr().out))
    assert Q.allclose(RM.scalar([0.3, 1.0], [0.0, 1.0]), 1e-9)
