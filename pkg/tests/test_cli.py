import json
import subprocess
import sys

import pytest

from hreilly import cli

EXAMPLE = """\
n: 1
identities: [c3f-derived, pointwise]
surface: sphere(0,1)
domain: ball_radial(0,1)
testFunction: rho2_half
quadrature: {baseOrder: 16, levels: 2}
"""


def write(tmp_path, text, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_example_config_passes(tmp_path):
    out = tmp_path / "r.json"
    code = cli.main(["verify", "--config", write(tmp_path, EXAMPLE), "--out", str(out)])
    reports = json.loads(out.read_text())
    assert code == 0
    c3 = reports[0]
    assert c3["name"] == "c3f-derived" and c3["status"] == "pass"
    assert c3["lhs"] == pytest.approx(4.18879020478639, rel=1e-12)
    assert {r["name"] for r in reports[1:]} == {"ljjjkl", "derossi", "hessian-skew", "a-h",
                                                 "trace", "nabla-nu"}


def test_empty_identity_list(tmp_path, capsys):
    code = cli.main(["verify", "--config", write(tmp_path, "n: 1\nidentities: []\n")])
    assert code == 0
    assert capsys.readouterr().out.strip() == "[]"


@pytest.mark.parametrize("text,field,line", [
    ("n: 1\nidentities: [c3f]\nbogus: 3\n", "bogus", 3),
    ("n: 0\nidentities: [c3f]\n", "n", 1),
    ("n: 1\nidentities: [c9f]\n", "identities[0]", 2),
    ("n: 1\nidentities: [reilly]\nsurface: sphere(0,1)\ndomain: ball_radial(0,1)\n"
     "testFunction: nope_fn\n", "testFunction", 5),
    ("n: 1\nidentities: [c3f]\nquadrature: {levels: 0}\n", None, None),
    ("n: 1\nidentities: [c3f\n", "config", None),
])
def test_config_errors_exit_3(tmp_path, capsys, text, field, line):
    code = cli.main(["verify", "--config", write(tmp_path, text)])
    err = capsys.readouterr().err
    assert code == 3
    assert err.startswith("config error:")
    if field:
        assert f"field '{field}'" in err
    if line:
        assert f"(line {line})" in err


def test_missing_config_file(tmp_path, capsys):
    assert cli.main(["verify", "--config", str(tmp_path / "absent.yaml")]) == 3


def test_failing_and_inconclusive_exit_codes(tmp_path):
    fail = "n: 1\nidentities: [c2f]\nsurface: sphere(0,1)\ndomain: ball_radial(0,1)\n" \
           "quadrature: {baseOrder: 16, levels: 2}\nformat: text\n"
    assert cli.main(["verify", "--config", write(tmp_path, fail)]) == 1
    single = EXAMPLE.replace("levels: 2", "levels: 1").replace(", pointwise", "")
    assert cli.main(["verify", "--config", write(tmp_path, single, "b.yaml"), "--format", "text"]) == 2


def test_command_line_overrides(tmp_path, capsys):
    code = cli.main(["verify", "--config", write(tmp_path, EXAMPLE), "--identity", "pointwise",
                     "--format", "csv", "--seed", "3"])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0].startswith("name,status")
    assert len(out.splitlines()) == 7


def test_open_surface_rejected_up_front(tmp_path, capsys):
    text = "n: 1\nidentities: [mio]\nsurface: cylinder_patch(1,0,1)\n"
    assert cli.main(["verify", "--config", write(tmp_path, text)]) == 3
    assert "not closed" in capsys.readouterr().err


def test_stage_error_reported(tmp_path, capsys, monkeypatch):
    def boom(*a, **k):
        raise ArithmeticError("integrand blew up")

    monkeypatch.setattr(cli.I, "mio_report", boom)
    text = "n: 1\nidentities: [mio, c3f-derived]\nsurface: sphere(0,1)\ndomain: ball_radial(0,1)\n" \
           "quadrature: {baseOrder: 16, levels: 2}\n"
    code = cli.main(["verify", "--config", write(tmp_path, text), "--format", "text"])
    cap = capsys.readouterr()
    assert code == 1
    assert "identity 'mio' failed: ArithmeticError: integrand blew up" in cap.err
    assert "c3f-derived" in cap.out


def test_deterministic_output(tmp_path):
    cfg = write(tmp_path, EXAMPLE.replace("[c3f-derived, pointwise]",
                                         "[c3f-derived, pointwise, reilly, gd2]") + "workers: 3\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        cli.main(["verify", "--config", cfg, "--out", str(out)])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_list_catalog_and_entry_point():
    text = cli.list_catalog()
    for name in ("rho2_half", "ball_radial", "sphere", "ellipsoid(a,b,c)", "nu_perp"):
        assert name in text
    r = subprocess.run([sys.executable, "-m", "hreilly.cli", "list-catalog"], capture_output=True,
                       text=True, check=True)
    assert r.stdout == text
