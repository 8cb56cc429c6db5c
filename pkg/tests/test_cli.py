import hashlib
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vonmises_prandtl import cli
from vonmises_prandtl.von_mises import InitialData, blasius_u0, gaussian_concave_u0


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


@pytest.mark.parametrize("text, line, fragment", [
    ("[run]\ncommand = blasius\n[march]\ncells = many\n", 4, "march.cells"),
    ("[run]\ncommand = blasius\n\n[march]\nfoo = 1\n", 5, "unknown key 'foo'"),
    ("x = 1\n", 1, "outside any section"),
    ("[run]\ncommand = blasius\nnot a pair\n", 3, "cannot parse"),
    ("[run]\n[extra]\na = 1\n", 2, "unknown section"),
    ("[run]\ncommand = dance\n", 2, "expected one of"),
    ("[barrier]\nkinds = sharp, wobbly\n", 2, "wobbly"),
])
def test_config_errors_carry_line_numbers(tmp_path, text, line, fragment):
    path = _write(tmp_path, text)
    with pytest.raises(cli.ConfigError) as info:
        cli.load_config(path)
    msg = str(info.value)
    assert f"{path}:{line}:" in msg and fragment in msg


def test_config_parsed(tmp_path):
    cfg = cli.load_config(_write(tmp_path, """
# comment
[run]
command = march
resolution = low
[initial]
kind = gaussian-concave
amplitude = 0.7
[march]
x_end = 50
psi_max = auto
[barrier]
kinds = exp-tail sharp
[screen]
enforce = no
"""))
    assert cfg.command == "march" and cfg.resolution == "low"
    assert cfg.initial == {"kind": "gaussian-concave", "amplitude": 0.7}
    mc = cfg.march_config()
    assert mc.x_end == 50.0 and mc.cells == 500 and mc.psi_max is None
    assert cfg.kinds == ("exp-tail", "sharp") and cfg.enforce is False


def test_invalid_march_settings(tmp_path):
    with pytest.raises(cli.ConfigError):
        cli.load_config(_write(tmp_path, "[march]\ndx0 = -1\n"))


@settings(max_examples=8, deadline=None)
@given(st.floats(0.2, 20.0))
def test_blasius_data_admissible_at_any_shift(profile, x0):
    r = cli.validate_initial_data(blasius_u0(profile, x0), profile)
    assert r["passed"], r["failed"]


def test_gaussian_concave_admissible(profile):
    r = cli.validate_initial_data(gaussian_concave_u0(), profile)
    assert r["passed"] and not r["warnings"]


def test_exponential_approach_reported_as_dk0(profile):
    th = InitialData("tanh", lambda y: np.tanh(2 * y), lambda y: 2 / np.cosh(2 * y) ** 2,
                     lambda y: -8 * np.tanh(2 * y) / np.cosh(2 * y) ** 2, {})
    r = cli.validate_initial_data(th, profile)
    assert "dk0: gaussian_decay" in r["failed"]
    assert r["conditions"]["decay2inf"]["u0''<=0"]


def test_nonzero_wall_value_fails(profile):
    d = blasius_u0(profile)
    off = InitialData("offset", lambda y: 0.1 + 0.9 * d.u0(y), lambda y: 0.9 * d.du0(y),
                      lambda y: 0.9 * d.d2u0(y), {})
    r = cli.validate_initial_data(off, profile)
    assert "OI: u0(0)=0" in r["failed"]


def test_blasius_command(tmp_path):
    status = cli.main(["--command", "blasius", "--out", str(tmp_path / "o")])
    assert status == 0
    out = tmp_path / "o"
    assert (out / "profile.csv").exists()
    assert json.loads((out / "blasius.json").read_text())["b0"] == pytest.approx(0.332057, abs=1e-6)


def test_non_concave_data_rejected(tmp_path):
    y = np.linspace(0, 20, 2001)
    u = np.tanh(y) + 0.3 * y * np.exp(-y)
    u = u / u[-1]
    np.savetxt(tmp_path / "u.csv", np.column_stack([y, u]), delimiter=",", header="y,u", comments="")
    cfg = _write(tmp_path, f"""[run]
command = march
resolution = low
[initial]
kind = table
path = {tmp_path / 'u.csv'}
[march]
x_end = 5
[screen]
enforce = no
concavity = yes
""")
    out = tmp_path / "o"
    assert cli.main(["--config", str(cfg), "--out", str(out)]) == 2
    summary = json.loads((out / "summary.json").read_text())
    assert "u0''<=0" in summary["error"]


def test_screen_failure_exit_status(tmp_path):
    cfg = _write(tmp_path, "[initial]\nkind = blasius-shift\nx0 = -1\n")
    assert cli.main(["--config", str(cfg), "--out", str(tmp_path / "o"), "--command", "march"]) == 2


@pytest.fixture(scope="module")
def low_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = root / "run.ini"
    cfg.write_text("""[run]
command = all
resolution = low
[initial]
kind = gaussian-concave
[march]
x_end = 300
[diagnostics]
oracle = no
[barrier]
kinds = exp-tail, sharp
""")
    outs = []
    for name in ("a", "b"):
        status = cli.main(["--config", str(cfg), "--out", str(root / name)])
        outs.append((status, root / name))
    return outs


def test_pipeline_outputs_and_hashes(low_run):
    status, out = low_run[0]
    summary = json.loads((out / "summary.json").read_text())
    assert status == summary["status"]
    assert status == (0 if all(summary["gates"].values()) else 1)
    assert "certificates/sharp.json" in summary["files"]
    for name, digest in summary["files"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    files = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()}
    assert files - {"summary.json"} == set(summary["files"])


def test_pipeline_is_deterministic(low_run):
    (_, a), (_, b) = low_run
    for p in a.rglob("*"):
        if p.is_file():
            assert p.read_bytes() == (b / p.relative_to(a)).read_bytes(), p


def test_csv_uses_crlf_and_dot_decimal(low_run):
    raw = (low_run[0][1] / "verify" / "bracket.csv").read_bytes()
    assert raw.startswith(b"x,c_min,C_max\r\n")
    assert b";" not in raw
