import numpy as np
import pytest

from semiclassic.core import Grid1D, SplineSpace, Wavefunction
from semiclassic.harness import CATALOG, ConfigError, default_tol, load_config, make_scenario, run_scenario
from semiclassic.harness import io
from semiclassic.harness.cli import main
from semiclassic.harness.runner import EMP_HEADER, _collide_classical

SMALL_EOC = {"M_ladder": [35, 50, 70], "N_ladder": [80, 160, 320]}


# -- configuration ----------------------------------------------------------

def test_precedence_and_recorded_overrides(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario: split_noninterference\nhbar: 0.05\nT: 2.0\n")
    s = make_scenario(config=load_config(cfg), out=tmp_path, T=1.5)
    assert s.name == "split_noninterference"
    assert s.params["hbar"] == 0.05 and s.params["T"] == 1.5
    assert s.overrides == {"hbar": 0.05, "T": 1.5}
    assert s.params["m"] == [0.9186]


def test_scalar_is_promoted_for_swept_keys():
    s = make_scenario("collide_interference", theta=0.5, hbar=[0.1, 0.05])
    assert s.params["theta"] == [0.5] and s.hbar_list() == [0.1, 0.05]


@pytest.mark.parametrize("name,kw", [("nope", {}), ("adaptive_tdp", {"tolerance": 1.0}),
                                     ("rate_c1a", {"theta": 0.1})])
def test_unknown_names_and_keys_are_rejected(name, kw):
    with pytest.raises(ConfigError):
        make_scenario(name, **kw)


def test_config_scenario_mismatch(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario: wkb_slice\n")
    with pytest.raises(ConfigError):
        make_scenario("rate_c1a", load_config(cfg))
    cfg.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(cfg)


def test_default_tolerance_rule():
    assert default_tol(1e-2) == 1e-2 and default_tol(5e-3) == 2e-2
    assert make_scenario("split_noninterference").tol_for(1e-2) == 1e-2
    assert make_scenario("split_noninterference", tol=3e-3).tol_for(1e-2) == 3e-3


def test_catalog_has_all_scenarios():
    assert set(CATALOG) == {"eoc_doublewell", "eoc_nonsmooth", "adaptive_tdp",
                            "split_noninterference", "collide_interference", "wkb_slice", "rate_c1a"}


# -- file formats -----------------------------------------------------------

def test_fmt_is_round_trip_exact():
    for v in (0.1, 1 / 3, 1e-300, -2.5e17):
        assert float(io.fmt(v)) == v
    assert io.fmt(True) == "1" and io.fmt(np.int64(3)) == "3" and io.fmt(float("nan")) == "nan"


def test_csv_round_trip(tmp_path):
    p = io.write_csv(tmp_path / "t.csv", ("a", "b"), [(1, 0.1), (2, 1 / 3)])
    rows = io.read_csv(p)
    assert rows[1] == {"a": "2", "b": repr(1 / 3)}
    assert not list(tmp_path.glob(".t.csv.*"))  # no temporary left behind


def test_state_dump_round_trip(tmp_path):
    sp = SplineSpace.uniform(-2, 2, 20, 3)
    u = Wavefunction(sp, sp.project(lambda x: np.exp(-x * x + 2j * x)), 0.1)
    m, b = io.dump_state(u, tmp_path / "u")
    assert b.stat().st_size == 16 * int(io.read_manifest(m)["nx"])
    v = io.load_state(tmp_path / "u.meta")
    assert isinstance(v.basis, Grid1D) and v.hbar == 0.1
    assert np.allclose(v.coeffs, u(v.basis.nodes), rtol=0, atol=1e-13)
    with pytest.raises(ValueError):
        (tmp_path / "f.meta").write_text("kind = field\n")
        io.load_state(tmp_path / "f")


# -- runs -------------------------------------------------------------------

def test_manifest_is_deterministic(tmp_path):
    mans = []
    for d in ("a", "b"):
        man = run_scenario(make_scenario("eoc_doublewell", out=tmp_path / d, **SMALL_EOC))
        assert man.status == "ok", man.failures
        mans.append(man.path.read_bytes())
    assert mans[0] == mans[1]
    text = mans[0].decode()
    assert "override.M_ladder = [35, 50, 70]" in text
    assert "file.eoc_table.csv = sha256:" in text and "wall" not in text
    assert (tmp_path / "a" / "eoc_doublewell" / "timing.txt").exists()


def test_cli_eoc_and_errors(tmp_path, capsys):
    table = io.write_csv(tmp_path / "e.csv", ("ladder", "size", "value"),
                         [("s", 10, 16.0), ("s", 20, 1.0), ("s", 40, 1 / 16)])
    assert main(["eoc", str(table)]) == 0
    out = capsys.readouterr().out
    assert "4.000" in out
    bad = io.write_csv(tmp_path / "b.csv", ("n", "err"), [(1, 1.0)])
    assert main(["eoc", str(bad)]) == 2
    assert main(["run", "adaptive_tdp", "--config", str(tmp_path / "missing.yaml")]) == 2
    with pytest.raises(SystemExit):
        main(["run", "not_a_scenario"])


def test_cli_run_reports_manifest(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("M_ladder: [35, 50]\nN_ladder: [80, 160]\n")
    assert main(["run", "eoc_doublewell", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "eoc_doublewell: ok" in out and "manifest:" in out


def test_classical_emp_does_not_see_theta(tmp_path):
    # the classical ensemble is built from the single packet and its mirror image
    p = dict(make_scenario("collide_interference").params, n_particles=4000,
             detect_interference=False)
    a = _collide_classical(dict(p, theta=[0.25]), 1e-2, str(tmp_path / "a"))
    b = _collide_classical(dict(p, theta=[0.75]), 1e-2, str(tmp_path / "b"))
    assert not a.failures and a.data["emp"] == b.data["emp"]
    assert a.data["partition"] == b.data["partition"]
    # the mirror-symmetric ensemble splits evenly between the sides
    assert abs(a.data["emp"]) < 1e-12
    assert EMP_HEADER == ("theta", "hbar", "emp_quantum", "emp_classical")
