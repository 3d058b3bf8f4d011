import math

import numpy as np
import pytest

from icstbc import harness
from icstbc.fixtures import find_series, fixtures_for, load_fixtures, value_at
from icstbc.harness import ConfigError, SimConfig


def small(**kw):
    base = dict(ebn0=(0.0, 10.0), min_errors=30, max_trials=3000, chunk_size=500, seed=9)
    base.update(kw)
    return SimConfig(**base)


def test_parse_sweep():
    assert harness.parse_sweep("0:5:40") == tuple(float(v) for v in range(0, 41, 5))
    assert harness.parse_sweep("17.5:10.5:28") == (17.5, 28.0)
    assert harness.parse_sweep("20,30") == (20.0, 30.0)
    assert harness.parse_sweep("") == ()
    with pytest.raises(ConfigError):
        harness.parse_sweep("0:0:10")
    with pytest.raises(ConfigError):
        harness.parse_sweep("0:10")


@pytest.mark.parametrize("kw", [dict(scheme="three-user", n=3, decoder="picgd"),
                                dict(min_errors=0), dict(q=8), dict(decoder="zf"),
                                dict(scheme="four-user"), dict(n=1, n_t=2), dict(n=7),
                                dict(workers=0), dict(min_trials=10, max_trials=5)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw).validate()


def test_decoder_setup():
    assert SimConfig(decoder="ml-joint").decoder_setup() == ("picgd", "joint-sphere")
    assert SimConfig(scheme="three-user", n=3, decoder="ml-joint").decoder_setup() == ("picgd-sic", "joint-sphere")
    assert SimConfig(decoder="picgd-sic").decoder_setup() == ("picgd-sic", "decoupled")


def test_three_user_defaults_to_sic():
    cfg = harness.config_from_mapping({"scheme": "three-user", "nt": "2", "n": "3"})
    assert cfg.decoder == "picgd-sic"
    cfg = harness.config_from_mapping({"scheme": "three-user", "nt": "2", "n": "3",
                                       "decoder": "ml-joint"})
    assert cfg.decoder == "ml-joint"


def test_noiseless_limit():
    res = harness.run_sweep(small(ebn0=(60.0,), max_trials=1000, min_errors=1))
    p = res.points[0]
    assert p.trials == 1000 and p.codeword_errors == 0 and p.cer == 0


def test_stop_rule_and_invariants():
    cfg = small(ebn0=(0.0, 10.0, 20.0), max_trials=2600)
    res = harness.run_sweep(cfg)
    for p in res.points:
        assert p.codeword_errors >= cfg.min_errors or p.trials == cfg.max_trials
        assert p.trials % cfg.chunk_size == 0 or p.trials == cfg.max_trials
        assert 0 <= p.cer <= 1
        assert max(p.per_user_errors) <= p.codeword_errors <= sum(p.per_user_errors)
    # points past the error target stop at the first chunk that reaches it
    assert res.points[0].trials == 500
    cers = [p.cer for p in res.points]
    assert cers == sorted(cers, reverse=True)


def test_min_trials_respected():
    res = harness.run_sweep(small(ebn0=(0.0,), min_trials=2000))
    assert res.points[0].trials == 2000


def test_partial_last_chunk():
    res = harness.run_sweep(small(ebn0=(40.0,), max_trials=1234, min_errors=10 ** 6))
    assert res.points[0].trials == 1234


@pytest.mark.parametrize("kw", [dict(), dict(scheme="three-user", n=3, decoder="picgd-sic"),
                                dict(decoder="ml-joint", n_r=2)])
def test_workers_do_not_change_results(kw):
    cfg = small(**kw)
    a = harness.run_sweep(cfg)
    b = harness.run_sweep(harness.config_from_mapping({"workers": "8"}, base=cfg))
    assert [p.numeric() for p in a.points] == [p.numeric() for p in b.points]


def test_seed_changes_results():
    a = harness.run_sweep(small(ebn0=(5.0,), min_errors=10 ** 6, max_trials=500))
    b = harness.run_sweep(small(ebn0=(5.0,), min_errors=10 ** 6, max_trials=500, seed=10))
    assert a.points[0].numeric() != b.points[0].numeric()


def test_ml_joint_matches_decoupled_counts():
    # the two exact decoders must make identical decisions on identical draws
    a = harness.run_sweep(small(decoder="picgd"))
    b = harness.run_sweep(small(decoder="ml-joint"))
    assert [p.per_user_errors for p in a.points] == [p.per_user_errors for p in b.points]


def test_csv_roundtrip(tmp_path):
    res = harness.run_sweep(small(scheme="three-user", n=3, decoder="picgd-sic"))
    path = tmp_path / "r.csv"
    harness.emit_csv(res, path)
    header = path.read_text().splitlines()[0]
    assert header == "ebn0_db,trials,errors,cer,cer_user1,cer_user2,cer_user3,avg_visited_nodes"
    back = harness.read_csv(path)
    assert [p.numeric() for p in back] == [p.numeric() for p in res.points]


def test_empty_sweep_header_only(tmp_path):
    res = harness.SimResult(SimConfig(ebn0=()))
    path = harness.emit_csv(res, tmp_path / "e.csv")
    assert path.read_text().strip() == "ebn0_db,trials,errors,cer,cer_user1,cer_user2,avg_visited_nodes"
    assert harness.read_csv(path) == []


def test_io_errors_carry_path(tmp_path):
    res = harness.SimResult(SimConfig())
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        harness.emit_csv(res, bad)
    with pytest.raises(OSError, match="nope.cfg"):
        harness.read_config_file(tmp_path / "nope.cfg")


def test_plot_script_overlays_fixtures(tmp_path):
    res = harness.SimResult(SimConfig(n=5, n_r=4, q=16))
    series = load_fixtures(figure=7)
    path = harness.emit_plot_script(res, series, tmp_path / "r.csv", tmp_path / "plot.py")
    text = path.read_text()
    compile(text, str(path), "exec")
    assert str(tmp_path / "r.csv") in text
    assert "rate-4/7 rival scheme, 1024-QAM" in text and "external data" in text


def test_fixture_catalogue():
    figs = {s["figure"] for s in load_fixtures()}
    assert figs == {2, 3, 4, 5, 6, 7}
    rival = [s for s in load_fixtures(figure=7, source="external") if s["q"] == 1024]
    assert len(rival) == 1 and rival[0]["quantity"] == "nodes"
    s = find_series(2, n=2)
    assert value_at(s, 20) == pytest.approx(5.41e-3, rel=1e-2)
    assert value_at(s, 30) == pytest.approx(8.56e-5, rel=1e-2)
    assert value_at(find_series(4, n=3), 30) == pytest.approx(1.00e-4, rel=1e-2)
    assert value_at(find_series(3, n=3), 17.5) == pytest.approx(1.32e-2, rel=1e-2)
    assert all(s["n_r"] == 4 for s in fixtures_for("two-user", 2, 4))


def test_config_file_and_override(tmp_path):
    f = tmp_path / "sim.cfg"
    f.write_text("# sweep\nscheme = three-user\nnt = 2\nn = 3\ndecoder = picgd-sic\n"
                 "ebn0 = 0:5:10\nmod = 16qam\nmin-errors = 50\n")
    mapping = harness.read_config_file(f)
    mapping.update({"min_errors": "7"})
    cfg = harness.config_from_mapping(mapping).validate()
    assert cfg.scheme == "three-user" and cfg.q == 16 and cfg.ebn0 == (0.0, 5.0, 10.0)
    assert cfg.min_errors == 7
    f.write_text("nonsense\n")
    with pytest.raises(ConfigError):
        harness.read_config_file(f)
    with pytest.raises(ConfigError):
        harness.config_from_mapping({"colour": "red"})


def test_slope_helper():
    a = harness.PointResult(20.0, 1000, 100, (60, 60), 16.0)
    b = harness.PointResult(30.0, 100000, 100, (60, 60), 16.0)
    assert harness.slope_per_decade(a, b) == pytest.approx(2.0)
    assert math.isnan(harness.PointResult(0.0, 0, 0, (0, 0), float("nan")).cer)
