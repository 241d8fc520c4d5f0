import json

import pytest

from hetnet_icic.runner import (EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, ConfigError,
                                ExperimentConfig, build_configs, compare_report, expand_sweeps,
                                main, make_scheme, parse_config_text, run_experiment)


def test_parse_config_text():
    text = """
    # desk run
    mode = FixedAbsCre
    pbs = 4          # per sector
    abs_reduction_db = mute
    seeds = 1, 2, 3
    drops = 3
    sweep.abs_ratio = 0.1, 0.7
    """
    settings, sweeps = parse_config_text(text)
    assert settings == {"mode": "FixedAbsCre", "pbs": 4, "abs_reduction_db": None,
                        "seeds": (1, 2, 3), "drops": 3}
    assert sweeps == {"abs_ratio": [0.1, 0.7]}


@pytest.mark.parametrize("text, key, line", [
    ("mode = RP\nfoo = 1\n", "foo", 2),
    ("pbs = two\n", "pbs", 1),
    ("\n\nttis\n", None, 3),
    ("fading = maybe\n", "fading", 1),
])
def test_parse_errors_name_key_and_line(text, key, line):
    with pytest.raises(ConfigError) as e:
        parse_config_text(text)
    assert e.value.key == key and e.value.line == line
    assert f"line {line}" in str(e.value)


def test_validation_errors():
    for kw in (dict(mode="Nope"), dict(abs_ratio=0.5), dict(bias_db=3.0), dict(ttis=10, warmup=10),
               dict(drops=2, seeds=(1,)), dict(abs_reduction_db=5.0)):
        with pytest.raises(ConfigError):
            ExperimentConfig(**kw).validate()


def test_sweep_cartesian_product():
    cfgs = build_configs(["--sweep", "pbs=2,4,8", "--sweep", "mode=DynamicQL,Satisfaction"])
    assert len(cfgs) == 6
    assert {(c.pbs, c.mode) for c in cfgs} == {(p, m) for p in (2, 4, 8)
                                               for m in ("DynamicQL", "Satisfaction")}
    assert len({c.tag for c in cfgs}) == 6


def test_seeds_and_defaults():
    c = ExperimentConfig(seed=7, drops=3)
    assert c.seed_list == [7, 8, 9]
    assert ExperimentConfig(mode="FixedCreAdaptiveAbs").effective_bias == 12.0
    assert make_scheme(ExperimentConfig(mode="FixedAbsCre", abs_reduction_db=6.0)).name == \
        "FixedAbsCre(0.3,12,6dB)"
    for m in ("RP", "NoIcicCre", "StaticQL", "DynamicQL", "Satisfaction", "SF_QL",
              "MF_StaticQL", "MF_DynamicQL"):
        make_scheme(ExperimentConfig(mode=m))


def _small(tmp_path, **kw):
    base = dict(ttis=40, warmup=5, drops=2, out=str(tmp_path))
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_outputs_and_determinism(tmp_path):
    a = run_experiment(_small(tmp_path / "a", mode="DynamicQL"))[0]
    b = run_experiment(_small(tmp_path / "b", mode="DynamicQL"))[0]
    names = sorted(p.name for p in a.files)
    assert names == sorted(["drop_0_ue_throughput.csv", "drop_1_ue_throughput.csv",
                            "ue_throughput.csv", "cdf.csv", "convergence.csv",
                            "complexity.txt", "summary.json"])
    for pa, pb in zip(a.files, b.files):
        assert pa.read_bytes() == pb.read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert summary["seeds"] == [0, 1] and summary["num_drops"] == 2
    assert "memory_units_q = 6750" in (tmp_path / "a" / "complexity.txt").read_text()


def test_compare_report(tmp_path):
    sets = run_experiment([_small(tmp_path, mode="RP"), _small(tmp_path, mode="NoIcicCre")])
    assert (tmp_path / "RP_P2").is_dir() and (tmp_path / "NoIcicCre_P2_bias0").is_dir()
    rows = compare_report(sets, baseline="RP_P2")
    assert rows[0]["gain_mean_pct"] == 0.0
    m0, m1 = (s.summary["ue_throughput_bps"]["mean"] for s in sets)
    assert rows[1]["gain_mean_pct"] == pytest.approx(100 * (m1 / m0 - 1))
    same = compare_report([sets[0], sets[0]])
    assert all(r["gain_mean_pct"] == 0.0 for r in same)
    other = run_experiment(_small(tmp_path / "x", mode="RP", pbs=1))[0]
    with pytest.raises(ValueError):
        compare_report([sets[0], other])


def test_trace_files(tmp_path):
    c = _small(tmp_path, mode="Satisfaction", drops=1, trace=True, snapshot_interval=10)
    run_experiment(c)
    d = tmp_path / "traces" / "drop_0"
    for f in ("layout.csv", "x2_log.csv", "sinr.csv", "association.csv", "satisfaction.csv"):
        assert (d / f).stat().st_size > 0
    c = _small(tmp_path / "q", mode="SF_QL", drops=1, trace=True, snapshot_interval=10)
    run_experiment(c)
    d = tmp_path / "q" / "traces" / "drop_0"
    assert (d / "q_tables.csv").stat().st_size > 0
    assert (d / "carrier_plan.csv").stat().st_size > 0


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["--mode", "Nope"]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG
    bad = tmp_path / "bad.cfg"
    bad.write_text("mode = RP\nwarp = 9\n")
    assert main(["--config", str(bad)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    cfg = tmp_path / "crowded.cfg"
    cfg.write_text("pbs = 40\nues = 40\nttis = 20\nwarmup = 2\ndrops = 1\n")
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_INFEASIBLE
    out = tmp_path / "ok"
    assert main(["--mode", "RP", "--ttis", "30", "--warmup", "5", "--drops", "1",
                 "--out", str(out)]) == EXIT_OK
    assert main(["--mode", "NoIcicCre", "--ttis", "30", "--warmup", "5", "--drops", "1",
                 "--out", str(tmp_path / "ok2")]) == EXIT_OK
    capsys.readouterr()
    assert main(["--compare", str(out), str(tmp_path / "ok2"), "--baseline", "ok"]) == EXIT_OK
    assert "ok2" in capsys.readouterr().out


def test_sweep_expansion_keeps_base():
    base = ExperimentConfig(mode="RP", ttis=100)
    cfgs = expand_sweeps(base, {"pbs": [0, 2]})
    assert [c.pbs for c in cfgs] == [0, 2] and all(c.ttis == 100 for c in cfgs)
