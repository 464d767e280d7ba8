import csv
import json

import pytest

from randcent import experiments
from randcent.config import ConfigError, default_study_config, parse_toml, study_from_mapping
from randcent.experiments import StudyConfig, run_replications, run_study, summarize
from randcent.spectral import NonConvergence


def small_convergence(threads=1, reps=6, seed=7):
    return StudyConfig(
        study="convergence",
        model={"kind": "er", "p": 0.3},
        n=[60, 90],
        reps=reps,
        seed=seed,
        phi="half-inverse-lambda1",
        threads=threads,
    )


def test_same_config_same_statistics():
    a = run_study(small_convergence())
    b = run_study(small_convergence())
    assert a.summary == b.summary
    assert a.rows == b.rows


def test_parallel_matches_sequential_bit_for_bit():
    seq = run_study(small_convergence(threads=1))
    par = run_study(small_convergence(threads=4))
    assert seq.rows == par.rows
    assert seq.summary == par.summary


def test_seed_changes_results():
    a = run_study(small_convergence(seed=1))
    b = run_study(small_convergence(seed=2))
    assert a.rows != b.rows


def test_single_replication_is_deterministic():
    a = run_study(small_convergence(reps=1))
    b = run_study(small_convergence(reps=1))
    assert a.rows == b.rows
    for stats in a.summary["60"].values():
        assert stats["count"] == 1 and stats["se"] == 0.0


def test_count_excludes_nonconverged():
    def fn(r):
        if r % 3 == 0:
            raise NonConvergence(10, 1.0, "test")
        return {"x": float(r)}

    out = run_replications(fn, 9, threads=2)
    assert [o is None for o in out] == [r % 3 == 0 for r in range(9)]
    res = experiments.StudyResult("convergence", {})
    by_q = experiments._collect(res, 9, out)
    assert res.summary["9"]["x"]["count"] == 9 - 3
    assert res.nonconverged["9"] == 3
    assert by_q["x"] == [1.0, 2.0, 4.0, 5.0, 7.0, 8.0]


def test_summarize():
    s = summarize([1.0, 2.0, 3.0])
    assert s["mean"] == 2.0 and s["count"] == 3 and s["min"] == 1.0 and s["max"] == 3.0
    assert s["se"] == pytest.approx(1 / 3**0.5)
    assert summarize([])["count"] == 0


def test_bands_produce_checks():
    cfg = small_convergence()
    cfg.bands = {"eig_distance": {"60": [0.0, 10.0]}, "katz_distance": {"90": [100.0, 200.0]}}
    res = run_study(cfg)
    assert res.check("band[eig_distance,n=60]").passed
    assert not res.check("band[katz_distance,n=90]").passed
    assert not res.passed


def test_write_outputs(tmp_path):
    res = run_study(small_convergence())
    paths = res.write(tmp_path)
    data = json.loads(paths[0].read_text())
    assert data["study"] == "convergence"
    assert {"summary", "checks", "config", "wall_clock", "nonconverged"} <= set(data)
    with open(paths[1]) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["study", "n", "rep", "quantity", "value"]
    assert len(rows) - 1 == len(res.rows)


def test_rate_study_small():
    cfg = StudyConfig(study="rate", model={"kind": "er", "p": 0.3}, n=[60, 120], reps=4, seed=3, threads=1)
    res = run_study(cfg)
    assert res.check("bound_decreasing").passed
    assert "bounds" in res.tables


@pytest.mark.parametrize("study", experiments.STUDIES)
def test_default_configs_parse(study):
    cfg = default_study_config(study)
    assert cfg.study == study


@pytest.mark.parametrize(
    "text,field",
    [
        ('study = "rate"\nreps = 0', "reps"),
        ('study = "rate"\nseed = -1', "seed"),
        ('study = "rate"\nn = [1]', "n"),
        ('study = "rate"\nreps = "many"', "reps"),
        ('study = "nope"', "study"),
        ('study = "rate"\ncolour = 1', "colour"),
        ('study = "rate"\n[model]\nkind = "sbm"\nshares = [0.5, 0.6]\nprobs = [[0.5, 0.1], [0.1, 0.5]]', "shares"),
    ],
)
def test_config_errors_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field):
        study_from_mapping(parse_toml(text))


def test_threads_env(monkeypatch):
    monkeypatch.setenv("RANDCENT_THREADS", "3")
    assert experiments.default_threads() == 3
