import json
import math

import pytest

from stopping_lab import cli
from stopping_lab.errors import ConfigError
from stopping_lab.harness import (
    REPORT_COLUMNS,
    SEED_ENV,
    ExperimentConfig,
    SimulationReport,
    block_plan,
    monte_carlo,
    read_config_file,
    run_blocks,
    secretary_reference,
)

HEADER = "problem,n,k,policy,param,trials,mean,std_err,ci95,analytic,source,seed"


def test_block_plan():
    assert block_plan(10, 4) == [4, 4, 2]
    assert block_plan(8, 4) == [4, 4]
    assert sum(block_plan(1_000_003, 1000)) == 1_000_003


def _count_block(payload, b, size):
    return {"n": size, "b": b}


def test_run_blocks_sums_in_order():
    assert run_blocks(_count_block, None, 10, 3) == {"n": 10, "b": 0 + 1 + 2 + 3}


def test_validation_collects_every_problem():
    cfg = ExperimentConfig(problem="secretary", n=0, k=3, policy="time", mu=1.5, trials=0, format="xml")
    with pytest.raises(ConfigError) as exc:
        cfg.validate()
    text = str(exc.value)
    for fragment in ("n must be", "trials must be", "format must be", "mu in [0, 1)", "requires k=2"):
        assert fragment in text
    assert len(exc.value.problems) >= 5


def test_validation_cross_field():
    probs = ExperimentConfig(problem="secretary", policy="no-wait", mu=0.3).problems()
    assert any("mu is only meaningful" in p for p in probs)
    probs = ExperimentConfig(problem="secretary", instance="x.txt").problems()
    assert any("instance files apply only" in p for p in probs)
    assert ExperimentConfig(problem="poker").problems()[0].startswith("problem must be")
    assert ExperimentConfig(problem="matroid", policy="no-wait").problems()
    assert ExperimentConfig(problem="secretary", n=5, policy="threshold", f_value=2).problems() == []


def test_report_columns_and_ci():
    report = monte_carlo(ExperimentConfig(problem="secretary", n=3, k=2, trials=2000, seed=7))
    lines = report.to_csv().splitlines()
    assert lines[0] == HEADER == ",".join(REPORT_COLUMNS)
    assert report.ci95_halfwidth == pytest.approx(1.96 * report.std_error)
    assert report.std_error == pytest.approx(math.sqrt(report.empirical_mean * (1 - report.empirical_mean) / 2000))
    row = json.loads(report.to_json())
    assert list(row) == list(REPORT_COLUMNS)
    assert row["analytic"] == "7/9" and row["source"] == "no_wait_win_prob"
    assert report.consistent


def test_mismatch_is_flagged():
    report = SimulationReport("secretary", 2, 2, "no-wait", "", 100, 0.1, 0.01, 0.0196, "5/6",
                              "no_wait_win_prob", 1, analytic_value=5 / 6, checked=True)
    assert report.consistent is False
    assert report.row()["source"] == "no_wait_win_prob|MISMATCH>4se"


def test_references():
    assert secretary_reference(2, 3, "no-wait")[1:3] == ("19/20", "k3_closed_form")
    assert secretary_reference(4, 1, "no-wait")[1] == "1/4"
    assert secretary_reference(3, 2, "threshold", 1)[1:3] == ("5/6", "exact_oracle")
    value, _, source, exact = secretary_reference(100, 2, "time", 0.3)
    assert source == "asymptotic_limit" and not exact and 0.7 < value < 0.8


@pytest.mark.parametrize("n,k", [(2, 2), (10, 2), (50, 2), (2, 3)])
def test_closed_form_coverage(n, k):
    report = monte_carlo(ExperimentConfig(problem="secretary", n=n, k=k, trials=100_000, seed=n + k))
    assert report.consistent, report.row()


def test_matroid_and_matching_reports():
    rep = monte_carlo(ExperimentConfig(problem="matroid", n=6, kind="uniform", rank=2, trials=500, seed=3))
    assert rep.source == "matroid_ratio_lower_bound" and rep.param == "uniform"
    assert 0 < rep.empirical_mean <= 1
    rep = monte_carlo(ExperimentConfig(problem="matching", n=5, trials=50, seed=3))
    assert rep.analytic_reference == "9/16" and 0 < rep.empirical_mean <= 1


def test_config_file_and_override(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("# example\nproblem = secretary\nn = 5\ntrials = 1e3\nseed = 11\nformat=json\n")
    assert read_config_file(str(conf))["trials"] == 1000
    out = tmp_path / "r.json"
    assert cli.main(["simulate", "--config", str(conf), "--n", "4", "--output", str(out)]) == 0
    row = json.loads(out.read_text())
    assert row["n"] == "4" and row["trials"] == "1000" and row["seed"] == "11"
    conf.write_text("colour = blue\n")
    assert cli.main(["simulate", "--config", str(conf)]) == 1


def test_seed_from_environment(monkeypatch):
    monkeypatch.setenv(SEED_ENV, "424242")
    assert ExperimentConfig().seed == 424242


def test_reproducible_across_jobs(tmp_path):
    base = ["simulate", "--problem", "secretary", "--n", "20", "--k", "2", "--trials", "300000", "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.main(base + ["--jobs", "1", "--output", str(a)]) == 0
    assert cli.main(base + ["--jobs", "3", "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_exact(capsys):
    assert cli.main(["exact", "--n", "2", "--k", "2", "--policy", "no-wait"]) == 0
    assert capsys.readouterr().out.strip() == "5/6"


def test_cli_optimize_mu(capsys):
    assert cli.main(["optimize-mu", "--tol", "1e-6"]) == 0
    out = capsys.readouterr().out
    assert "mu_star=0.272626" in out and "p=0.767974" in out


def test_cli_simulate_trivial(capsys):
    argv = ["simulate", "--problem", "secretary", "--n", "1", "--k", "2", "--policy", "no-wait",
            "--trials", "10", "--seed", "1"]
    assert cli.main(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == HEADER
    assert lines[1].split(",")[6] == "1.0"


def test_cli_exit_codes(capsys):
    assert cli.main(["exact", "--n", "8", "--k", "2", "--max-orders", "100"]) == 2
    assert cli.main(["simulate", "--bogus"]) == 1
    assert "usage:" in capsys.readouterr().err
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["simulate", "--problem", "secretary", "--n", "0", "--trials", "5"]) == 1
    assert cli.main(["--help"]) == 0
    assert cli.main(["simulate", "--help"]) == 0
    assert "--first-arrivals-only" in capsys.readouterr().out


def test_cli_other_commands(tmp_path, capsys):
    assert cli.main(["table", "--n", "3"]) == 0
    assert "argmax f_value=1 prob=5/6" in capsys.readouterr().out
    assert cli.main(["matroid", "--kind", "graphic", "--vertices", "4", "--trials", "200", "--seed", "2"]) == 0
    assert "kind=graphic ground_size=6" in capsys.readouterr().out
    assert cli.main(["matroid", "--adversarial", "--m", "5", "--trials", "200", "--seed", "2"]) == 0
    assert "heavy_missing=" in capsys.readouterr().out
    trace = tmp_path / "trace.csv"
    assert cli.main(["matching", "--n", "6", "--trials", "20", "--seed", "2", "--trace", str(trace)]) == 0
    assert trace.read_text().splitlines()[0] == "round,event_item,occurrence,matching_size,matching_weight,added_edge"
    assert cli.main(["concentration", "--n", "100", "--trials", "1000", "--seed", "2"]) == 0
    assert "outside n/2 +- 8*sqrt(n)" in capsys.readouterr().out
    assert cli.main(["exact", "--n", "2", "--k", "2", "--golden-dir", str(tmp_path)]) == 0
    assert (tmp_path / "oracle_n2_k2_no-wait.txt").read_text().strip() == "5/6"
