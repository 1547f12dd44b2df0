import json
import math
from pathlib import Path

import pytest

from fracheat import cli, experiments
from fracheat.config import EXPERIMENTS, admissible_time, parse_config
from fracheat.errors import ConfigError
from fracheat.kernel import FracParams

SUITE = Path(__file__).resolve().parents[1] / "suite"


def test_minimal_config_defaults():
    cfg = parse_config("experiment = rate\nparams.s = 0.5\n")
    assert cfg.dims == (1,)
    assert cfg.grid_points(1) == 4096
    assert cfg.times == [1, 2, 4, 8, 16, 32, 64]
    assert cfg.datum.kind == "shifted-kernel"
    assert cfg.slope_tol == 0.05
    assert parse_config("experiment = fokker-planck\nparams.s = 0.5\n").slope_tol == 0.07


def test_order_rejected_with_line():
    with pytest.raises(ConfigError, match=r"line 2: order out of \(0,1\]"):
        parse_config("experiment = rate\nparams.s = 1.5\n")


@pytest.mark.parametrize("text, pattern", [
    ("experiment = rate\nparams.s = 0.5\nbogus.key = 1\n", "line 3: unknown key"),
    ("experiment = rate\nparams.s = 0.5\nparams.s = 0.25\n", "line 3: key 'params.s' repeated"),
    ("experiment = rate\nparams.s\n", "line 2: expected 'key = value'"),
    ("experiment = nope\nparams.s = 0.5\n", "line 1: unknown experiment id"),
    ("experiment = rate\nparams.s = 0.5\ngrid.N = 7\n", "line 3: grid.N"),
    ("experiment = rate\nparams.s = 0.5\nladder.count = abc\n", "line 3: bad value"),
    ("params.s = 0.5\n", "missing required key 'experiment'"),
    ("experiment = rate\nparams.s = 0.5\ndatum.kind = cloud\n", "line 3: unknown datum kind"),
])
def test_diagnostics(text, pattern):
    with pytest.raises(ConfigError, match=pattern):
        parse_config(text)


def test_aliasing_budget_names_max_time():
    limit = admissible_time(FracParams(1, 0.5), 40.0, 0.1)
    assert limit == pytest.approx(0.1 * math.pi * 40 / 2)
    with pytest.raises(ConfigError, match=r"line 3: .*admits at most t=6\.28"):
        parse_config("experiment = cross-check\nparams.s = 0.5\ngrid.L = 40\n")


def test_comments_and_points():
    cfg = parse_config(
        "# header\nexperiment = rate  # trailing\nparams.n = 2\nparams.s = 0.5, 0.75\n"
        "datum.kind = point-masses\ndatum.locations = 1,0; -1,0\ndatum.masses = 1, 2\n")
    assert cfg.datum.locations == ((1.0, 0.0), (-1.0, 0.0))
    assert [p.s for p in cfg.params] == [0.5, 0.75]


def test_point_dimension_mismatch():
    with pytest.raises(ConfigError, match="dimension"):
        parse_config("experiment = rate\nparams.s = 0.5\ndatum.kind = point-masses\n"
                     "datum.locations = 1,0\ndatum.masses = 1\n")


def test_suite_covers_all_experiments_and_criteria():
    configs = [parse_config(p.read_text()) for p in sorted(SUITE.glob("*.cfg"))]
    assert {c.experiment for c in configs} == set(EXPERIMENTS)
    covered = {k for c in configs for k in experiments.CRITERIA[c.experiment]}
    assert covered == set(range(1, 15))


def test_output_root_priority(monkeypatch, tmp_path):
    cfg = parse_config(f"experiment = tail\nparams.s = 0.5\noutput.dir = {tmp_path / 'cfg'}\n")
    monkeypatch.setenv(experiments.OUTPUT_ENV, str(tmp_path / "env"))
    assert experiments.output_root("flag", cfg) == Path("flag")
    assert experiments.output_root(None, cfg) == tmp_path / "cfg"
    assert experiments.output_root(None, None) == tmp_path / "env"
    monkeypatch.delenv(experiments.OUTPUT_ENV)
    assert experiments.output_root(None) == Path(experiments.DEFAULT_OUTPUT)


def _files(run_dir):
    return {p.name: p.read_bytes() for p in sorted(run_dir.iterdir())}


def test_run_is_deterministic_and_complete(tmp_path):
    text = "experiment = counterexample\nparams.s = 0.5\n"
    cfg = parse_config(text)
    a = experiments.run_experiment(cfg, str(tmp_path))
    b = experiments.run_experiment(cfg, str(tmp_path))
    assert a != b
    fa, fb = _files(a), _files(b)
    csvs = [n for n in fa if n.endswith(".csv")]
    assert csvs and all(fa[n] == fb[n] for n in csvs)
    assert any(n.endswith(".svg") for n in fa)
    verdicts = json.loads(fa["verdicts.json"])["verdicts"]
    assert [v["criterion"] for v in verdicts] == [12]
    assert verdicts[0]["status"] == "PASS"
    assert fa["config.txt"].decode() == text


def test_kernel_profile_csv_matches_closed_form(tmp_path):
    import numpy as np

    from fracheat.kernel import explicit_profile
    run = experiments.run_experiment(
        parse_config("experiment = kernel-profile\nparams.s = 0.5\n"), str(tmp_path))
    data = np.loadtxt(run / "profile_n1_s0.5.csv", delimiter=",", skiprows=1)
    exact = explicit_profile(FracParams(1, 0.5))(data[:, 0])
    assert np.max(np.abs(data[:, 1] - exact)) <= 10 * 1e-8


def test_cli_run_exit_codes(tmp_path, capsys):
    good = tmp_path / "good.cfg"
    good.write_text("experiment = moments\nparams.s = 0.5, 0.75\n")
    assert cli.main(["run", str(good), "--out", str(tmp_path / "o")]) == 0
    assert "criterion  6: PASS" in capsys.readouterr().out
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = rate\nparams.s = 2\n")
    assert cli.main(["run", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err


def test_cli_failing_verdict_exit_one(tmp_path):
    # without s in {1/2, 1} the closed-form criterion has no oracle and fails
    cfg = tmp_path / "k.cfg"
    cfg.write_text("experiment = kernel-profile\nparams.s = 0.75\n")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path)]) == 1


def test_cli_experiment_error_context(tmp_path, capsys):
    cfg = tmp_path / "x.cfg"
    cfg.write_text("experiment = relative-error\nparams.s = 0.5\ndatum.kind = dipole\n")
    assert cli.main(["run", str(cfg), "--out", str(tmp_path)]) == 2
    assert "experiment relative-error" in capsys.readouterr().err


def test_cli_kernel(tmp_path, capsys):
    assert cli.main(["kernel", "--n", "1", "--s", "0.5", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "profile_n1_s0.5.csv").exists()
    assert (tmp_path / "profile_n1_s0.5.csv.meta").exists()
    assert cli.main(["kernel", "--n", "1", "--s", "1.5"]) == 2


def test_cli_env_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("FRACHEAT_OUT", str(tmp_path / "env"))
    cfg = tmp_path / "m.cfg"
    cfg.write_text("experiment = tail\nparams.s = 0.5\n")
    assert cli.main(["run", str(cfg)]) == 0
    assert len(list((tmp_path / "env").glob("tail-*"))) == 1


def test_cli_verify_all_empty(tmp_path):
    assert cli.main(["verify-all", str(tmp_path)]) == 2
