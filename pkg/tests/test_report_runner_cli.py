import json

import pytest

from mixhit.applib.errors import ConfigError
from mixhit.applib.helpers import load_json, read_csv
from mixhit.applib.models.lab import ExperimentResult, RunManifest
from mixhit.applib.models.results import EquivalenceReport
from mixhit.applib.types import ExperimentName, ReportFormat
from mixhit.cli import EXIT_AUDIT, EXIT_CONFIG, EXIT_EXPERIMENT_FAILED, EXIT_OK, main
from mixhit.lab import experiments
from mixhit.lab.report import MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE, load_results
from mixhit.lab.runner import parse_experiment_config, run_experiment

SWEEP_TOML = """
[seeds]
seed = 7

[chains]
zoo = ["flip", "cycle(5)", "lazy_uniform(3)"]

[[experiments]]
name = "equivalence-sweep"
alphas = [0.25]
"""

ODD_CYCLES_TOML = """
[chains]
zoo = ["cycle(3)", "cycle(5)", "cycle(7)", "cycle(9)", "cycle(11)", "cycle(13)", "cycle(15)"]
max_states = 16

[[experiments]]
name = "equivalence-sweep"
"""


@pytest.fixture
def sweep_config(tmp_path):
    path = tmp_path / "sweep.toml"
    path.write_text(SWEEP_TOML)
    return path


def _fake_result(name, audit_failures=0):
    def experiment(section, chains, rng, ctx):
        return ExperimentResult(name=name, index=ctx.index, audit_failures=audit_failures)

    return experiment


def _boom(section, chains, rng, ctx):
    raise RuntimeError("experiment exploded")


# === config parsing ===

def test_malformed_toml_names_the_line():
    with pytest.raises(ConfigError, match="line"):
        parse_experiment_config(b"[seeds]\nseed = = 3\n", "bad.toml")


def test_unknown_field_names_its_path():
    raw = b'[[experiments]]\nname = "equivalence-sweep"\nalpha = 0.3\n'
    with pytest.raises(ConfigError, match=r"experiments\.0\.alpha"):
        parse_experiment_config(raw)


def test_unknown_experiment_name_is_rejected():
    with pytest.raises(ConfigError):
        parse_experiment_config(b'[[experiments]]\nname = "no-such-thing"\n')


def test_defaults_fill_missing_sections():
    cfg = parse_experiment_config(b"")
    assert cfg.seeds.seed == 0
    assert cfg.chains.zoo == []
    assert cfg.experiments == []


def test_missing_config_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(tmp_path / "absent.toml", tmp_path / "out")


# === runner ===

def test_empty_experiment_list_writes_a_manifest_with_no_outputs(tmp_path):
    path = tmp_path / "empty.toml"
    path.write_text("[seeds]\nseed = 3\n")
    manifest = run_experiment(path, tmp_path / "out")
    assert manifest.outputs == []
    assert manifest.seed == 3
    stored = RunManifest.model_validate(load_json(tmp_path / "out" / MANIFEST_FILE))
    assert stored.outputs == []
    assert (tmp_path / "out" / SUMMARY_FILE).exists()
    assert main(["run", str(path), "--out", str(tmp_path / "again")]) == EXIT_OK


def test_same_config_and_seed_give_identical_csv(sweep_config, tmp_path):
    run_experiment(sweep_config, tmp_path / "a", seed=11)
    run_experiment(sweep_config, tmp_path / "b", seed=11)
    csvs = sorted(p.name for p in (tmp_path / "a").glob("*.csv"))
    assert csvs
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_manifest_records_hash_seed_and_files(sweep_config, tmp_path):
    manifest = run_experiment(sweep_config, tmp_path / "out", seed=11)
    assert manifest.seed == 11
    assert len(manifest.config_hash) == 64
    (output,) = manifest.outputs
    assert output.ok and output.name is ExperimentName.EQUIVALENCE_SWEEP
    for name in output.files:
        assert (tmp_path / "out" / name).exists()
    assert (tmp_path / "out" / RESULTS_FILE).exists()


def test_seed_defaults_to_the_config_seed(sweep_config, tmp_path):
    assert run_experiment(sweep_config, tmp_path / "out").seed == 7


def test_equivalence_csv_header_and_json_round_trip(sweep_config, tmp_path):
    out = tmp_path / "out"
    run_experiment(sweep_config, out)
    header = (out / "01-equivalence-sweep-equivalence.csv").read_text().splitlines()[0]
    assert header.split(",") == list(EquivalenceReport.CSV_COLUMNS)
    rows = read_csv(out / "01-equivalence-sweep-equivalence.csv")
    assert [r["chain_id"] for r in rows] == ["flip", "cycle(5)", "lazy_uniform(3)"]

    stored = ExperimentResult.model_validate(load_json(out / "01-equivalence-sweep.json"))
    assert stored.name is ExperimentName.EQUIVALENCE_SWEEP
    assert len(stored.tables["equivalence"].rows) == 3


def test_ratio_vs_n_over_odd_cycles(tmp_path):
    path = tmp_path / "cycles.toml"
    path.write_text(ODD_CYCLES_TOML)
    run_experiment(path, tmp_path / "out")
    points = read_csv(tmp_path / "out" / "01-equivalence-sweep-ratio_vs_n.plot.csv")
    assert len(points) == 7
    xs = [float(p["x"]) for p in points]
    assert xs == sorted(xs) == [3.0, 5.0, 7.0, 9.0, 11.0, 13.0, 15.0]
    assert all(float(p["y"]) > 0 for p in points)


def test_periodic_chain_has_no_ratio_point(tmp_path):
    path = tmp_path / "flip.toml"
    path.write_text('[chains]\nzoo = ["flip", "cycle(6)", "cycle(7)"]\n[[experiments]]\nname = "equivalence-sweep"\n')
    run_experiment(path, tmp_path / "out")
    points = read_csv(tmp_path / "out" / "01-equivalence-sweep-ratio_vs_n.plot.csv")
    assert [float(p["x"]) for p in points] == [7.0]


def test_failing_experiment_keeps_the_others(monkeypatch, tmp_path):
    monkeypatch.setitem(experiments.EXPERIMENTS, ExperimentName.ASF_STUDY, _boom)
    path = tmp_path / "mixed.toml"
    path.write_text(SWEEP_TOML + '\n[[experiments]]\nname = "asf-study"\n')
    manifest = run_experiment(path, tmp_path / "out")
    sweep, asf = manifest.outputs
    assert sweep.ok and sweep.files
    assert not asf.ok
    assert asf.error == "RuntimeError: experiment exploded"
    assert [r.name for r in load_results(tmp_path / "out")] == [ExperimentName.EQUIVALENCE_SWEEP]

    assert main(["run", str(path), "--out", str(tmp_path / "cli")]) == EXIT_EXPERIMENT_FAILED


def test_audit_failure_exits_with_three(monkeypatch, tmp_path):
    monkeypatch.setitem(
        experiments.EXPERIMENTS,
        ExperimentName.INEQUALITY_AUDIT,
        _fake_result(ExperimentName.INEQUALITY_AUDIT, audit_failures=2),
    )
    path = tmp_path / "audit.toml"
    path.write_text('[chains]\nzoo = ["flip"]\n[[experiments]]\nname = "inequality-audit"\n')
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == EXIT_AUDIT
    manifest = RunManifest.model_validate(load_json(tmp_path / "out" / MANIFEST_FILE))
    assert manifest.audit_failed


def test_audit_count_ignored_for_non_auditing_experiments(monkeypatch, tmp_path):
    monkeypatch.setitem(
        experiments.EXPERIMENTS,
        ExperimentName.ASF_STUDY,
        _fake_result(ExperimentName.ASF_STUDY, audit_failures=5),
    )
    path = tmp_path / "asf.toml"
    path.write_text('[chains]\nzoo = ["flip"]\n[[experiments]]\nname = "asf-study"\n')
    assert main(["run", str(path), "--out", str(tmp_path / "out")]) == EXIT_OK


# === report ===

def test_report_re_emits_plot_data(sweep_config, tmp_path):
    run_experiment(sweep_config, tmp_path / "run", formats=(ReportFormat.JSON,))
    assert not list((tmp_path / "run").glob("*.plot.csv"))
    code = main(["report", str(tmp_path / "run"), "--format", "plotdata", "--out", str(tmp_path / "plots")])
    assert code == EXIT_OK
    assert (tmp_path / "plots" / "01-equivalence-sweep-ratio_vs_n.plot.csv").exists()


def test_report_on_a_non_run_directory_is_an_input_error(tmp_path):
    assert main(["report", str(tmp_path)]) == EXIT_CONFIG


# === analyze / zoo ===

def test_zoo_build_then_analyze(tmp_path, capsys):
    kernel_path = tmp_path / "bd.txt"
    assert main(["zoo", "build", "birth_death(1,2,1)", "--out", str(kernel_path)]) == EXIT_OK
    capsys.readouterr()
    assert main(["analyze", str(kernel_path), "--alpha", "0.25"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split(",") == list(EquivalenceReport.CSV_COLUMNS)
    assert len(lines) == 2


def test_analyze_json_has_one_report_per_alpha(tmp_path, capsys):
    kernel_path = tmp_path / "cycle.json"
    assert main(["zoo", "build", "cycle(5)", "--out", str(kernel_path)]) == EXIT_OK
    capsys.readouterr()
    assert main(["analyze", str(kernel_path), "--alpha", "0.2", "--alpha", "0.4", "--json"]) == EXIT_OK
    reports = json.loads(capsys.readouterr().out)
    assert [r["alpha"] for r in reports] == [0.2, 0.4]


def test_zoo_list_prints_ids_and_sizes(capsys):
    assert main(["zoo", "list"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert "flip\t2" in lines


def test_zoo_build_rejects_a_bad_spec():
    assert main(["zoo", "build", "cycle(2)"]) == EXIT_CONFIG


def test_analyze_missing_kernel_file(tmp_path):
    assert main(["analyze", str(tmp_path / "nope.txt")]) == EXIT_CONFIG


def test_analyze_malformed_kernel_file(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("2\n0.5 0.5\n0.7 0.7\n")
    assert main(["analyze", str(bad)]) == EXIT_CONFIG
