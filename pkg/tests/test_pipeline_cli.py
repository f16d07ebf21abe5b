import json
from pathlib import Path

import pytest

from revaudit.cli import main
from revaudit.errors import StageError
from revaudit.pipeline import read_run_config, run_audit, write_plotdata
from synth import generate_corpus, write_gender_dictionary, write_run_config


@pytest.fixture(scope="module")
def audit_env(tmp_path_factory):
    """One synthetic corpus + completed audit shared by the read-only tests."""
    root = tmp_path_factory.mktemp("audit")
    paths, truth = generate_corpus(root / "dump", per_group_per_year=10,
                                   rate_na=0.5, rate_other=0.2, seed=42)
    gender = write_gender_dictionary(root / "gender.csv")
    out_dir = root / "out"
    config_path = write_run_config(root, paths, out_dir, gender_dictionary=gender, seed=7)
    config = read_run_config(config_path)
    bundle = run_audit(config)
    return {
        "root": root, "paths": paths, "truth": truth, "config_path": config_path,
        "config": config, "bundle": bundle, "out": out_dir,
    }


class TestRunConfig:
    def test_reads_file_values(self, audit_env):
        config = audit_env["config"]
        assert config.train_years == [2017, 2018, 2019, 2020, 2021]
        assert config.test_years == [2022]
        assert config.seed == 7

    def test_env_overrides_file(self, audit_env):
        config = read_run_config(audit_env["config_path"], env={"REVAUDIT_SEED": "99"})
        assert config.seed == 99

    def test_cli_overrides_beat_env(self, audit_env):
        config = read_run_config(audit_env["config_path"],
                                 env={"REVAUDIT_SEED": "99"}, overrides={"seed": 123})
        assert config.seed == 123

    def test_overlapping_splits_rejected(self, audit_env):
        with pytest.raises(ValueError):
            read_run_config(audit_env["config_path"], overrides={"test_years": "2020"})

    def test_unknown_feature_set_rejected(self, audit_env):
        with pytest.raises(ValueError):
            read_run_config(audit_env["config_path"], overrides={"feature_sets": "bogus"})


class TestAudit:
    def test_data_level_dp_equals_planted_gap(self, audit_env):
        bundle = audit_env["bundle"]
        truth = audit_env["truth"]
        report = bundle.data_reports["geography"]
        assert report.dp == pytest.approx(truth.planted_dp, abs=0)
        assert report.group_rates["dp"]["true"] == pytest.approx(truth.rate_na, abs=0)
        assert report.group_rates["dp"]["false"] == pytest.approx(truth.rate_other, abs=0)

    def test_separable_ratings_give_high_auc(self, audit_env):
        assert audit_env["bundle"].aucs["plus_rev"] >= 0.95
        assert audit_env["bundle"].aucs["all"] >= 0.95

    def test_report_files_exist(self, audit_env):
        out = audit_env["out"]
        for name in ["summary.csv", "linkage_stats.csv", "attributes.csv", "metrics.csv",
                     "disparities.csv", "disparities_full.csv", "cdf_disparities.csv",
                     "bundle.json", "manifest.json", "model_plus_rev.txt", "roc_base.csv",
                     "marginal_geography.csv"]:
            assert (out / name).exists(), name

    def test_bundle_fingerprint_recorded(self, audit_env):
        manifest = json.loads((audit_env["out"] / "manifest.json").read_text())
        assert manifest["fingerprint"] == audit_env["bundle"].fingerprint
        assert manifest["seed"] == 7

    def test_rerun_reuses_completed_outputs(self, audit_env):
        before = (audit_env["out"] / "bundle.json").stat().st_mtime_ns
        bundle = run_audit(audit_env["config"])
        after = (audit_env["out"] / "bundle.json").stat().st_mtime_ns
        assert before == after
        assert bundle.fingerprint == audit_env["bundle"].fingerprint
        assert bundle.aucs == audit_env["bundle"].aucs

    def test_identical_groups_have_zero_gaps(self, tmp_path):
        paths, _ = generate_corpus(tmp_path / "dump", per_group_per_year=10,
                                   rate_na=0.4, rate_other=0.4, seed=5)
        gender = write_gender_dictionary(tmp_path / "gender.csv")
        config_path = write_run_config(tmp_path, paths, tmp_path / "out",
                                       gender_dictionary=gender,
                                       feature_sets="base")
        bundle = run_audit(read_run_config(config_path))
        assert bundle.data_reports["geography"].dp == pytest.approx(0.0, abs=1e-12)

    def test_byte_identical_reruns(self, tmp_path):
        paths, _ = generate_corpus(tmp_path / "dump", per_group_per_year=5,
                                   rate_na=0.6, rate_other=0.2, seed=11)
        gender = write_gender_dictionary(tmp_path / "gender.csv")
        contents = {}
        for run in ("one", "two"):
            out_dir = tmp_path / f"out_{run}"
            config_path = write_run_config(tmp_path, paths, out_dir,
                                           gender_dictionary=gender, seed=3,
                                           feature_sets="base,plus_rev")
            run_audit(read_run_config(config_path))
            contents[run] = {
                p.name: p.read_bytes() for p in sorted(out_dir.rglob("*")) if p.is_file()
            }
        assert contents["one"].keys() == contents["two"].keys()
        for name in contents["one"]:
            assert contents["one"][name] == contents["two"][name], name

    def test_stage_error_names_stage_and_cleans_up(self, tmp_path):
        paths, _ = generate_corpus(tmp_path / "dump", per_group_per_year=5,
                                   rate_na=0.6, rate_other=0.2, seed=13)
        out_dir = tmp_path / "out"
        # train on a year with no submissions: the fit stage must fail
        config_path = write_run_config(tmp_path, paths, out_dir, train_years="2016",
                                       test_years="2022")
        with pytest.raises(StageError) as err:
            run_audit(read_run_config(config_path))
        assert err.value.stage == "fit"
        assert not (out_dir / "bundle.json").exists()
        assert not (out_dir / "summary.csv").exists()


class TestCli:
    def test_ingest_prints_ground_truth_counts(self, tmp_path, capsys):
        paths, truth = generate_corpus(tmp_path / "dump", per_group_per_year=5,
                                       rate_na=0.6, rate_other=0.2, seed=21)
        config_path = write_run_config(tmp_path, paths, tmp_path / "out")
        code = main(["ingest", "--config", str(config_path)])
        out = capsys.readouterr().out
        assert code == 0
        for year, count in truth.submissions_per_year.items():
            row = next(line for line in out.splitlines() if line.startswith(str(year)))
            assert int(row.split(",")[1]) == count

    def test_ingest_empty_corpus_exits_zero(self, tmp_path, capsys):
        dump = tmp_path / "dump"
        dump.mkdir()
        for name in ("submissions", "reviews", "authors", "profiles", "arxiv"):
            (dump / f"{name}.ndjson").write_text("", encoding="utf-8")
        (dump / "rankings.csv").write_text("institution,rank,source,year\n", encoding="utf-8")
        paths = {name: dump / f"{name}.ndjson"
                 for name in ("submissions", "reviews", "authors", "profiles", "arxiv")}
        paths["rankings"] = dump / "rankings.csv"
        config_path = write_run_config(tmp_path, paths, tmp_path / "out")
        assert main(["ingest", "--config", str(config_path)]) == 0

    def test_ingest_validation_failure_nonzero_with_report(self, tmp_path, capsys):
        paths, _ = generate_corpus(tmp_path / "dump", per_group_per_year=5,
                                   rate_na=0.6, rate_other=0.2, seed=23)
        with open(paths["reviews"], "a", encoding="utf-8") as handle:
            handle.write(json.dumps({"id": "bad", "submission_id": "ghost", "rating": 5,
                                     "confidence": 3, "text_len": 10}) + "\n")
        config_path = write_run_config(tmp_path, paths, tmp_path / "out")
        code = main(["ingest", "--config", str(config_path)])
        err = capsys.readouterr().err
        assert code == 1
        assert "errors.txt" in err
        assert (tmp_path / "out" / "errors.txt").exists()

    def test_audit_command_end_to_end(self, audit_env, tmp_path, capsys):
        out_dir = tmp_path / "cli_out"
        code = main(["audit", "--config", str(audit_env["config_path"]),
                     "--out", str(out_dir), "--feature-set", "base",
                     "--feature-set", "plus_rev"])
        out = capsys.readouterr().out
        assert code == 0
        assert "auc[plus_rev]" in out
        assert (out_dir / "disparities.csv").exists()

    def test_link_and_featurize_commands(self, audit_env, tmp_path, capsys):
        for command, marker in [("link", "scholar_map.csv"), ("featurize", "attributes.csv")]:
            out_dir = tmp_path / f"{command}_out"
            code = main([command, "--config", str(audit_env["config_path"]),
                         "--out", str(out_dir)])
            assert code == 0
            assert (out_dir / marker).exists()

    def test_featurize_exports_reloadable_matrices(self, audit_env, tmp_path, capsys):
        import numpy as np

        from revaudit.features.matrix import FeatureMatrix

        out_dir = tmp_path / "matrix_out"
        code = main(["featurize", "--config", str(audit_env["config_path"]),
                     "--out", str(out_dir), "--feature-set", "plus_rev"])
        assert code == 0
        target = out_dir / "features_plus_rev.csv"
        matrix = FeatureMatrix.from_csv(target, feature_set="plus_rev")
        reread = FeatureMatrix.from_csv(target, feature_set="plus_rev")
        assert np.array_equal(matrix.values, reread.values)
        assert "rating_avg" in matrix.columns
        assert len(matrix.ids) == audit_env["truth"].n_submissions

    def test_env_seed_override(self, audit_env, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("REVAUDIT_SEED", "55")
        out_dir = tmp_path / "env_out"
        code = main(["ingest", "--config", str(audit_env["config_path"]),
                     "--out", str(out_dir)])
        assert code == 0


class TestPlotdata:
    @pytest.mark.parametrize("figure,expect", [
        ("marginal", "plot_marginal_geography.csv"),
        ("cdf", "plot_cdf_geography_base.csv"),
        ("roc", "plot_roc_base.csv"),
        ("calibration", "plot_calibration_base.csv"),
    ])
    def test_each_figure_writes_files(self, audit_env, tmp_path, figure, expect):
        out = tmp_path / figure
        written = write_plotdata(audit_env["out"] / "bundle.json", figure, out)
        assert (out / expect) in written

    def test_roc_rows_are_monotone(self, audit_env, tmp_path):
        out = tmp_path / "roc"
        write_plotdata(audit_env["out"] / "bundle.json", "roc", out)
        lines = (out / "plot_roc_base.csv").read_text().splitlines()[1:]
        points = [tuple(map(float, line.split(","))) for line in lines]
        assert points[0] == (0.0, 0.0) and points[-1] == (1.0, 1.0)
        assert all(a[0] <= b[0] and a[1] <= b[1] for a, b in zip(points, points[1:]))

    def test_cdf_files_match_disparity_evaluation_points(self, audit_env, tmp_path):
        out = tmp_path / "cdf"
        write_plotdata(audit_env["out"] / "bundle.json", "cdf", out)
        bundle = audit_env["bundle"]
        lines = (out / "plot_cdf_geography_base.csv").read_text().splitlines()[1:]
        best = max(abs(float(a) - float(b))
                   for _, a, b in (line.split(",") for line in lines))
        assert best == pytest.approx(bundle.cdf_disparities["geography"]["base"], abs=1e-12)

    def test_unknown_figure_lists_valid_names(self, audit_env, tmp_path):
        with pytest.raises(ValueError) as err:
            write_plotdata(audit_env["out"] / "bundle.json", "sankey", tmp_path)
        for name in ("marginal", "cdf", "roc", "calibration"):
            assert name in str(err.value)

    def test_cli_plotdata(self, audit_env, tmp_path, capsys):
        code = main(["plotdata", "--bundle", str(audit_env["out"] / "bundle.json"),
                     "--figure", "roc", "--out", str(tmp_path / "p")])
        assert code == 0
        assert "plot_roc_base.csv" in capsys.readouterr().out

    def test_cli_plotdata_bad_figure(self, audit_env, tmp_path, capsys):
        code = main(["plotdata", "--bundle", str(audit_env["out"] / "bundle.json"),
                     "--figure", "pie", "--out", str(tmp_path / "p")])
        assert code == 1
