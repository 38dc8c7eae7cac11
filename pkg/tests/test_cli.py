import json

import pytest
from click.testing import CliRunner

from explaineval.cli import main
from explaineval.simulate import dirac_profile


@pytest.fixture
def runner():
    return CliRunner()


def write_profile(tmp_path, profile=None, name="profile.json"):
    path = tmp_path / name
    path.write_text(json.dumps(profile or dirac_profile()), encoding="utf-8")
    return path


def write_ratings(tmp_path):
    lines = ["userID,itemID,rating,physical,mood,location,weather"]
    for i in range(40):
        lines.append(
            f"u{i % 8},m{i % 10},{(i % 5) + 1},"
            f"{(i % 2) + 1},{(i % 3) + 1},{(i % 3) + 1},{(i % 5) + 1}"
        )
    path = tmp_path / "ratings.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestIngest:
    def test_prints_summary_counts(self, runner, tmp_path):
        path = write_ratings(tmp_path)
        result = runner.invoke(main, ["ingest", "--ratings", str(path)])
        assert result.exit_code == 0
        assert "8 users / 10 movies / 40 ratings" in result.output

    def test_empty_file_zero_counts(self, runner, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("userID,itemID,rating,weather\n", encoding="utf-8")
        result = runner.invoke(main, ["ingest", "--ratings", str(path)])
        assert result.exit_code == 0
        assert "0 users / 0 movies / 0 ratings" in result.output

    def test_bad_path_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main, ["ingest", "--ratings", str(tmp_path / "nope.csv")]
        )
        assert result.exit_code == 2

    def test_diagnostics_reported(self, runner, tmp_path):
        lines = ["userID,itemID,rating,weather"]
        lines += [f"u{i},m{i},4,1" for i in range(20)]
        lines += ["ux,mx,7,1"]
        path = tmp_path / "r.csv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        result = runner.invoke(main, ["ingest", "--ratings", str(path)])
        assert result.exit_code == 0
        assert "rejected rows: 1" in result.output
        assert "line 22" in result.output


class TestSimulate:
    def test_zero_sessions_empty_log(self, runner, tmp_path):
        profile = write_profile(tmp_path)
        out = tmp_path / "log.ndjson"
        result = runner.invoke(
            main,
            ["simulate", "--sessions", "0", "--seed", "1",
             "--profile", str(profile), "--out", str(out)],
        )
        assert result.exit_code == 0
        assert out.exists()
        assert out.read_text(encoding="utf-8") == ""

    def test_same_seed_identical_logs(self, runner, tmp_path):
        profile = write_profile(tmp_path)
        out1 = tmp_path / "a.ndjson"
        out2 = tmp_path / "b.ndjson"
        for out in (out1, out2):
            result = runner.invoke(
                main,
                ["simulate", "--sessions", "3", "--seed", "9",
                 "--profile", str(profile), "--out", str(out)],
            )
            assert result.exit_code == 0, result.output
        assert out1.read_bytes() == out2.read_bytes()

    def test_different_seeds_differ(self, runner, tmp_path):
        profile = write_profile(tmp_path)
        out1 = tmp_path / "a.ndjson"
        out2 = tmp_path / "b.ndjson"
        runner.invoke(main, ["simulate", "--sessions", "2", "--seed", "1",
                             "--profile", str(profile), "--out", str(out1)])
        runner.invoke(main, ["simulate", "--sessions", "2", "--seed", "2",
                             "--profile", str(profile), "--out", str(out2)])
        assert out1.read_bytes() != out2.read_bytes()

    def test_invalid_profile_exits_2(self, runner, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"likert": {"*": {"*": {"4": 0.5}}}}', encoding="utf-8")
        result = runner.invoke(
            main,
            ["simulate", "--sessions", "1", "--profile", str(path),
             "--out", str(tmp_path / "x.ndjson")],
        )
        assert result.exit_code == 2
        assert "profile error" in result.output

    def test_simulate_against_ingested_dataset(self, runner, tmp_path):
        ratings = write_ratings(tmp_path)
        profile = write_profile(tmp_path)
        out = tmp_path / "log.ndjson"
        result = runner.invoke(
            main,
            ["simulate", "--sessions", "1", "--seed", "3",
             "--profile", str(profile), "--out", str(out),
             "--ratings", str(ratings)],
        )
        # 10 catalog movies cannot seed a 12-movie session.
        assert result.exit_code != 0


class TestAnalyze:
    @pytest.fixture
    def dirac_log(self, runner, tmp_path):
        profile = write_profile(tmp_path)
        out = tmp_path / "log.ndjson"
        result = runner.invoke(
            main,
            ["simulate", "--sessions", "4", "--seed", "5",
             "--profile", str(profile), "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        return out

    def test_table_4_dirac_cells(self, runner, dirac_log):
        result = runner.invoke(
            main,
            ["analyze", "--log", str(dirac_log), "--table", "4",
             "--format", "json"],
        )
        assert result.exit_code == 0, result.output
        doc = json.loads(result.output)
        for row in doc["rows"].values():
            for value in row.values():
                assert value == 4.0

    def test_table_3_dirac_values(self, runner, dirac_log):
        result = runner.invoke(
            main,
            ["analyze", "--log", str(dirac_log), "--table", "3",
             "--format", "json"],
        )
        doc = json.loads(result.output)
        for row in doc["rows"].values():
            assert row["mean_time_s"] == 5.0
            assert row["mean_diff"] == 0.0

    def test_table_6_dirac_one_hot(self, runner, dirac_log):
        result = runner.invoke(
            main,
            ["analyze", "--log", str(dirac_log), "--table", "6",
             "--format", "json"],
        )
        doc = json.loads(result.output)
        for row in doc["rows"].values():
            assert row["appraisal"] == [0.0, 0.0, 0.0, 1.0, 0.0]
            assert row["grade"] == "Good"

    def test_table_6_one_hot_weights_select_trust_row(self, runner, tmp_path):
        profile = dirac_profile()
        profile["likert"]["*"]["Trust"] = {"2": 1.0}
        profile_path = write_profile(tmp_path, profile, name="trusty.json")
        log = tmp_path / "log.ndjson"
        result = runner.invoke(
            main,
            ["simulate", "--sessions", "2", "--seed", "5",
             "--profile", str(profile_path), "--out", str(log)],
        )
        assert result.exit_code == 0, result.output
        weights = tmp_path / "weights.json"
        weights.write_text(
            json.dumps({m: (1.0 if m == "Trust" else 0.0) for m in (
                "Efficiency", "Effectiveness", "Persuasiveness",
                "Satisfaction", "Trust", "Transparency")}),
            encoding="utf-8",
        )
        result = runner.invoke(
            main,
            ["analyze", "--log", str(log), "--table", "6",
             "--weights", str(weights), "--format", "json"],
        )
        doc = json.loads(result.output)
        for row in doc["rows"].values():
            assert row["appraisal"] == [0.0, 1.0, 0.0, 0.0, 0.0]
            assert row["grade"] == "Poor"

    def test_table_5_renders_on_varied_cohort(self, runner, tmp_path):
        profile = {
            "seed_scores": {"3": 1.0},
            "likert": {"*": {"*": {"1": 0.2, "2": 0.2, "3": 0.2, "4": 0.2,
                                   "5": 0.2}}},
            "trials": {"*": {"diff": {"-1": 0.3, "0": 0.4, "1": 0.3},
                             "t_ms": {"2000": 0.5, "9000": 0.5}}},
        }
        profile_path = write_profile(tmp_path, profile, name="varied.json")
        log = tmp_path / "log.ndjson"
        result = runner.invoke(
            main,
            ["simulate", "--sessions", "10", "--seed", "8",
             "--profile", str(profile_path), "--out", str(log)],
        )
        assert result.exit_code == 0, result.output
        result = runner.invoke(
            main,
            ["analyze", "--log", str(log), "--table", "5",
             "--style", "Context-aware", "--format", "text"],
        )
        assert result.exit_code == 0, result.output
        assert "Spearman" in result.output

    def test_empty_log_exits_3(self, runner, tmp_path):
        log = tmp_path / "empty.ndjson"
        log.write_text("", encoding="utf-8")
        result = runner.invoke(
            main, ["analyze", "--log", str(log), "--table", "4"]
        )
        assert result.exit_code == 3

    def test_missing_log_exits_2(self, runner, tmp_path):
        result = runner.invoke(
            main, ["analyze", "--log", str(tmp_path / "none.ndjson"),
                   "--table", "4"]
        )
        assert result.exit_code == 2

    def test_text_table_headers(self, runner, dirac_log):
        for table, fragment in (
            ("3", "Table 3"), ("4", "Table 4"), ("6", "Table 6"),
        ):
            result = runner.invoke(
                main, ["analyze", "--log", str(dirac_log), "--table", table]
            )
            assert result.exit_code == 0
            assert fragment in result.output
