import pytest

from explaineval.domain import STUDY_FACTORS
from explaineval.ingest import (
    Dataset,
    IngestError,
    dataset_stats,
    export_dataset,
    load_dataset,
    load_export,
)

HEADER = "userID,itemID,rating,physical,mood,location,weather"


def write(path, lines, delim=","):
    text = "\n".join(line.replace(",", delim) for line in lines)
    path.write_text(text + "\n", encoding="utf-8")
    return path


@pytest.fixture
def basic_file(tmp_path):
    return write(
        tmp_path / "ratings.csv",
        [
            HEADER,
            "u1,m1,4,1,1,1,1",
            "u1,m2,3,2,2,2,2",
            "u2,m1,5,1,3,3,5",
        ],
    )


class TestLoadDataset:
    def test_basic_counts(self, basic_file):
        ds = load_dataset(basic_file)
        assert ds.n_users == 2
        assert ds.n_movies == 2
        assert ds.n_ratings == 3
        assert not ds.diagnostics

    def test_numeric_codes_map_to_vocabulary(self, basic_file):
        ds = load_dataset(basic_file)
        first = ds.ratings[0].situation
        assert first.get("PhysicalWellness") == "healthy"
        assert first.get("Mood") == "positive"
        assert first.get("Location") == "home"
        assert first.get("Weather") == "sunny"

    def test_factor_schema_covers_study_factors(self, basic_file):
        ds = load_dataset(basic_file)
        assert {f.factor_id for f in ds.factors} == set(STUDY_FACTORS)

    def test_sentinel_marks_factor_absent(self, tmp_path):
        path = write(
            tmp_path / "r.csv",
            [HEADER, "u1,m1,4,-1,1,1,1", "u2,m1,3,1,-1,2,2"],
        )
        ds = load_dataset(path)
        assert ds.n_ratings == 2
        assert ds.ratings[0].situation.get("PhysicalWellness") is None
        assert ds.ratings[1].situation.get("Mood") is None

    def test_out_of_range_score_rejected_with_line_number(self, tmp_path):
        path = write(
            tmp_path / "r.csv",
            [
                HEADER,
                "u1,m1,4,1,1,1,1",
                "u1,m2,9,1,1,1,1",
            ] + [f"u2,m{i},3,1,1,1,1" for i in range(9)],
        )
        ds = load_dataset(path)
        assert ds.n_ratings == 10
        assert len(ds.diagnostics) == 1
        assert ds.diagnostics[0].line_no == 3
        assert "9" in ds.diagnostics[0].reason

    def test_three_row_fixture_one_rejection(self, tmp_path):
        # A single bad row is tolerated even in a tiny file.
        path = write(
            tmp_path / "r.csv",
            [HEADER, "u1,m1,4,1,1,1,1", "u1,m2,9,1,1,1,1", "u2,m1,2,1,1,1,1"],
        )
        ds = load_dataset(path)
        assert ds.n_ratings == 2
        assert len(ds.diagnostics) == 1
        assert ds.diagnostics[0].line_no == 3

    def test_systematically_bad_file_hard_fails(self, tmp_path):
        rows = [HEADER] + [f"u1,m{i},4,1,1,1,1" for i in range(8)]
        rows += ["u2,m1,9,1,1,1,1", "u2,m2,0,1,1,1,1"]
        with pytest.raises(IngestError, match="rejected"):
            load_dataset(write(tmp_path / "r.csv", rows))

    def test_header_only_file(self, tmp_path):
        path = write(tmp_path / "r.csv", [HEADER])
        ds = load_dataset(path)
        assert ds.n_ratings == 0
        assert ds.n_users == 0

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError, match="not found"):
            load_dataset(tmp_path / "absent.csv")

    def test_malformed_header(self, tmp_path):
        path = write(tmp_path / "r.csv", ["userID,itemID,score", "u1,m1,4"])
        with pytest.raises(IngestError, match="rating"):
            load_dataset(path)

    @pytest.mark.parametrize("delim", [",", ";", "\t"])
    def test_delimiter_autodetection(self, tmp_path, delim):
        path = write(
            tmp_path / "r.txt", [HEADER, "u1,m1,4,1,1,1,1"], delim=delim
        )
        ds = load_dataset(path)
        assert ds.n_ratings == 1

    def test_unknown_condition_name_rejected(self, tmp_path):
        path = write(
            tmp_path / "r.csv",
            [HEADER] + [f"u1,m{i},4,1,1,1,1" for i in range(10)]
            + ["u2,m1,4,1,1,1,hailstorm"],
        )
        ds = load_dataset(path)
        assert len(ds.diagnostics) == 1
        assert "hailstorm" in ds.diagnostics[0].reason

    def test_condition_names_accepted_directly(self, tmp_path):
        path = write(
            tmp_path / "r.csv",
            [HEADER, "u1,m1,4,healthy,positive,home,sunny"],
        )
        ds = load_dataset(path)
        assert ds.ratings[0].situation.get("Weather") == "sunny"

    def test_schema_file_overrides_defaults(self, tmp_path):
        schema = tmp_path / "schema.txt"
        schema.write_text(
            "Weather: dry, wet\nPhysicalWellness: healthy, ill\n"
            "Mood: positive, neutral, negative\nLocation: home, public\n",
            encoding="utf-8",
        )
        path = write(tmp_path / "r.csv", [HEADER, "u1,m1,4,1,1,1,2"])
        ds = load_dataset(path, schema_path=schema)
        assert ds.ratings[0].situation.get("Weather") == "wet"
        assert ds.factor("Weather").vocabulary == ("dry", "wet")

    def test_column_mapping_document(self, tmp_path):
        mapping = tmp_path / "columns.txt"
        mapping.write_text("user = uid\nitem = mid\nrating = stars\n",
                           encoding="utf-8")
        path = write(
            tmp_path / "r.csv",
            ["uid,mid,stars,weather", "u1,m1,4,1"],
        )
        ds = load_dataset(path, column_map=mapping)
        assert ds.n_ratings == 1
        assert ds.ratings[0].situation.get("Weather") == "sunny"

    def test_pass_through_factor_vocabulary_observed(self, tmp_path):
        path = write(
            tmp_path / "r.csv",
            ["userID,itemID,rating,daytype", "u1,m1,4,weekend", "u2,m2,3,workday"],
        )
        ds = load_dataset(path)
        assert set(ds.factor("daytype").vocabulary) == {"weekend", "workday"}

    def test_separate_catalog_file(self, tmp_path):
        catalog = write(
            tmp_path / "movies.csv",
            [
                "movieID,title,director,actors,genres,year",
                "m1,First Film,Someone,A|B,drama|comedy,1999",
            ],
        )
        path = write(
            tmp_path / "r.csv",
            ["userID,itemID,rating,weather"]
            + [f"u{i},m1,4,1" for i in range(10)]
            + ["u99,m404,4,1"],
        )
        ds = load_dataset(path, catalog_path=catalog)
        assert ds.movies["m1"].title == "First Film"
        assert ds.movies["m1"].actors == ("A", "B")
        assert ds.n_ratings == 10
        assert any("m404" in d.reason for d in ds.diagnostics)

    def test_embedded_catalog_first_occurrence_wins(self, tmp_path):
        path = write(
            tmp_path / "r.csv",
            [
                "userID,itemID,rating,title,weather",
                "u1,m1,4,Original Title,1",
                "u2,m1,3,Conflicting Title,2",
            ],
        )
        ds = load_dataset(path)
        assert ds.movies["m1"].title == "Original Title"

    def test_every_situation_validates_against_schema(self, basic_file):
        ds = load_dataset(basic_file)
        for rating in ds.ratings:
            rating.situation.validate_against(ds.factors)


class TestFullScaleFixture:
    def test_reference_scale_counts(self, tmp_path):
        # A file shaped like the reference corpus: 121 users, 1197 movies,
        # 2296 ratings across the four study factors.
        rows = [HEADER]
        for i in range(2296):
            rows.append(
                f"u{i % 121:03d},m{i % 1197:04d},{(i % 5) + 1},"
                f"{(i % 2) + 1},{(i % 3) + 1},{(i % 3) + 1},{(i % 5) + 1}"
            )
        path = write(tmp_path / "full.csv", rows)
        ds = load_dataset(path)
        assert ds.n_users == 121
        assert ds.n_movies == 1197
        assert ds.n_ratings == 2296
        stats = dataset_stats(ds)
        assert stats.ratings_per_user == pytest.approx(2296 / 121)
        assert stats.movies_per_user <= stats.ratings_per_user


class TestStats:
    def test_empty_dataset_all_zeros(self, tmp_path):
        ds = load_dataset(write(tmp_path / "r.csv", [HEADER]))
        stats = dataset_stats(ds)
        assert (stats.n_users, stats.n_ratings) == (0, 0)
        assert stats.ratings_per_user == 0.0
        assert stats.movies_per_user == 0.0

    def test_two_users_three_ratings_each(self, tmp_path):
        rows = [HEADER]
        for u in ("u1", "u2"):
            for m in ("m1", "m2", "m3"):
                rows.append(f"{u},{m},4,1,1,1,1")
        ds = load_dataset(write(tmp_path / "r.csv", rows))
        stats = dataset_stats(ds)
        assert stats.ratings_per_user == 3.0
        assert stats.movies_per_user == 3.0


class TestRoundTrip:
    def test_load_export_load_preserves_equality(self, basic_file, tmp_path):
        ds = load_dataset(basic_file)
        out = tmp_path / "export.ndjson"
        export_dataset(ds, out)
        again = load_export(out)
        assert again == ds

    def test_round_trip_with_sentinels_and_catalog(self, tmp_path):
        path = write(
            tmp_path / "r.csv",
            [
                "userID,itemID,rating,title,director,actors,genres,year,weather",
                "u1,m1,4,Some Film,D,A|B,drama,2001,1",
                "u2,m1,2,Some Film,D,A|B,drama,2001,-1",
            ],
        )
        ds = load_dataset(path)
        out = tmp_path / "export.ndjson"
        export_dataset(ds, out)
        assert load_export(out) == ds

    def test_subset_view(self, basic_file):
        ds = load_dataset(basic_file)
        sub = ds.with_ratings(ds.ratings[:1])
        assert sub.n_ratings == 1
        assert sub.users == frozenset({"u1"})
        assert sub.movies is ds.movies

    def test_extend_rejects_unknown_movie(self, basic_file):
        ds = load_dataset(basic_file)
        bad = ds.ratings[0]
        with pytest.raises(ValueError):
            ds.extended([type(bad)(
                user_id="x", movie_id="missing", score=3,
                situation=bad.situation,
            )])
