import pytest

from scorefeat.postprocess import MergeGroup, ProcessError, ProcessorConfig, merge_statistics, process
from scorefeat.table import FeatureTable


def table(columns, rows):
    return FeatureTable(columns=list(columns), rows=[list(r) for r in rows])


class TestMergeStatistics:
    def test_mean_and_population_std(self):
        out = merge_statistics([8, 4], ["mean", "std"])
        assert out == {"mean": 6.0, "std": 2.0}

    def test_single_element_std_zero(self):
        assert merge_statistics([5], ["std"]) == {"std": 0.0}

    def test_empty_is_missing(self):
        assert merge_statistics([], ["mean", "sum"]) == {"mean": None, "sum": None}

    def test_missing_values_skipped(self):
        assert merge_statistics([8, None, 4], ["mean"])["mean"] == 6.0

    def test_min_max_sum(self):
        out = merge_statistics([3, 1, 2], ["min", "max", "sum"])
        assert out == {"min": 1, "max": 3, "sum": 6}


class TestProcess:
    def test_merge_example(self):
        t = table(
            ["FileName", "PartViolinI_NumNotes", "PartViolinII_NumNotes"],
            [["a", 8, 4]],
        )
        config = ProcessorConfig(
            merge_groups=[MergeGroup(pattern=r"PartViolin.*_NumNotes",
                                     target="FamilyStringsViolin_NumNotes",
                                     stats=("mean", "std"))]
        )
        out = process(t, config)
        row = out.row_mapping(0)
        assert row["FamilyStringsViolin_NumNotes_Mean"] == 6.0
        assert row["FamilyStringsViolin_NumNotes_Std"] == 2.0
        assert "PartViolinI_NumNotes" not in out.columns

    def test_keep_raw_after_merge(self):
        t = table(["A_1", "A_2"], [[1, 3]])
        config = ProcessorConfig(
            merge_groups=[MergeGroup(pattern=r"A_\d", target="A", stats=("mean",))],
            keep_raw_after_merge=True,
        )
        out = process(t, config)
        assert set(out.columns) == {"A_1", "A_2", "A_Mean"}

    def test_replace_missing_with_zero(self):
        t = table(["FileName", "X"], [["a", None], ["b", 3]])
        out = process(t, ProcessorConfig(replace_missing_with_zero=["X"]))
        assert out.column("X") == [0, 3]

    def test_empty_config_identity_modulo_all_missing(self):
        t = table(["FileName", "X", "Dead"], [["a", 1, None], ["b", 2, None]])
        out = process(t, ProcessorConfig())
        assert out.columns == ["FileName", "X"]
        assert out.column("X") == [1, 2]
        again = process(out, ProcessorConfig())
        assert again.columns == out.columns and again.rows == out.rows

    def test_row_count_never_changes(self):
        t = table(["FileName", "X"], [["a", 1], ["b", None], ["c", 3]])
        out = process(t, ProcessorConfig(replace_missing_with_zero=[".*"],
                                         drop_columns=["X"]))
        assert len(out.rows) == 3

    def test_identity_columns_protected_from_drop(self):
        t = table(["FileName", "WindowStart", "X"], [["a", 1, 2]])
        out = process(t, ProcessorConfig(drop_columns=[".*"]))
        assert out.columns == ["FileName", "WindowStart"]

    def test_merge_non_numeric_errors(self):
        t = table(["Text_A"], [["hello"]])
        config = ProcessorConfig(
            merge_groups=[MergeGroup(pattern="Text_.*", target="T", stats=("mean",))]
        )
        with pytest.raises(ProcessError, match="Text_A"):
            process(t, config)

    def test_zero_match_pattern_warns_not_errors(self):
        t = table(["X"], [[1]])
        out = process(t, ProcessorConfig(drop_columns=["Nothing.*"]))
        assert out.columns == ["X"]

    def test_patterns_are_anchored(self):
        t = table(["X", "XY"], [[1, 2]])
        out = process(t, ProcessorConfig(drop_columns=["X"]))
        assert out.columns == ["XY"]

    def test_column_order_originals_then_merged(self):
        t = table(["B", "A_1", "A_2", "C"], [[1, 2, 4, 3]])
        config = ProcessorConfig(
            merge_groups=[MergeGroup(pattern=r"A_\d", target="A", stats=("mean",))]
        )
        out = process(t, config)
        assert out.columns == ["B", "C", "A_Mean"]

    def test_full_replace_leaves_no_missing(self):
        t = table(["FileName", "X", "Y", "Z"],
                  [["a", None, 1, None], ["b", 2, None, None]])
        out = process(t, ProcessorConfig(replace_missing_with_zero=[".*"]))
        assert all(cell is not None for row in out.rows for cell in row)

    def test_invalid_stats_rejected(self):
        with pytest.raises(ProcessError):
            MergeGroup(pattern="X", target="T", stats=("median",))
        with pytest.raises(ProcessError):
            MergeGroup(pattern="X", target="T", stats=())
