import io

import pytest

from crisp import (
    ParseError,
    bundled_token_stats,
    compression_rate,
    load_token_stats,
    table_averages,
    table_rel_size,
)
from crisp.stats import size_table, size_table_csv


def _doc_rows():
    return [(r.task, r.avg_candidate_tokens) for r in bundled_token_stats()]


def _query_rows():
    return [(r.task, r.avg_query_tokens) for r in bundled_token_stats()]


class TestRelSize:
    def test_long_documents(self):
        assert table_rel_size(206.68, 8) == pytest.approx(0.039, abs=1e-3)

    def test_uncapped_above_one(self):
        # k exceeding the average token count is reported as-is, not capped
        assert table_rel_size(14.75, 32) == pytest.approx(2.169, abs=1e-3)

    def test_long_queries(self):
        assert table_rel_size(255.48, 4) == pytest.approx(0.016, abs=1e-3)

    def test_monotone_decreasing_in_avg_tokens(self):
        values = [table_rel_size(a, 8) for a in (10.0, 20.0, 40.0, 80.0)]
        assert values == sorted(values, reverse=True)

    def test_linear_in_k(self):
        assert table_rel_size(50.0, 10) == pytest.approx(2 * table_rel_size(50.0, 5), rel=1e-15)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            table_rel_size(0.0, 4)
        with pytest.raises(ValueError):
            table_rel_size(10.0, 0)


class TestAverages:
    def test_doc_average_k8(self):
        assert table_averages(_doc_rows(), 8) == pytest.approx(0.091, abs=1e-3)

    def test_doc_average_k32_true_arithmetic(self):
        # unweighted mean of the per-task ratios; see the acceptance module
        # for the discrepancy against the published average row
        assert table_averages(_doc_rows(), 32) == pytest.approx(0.3628, abs=1e-3)

    def test_query_average_k4(self):
        assert table_averages(_query_rows(), 4) == pytest.approx(0.128, abs=1e-3)

    def test_query_average_k8(self):
        assert table_averages(_query_rows(), 8) == pytest.approx(0.256, abs=1e-3)

    def test_empty_rows_rejected(self):
        with pytest.raises(ValueError):
            table_averages([], 8)


class TestCompression:
    def test_three_x(self):
        assert compression_rate(0.349) == pytest.approx(2.87, abs=0.05)

    def test_eleven_x(self):
        assert compression_rate(0.091) == pytest.approx(10.99, abs=0.05)

    def test_queries(self):
        assert compression_rate(0.128) == pytest.approx(7.81, abs=0.05)

    def test_inverse_of_rel_size(self):
        assert compression_rate(table_rel_size(100.0, 25)) == 4.0
        for a, k in [(206.68, 8), (14.75, 32), (46.58, 4)]:
            assert compression_rate(table_rel_size(a, k)) == pytest.approx(a / k, rel=1e-14)


class TestTokenStatsFile:
    def test_bundled_file(self):
        rows = bundled_token_stats()
        assert len(rows) == 14
        assert rows[0].task == "arguana"
        assert rows[0].avg_candidate_tokens == 206.68
        assert rows[0].avg_query_tokens == 255.48

    def test_parse_skips_comments_and_blanks(self):
        rows = load_token_stats(io.StringIO("# header\n\ntask1 10.5 3.5\n"))
        assert len(rows) == 1
        assert rows[0].task == "task1"

    def test_rejects_malformed(self):
        with pytest.raises(ParseError, match="line 1"):
            load_token_stats(io.StringIO("task1 10.5\n"))
        with pytest.raises(ParseError, match="line 2"):
            load_token_stats(io.StringIO("task1 10.5 3.5\ntask2 x 3\n"))
        with pytest.raises(ParseError):
            load_token_stats(io.StringIO(""))
        with pytest.raises(ParseError, match="positive"):
            load_token_stats(io.StringIO("task1 0 3.5\n"))

    def test_text_table_alignment(self):
        rows = bundled_token_stats()
        table = size_table(rows, 32, 8)
        lines = table.splitlines()
        assert len(lines) == 1 + 14 + 2
        assert lines[0].split() == ["task", "doc_rel", "query_rel"]
        assert "average" in lines[-2]

    def test_csv_export(self):
        rows = load_token_stats(io.StringIO("t1 100 10\n"))
        csv = size_table_csv(rows, 25, 5)
        assert csv.splitlines()[1] == "t1,0.250000,0.500000"
