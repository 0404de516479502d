"""Formulation size accounting: grid lattice vs terminal-augmented flow graph."""

import numpy as np
import pytest

from gridseg import (
    CSV_HEADER,
    InvalidParameterError,
    compare_report,
    stats_for,
    synthetic_grid,
)


class TestStatsFor:
    def test_grid_3x3(self):
        s = stats_for(3, 3, "grid")
        assert s.logical_vars == 9
        assert s.edges == 12
        assert s.max_degree == 4
        assert s.solution_space_log2 == 9

    def test_terminal_3x3(self):
        s = stats_for(3, 3, "terminal")
        assert s.logical_vars == 11
        assert s.edges == 30
        assert s.max_degree == 9

    def test_grid_edge_formula_matches_explicit_graphs(self):
        for size in range(1, 11):
            g = synthetic_grid(size, 0)
            s = stats_for(size, size, "grid")
            assert s.edges == g.num_edges
            assert s.logical_vars == g.num_nodes

    def test_max_degree_small_grids(self):
        assert stats_for(1, 1, "grid").max_degree == 0
        assert stats_for(2, 1, "grid").max_degree == 1
        assert stats_for(2, 2, "grid").max_degree == 2
        assert stats_for(3, 2, "grid").max_degree == 3
        assert stats_for(44, 44, "grid").max_degree == 4

    def test_terminal_connects_every_pixel_to_both_terminals(self):
        for w, h in [(2, 2), (5, 3), (44, 44)]:
            g = stats_for(w, h, "grid")
            t = stats_for(w, h, "terminal")
            assert t.logical_vars == g.logical_vars + 2
            assert t.edges == g.edges + 2 * w * h
            assert t.max_degree == w * h

    def test_solution_space_ratio_is_four(self):
        for size in range(2, 45):
            g = stats_for(size, size, "grid")
            t = stats_for(size, size, "terminal")
            assert t.solution_space_log2 - g.solution_space_log2 == 2

    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            stats_for(3, 3, "hypercube")
        with pytest.raises(InvalidParameterError):
            stats_for(0, 3, "grid")


class TestCompareReport:
    def test_row_count_and_header(self):
        text = compare_report(range(2, 45))
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 2 * 43

    def test_grid_precedes_terminal_per_size(self):
        lines = compare_report([3, 5]).strip().split("\n")[1:]
        kinds = [ln.split(",")[0] for ln in lines]
        assert kinds == ["grid", "terminal", "grid", "terminal"]

    def test_csv_values_3x3(self):
        lines = compare_report([3]).strip().split("\n")
        assert lines[1] == "grid,3,3,9,12,4,9"
        assert lines[2] == "terminal,3,3,11,30,9,11"

    def test_written_file_matches_returned_text(self, tmp_path):
        out = tmp_path / "scale.csv"
        text = compare_report([2, 3], path=out)
        assert out.read_text() == text
