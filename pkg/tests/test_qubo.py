"""Min-cut QUBO encoding: exactness against direct cut enumeration."""

import itertools

import numpy as np
import pytest

from gridseg import (
    DimensionError,
    FormatError,
    GridGraph,
    InvalidParameterError,
    QuboProblem,
    cut_value,
    energies,
    energy,
    export_qubo,
    import_qubo,
    mincut_to_qubo,
    synthetic_grid,
)


def brute_force_cut(graph):
    """Independent oracle: enumerate every bipartition, sum cut weights by hand."""
    edges = list(graph.edges())
    best = None
    argmins = []
    for bits in itertools.product((0, 1), repeat=graph.num_nodes):
        value = sum(w for u, v, w in edges if bits[u] != bits[v])
        if best is None or value < best - 1e-12:
            best = value
            argmins = [bits]
        elif abs(value - best) <= 1e-12:
            argmins.append(bits)
    return best, argmins


def single_edge_graph(weight):
    return GridGraph(width=2, height=1, horizontal_weights=[[weight]],
                     vertical_weights=np.zeros((0, 2)))


class TestMincutToQubo:
    def test_single_edge_coefficients(self):
        p = mincut_to_qubo(single_edge_graph(-0.7))
        assert p.num_vars == 2
        assert p.linear == pytest.approx({0: -0.7, 1: -0.7})
        assert p.quadratic == pytest.approx({(0, 1): 1.4})
        assert p.offset == 0.0

    def test_single_edge_energies(self):
        p = mincut_to_qubo(single_edge_graph(-0.7))
        assert energy(p, [0, 0]) == pytest.approx(0.0, abs=1e-15)
        assert energy(p, [0, 1]) == pytest.approx(-0.7, abs=1e-15)
        assert energy(p, [1, 0]) == pytest.approx(-0.7, abs=1e-15)
        assert energy(p, [1, 1]) == pytest.approx(0.0, abs=1e-15)

    def test_energy_equals_cut_for_all_assignments_small(self):
        g = synthetic_grid(3, 21)
        p = mincut_to_qubo(g)
        for bits in itertools.product((0, 1), repeat=9):
            assert energy(p, bits) == pytest.approx(cut_value(g, bits), abs=1e-9)

    def test_energy_equals_cut_random_pairs(self):
        rng = np.random.default_rng(7)
        for size in (2, 5, 10, 17):
            g = synthetic_grid(size, int(rng.integers(1000)))
            p = mincut_to_qubo(g)
            x = rng.integers(0, 2, (50, g.num_nodes))
            e = energies(p, x)
            for row, ev in zip(x, e):
                assert ev == pytest.approx(cut_value(g, row), abs=1e-9)

    def test_complement_symmetry(self):
        g = synthetic_grid(6, 5)
        p = mincut_to_qubo(g)
        rng = np.random.default_rng(0)
        x = rng.integers(0, 2, (500, g.num_nodes))
        assert np.allclose(energies(p, x), energies(p, 1 - x), atol=1e-9)

    def test_2x2_signed_optimum(self):
        # Horizontal edges +1, vertical edges -1: optimal cut removes both
        # vertical edges, splitting the top row from the bottom row.
        g = GridGraph(width=2, height=2, horizontal_weights=[[1.0], [1.0]],
                      vertical_weights=[[-1.0, -1.0]])
        best, argmins = brute_force_cut(g)
        assert best == pytest.approx(-2.0, abs=1e-12)
        assert sorted(argmins) == [(0, 0, 1, 1), (1, 1, 0, 0)]
        p = mincut_to_qubo(g)
        assert energy(p, [0, 0, 1, 1]) == pytest.approx(-2.0, abs=1e-12)
        assert energy(p, [1, 1, 0, 0]) == pytest.approx(-2.0, abs=1e-12)


class TestQuboProblem:
    def test_linear_only_energy(self):
        p = QuboProblem(num_vars=2, linear={0: 2.0, 1: -3.0})
        assert energy(p, [1, 1]) == pytest.approx(-1.0, abs=1e-15)
        assert energy(p, [0, 0]) == 0.0

    def test_empty_problem_energy_is_zero(self):
        p = QuboProblem(num_vars=0)
        assert energy(p, []) == 0.0

    def test_offset_included(self):
        p = QuboProblem(num_vars=1, linear={0: 1.0}, offset=2.5)
        assert energy(p, [0]) == 2.5
        assert energy(p, [1]) == 3.5

    def test_duplicate_insertions_fold(self):
        p = QuboProblem(num_vars=3)
        p.add_quadratic(0, 1, 1.0)
        p.add_quadratic(1, 0, 2.0)
        assert p.quadratic == {(0, 1): 3.0}
        p.add_linear(2, 1.0)
        p.add_linear(2, -0.25)
        assert p.linear == {2: 0.75}

    def test_index_validation(self):
        p = QuboProblem(num_vars=2)
        with pytest.raises(InvalidParameterError):
            p.add_linear(2, 1.0)
        with pytest.raises(InvalidParameterError):
            p.add_quadratic(0, 0, 1.0)
        with pytest.raises(InvalidParameterError):
            QuboProblem(num_vars=2, quadratic={(1, 0): 1.0})

    def test_wrong_assignment_length(self):
        p = QuboProblem(num_vars=3, linear={0: 1.0})
        with pytest.raises(DimensionError):
            energy(p, [0, 1])

    def test_non_binary_assignment(self):
        p = QuboProblem(num_vars=2, linear={0: 1.0})
        with pytest.raises(InvalidParameterError):
            energy(p, [0, 2])


class TestQuboFile:
    def test_single_edge_file_layout(self, tmp_path):
        p = mincut_to_qubo(single_edge_graph(-0.7))
        path = tmp_path / "p.qubo"
        export_qubo(p, path)
        assert path.read_text() == (
            "qubo 2 2 1\n"
            "l 0 -0.69999999999999996\n"
            "l 1 -0.69999999999999996\n"
            "q 0 1 1.3999999999999999\n"
        )

    def test_empty_problem_header_only(self, tmp_path):
        path = tmp_path / "empty.qubo"
        export_qubo(QuboProblem(num_vars=0), path)
        assert path.read_text() == "qubo 0 0 0\n"

    def test_round_trip_byte_identical(self, tmp_path):
        p = mincut_to_qubo(synthetic_grid(5, 77))
        first = tmp_path / "a.qubo"
        second = tmp_path / "b.qubo"
        export_qubo(p, first)
        export_qubo(import_qubo(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_round_trip_preserves_energies(self, tmp_path):
        g = synthetic_grid(4, 13)
        p = mincut_to_qubo(g)
        path = tmp_path / "p.qubo"
        export_qubo(p, path)
        q = import_qubo(path)
        rng = np.random.default_rng(2)
        x = rng.integers(0, 2, (100, p.num_vars))
        assert np.array_equal(energies(p, x), energies(q, x))

    def test_lines_use_lf_only(self, tmp_path):
        path = tmp_path / "p.qubo"
        export_qubo(mincut_to_qubo(synthetic_grid(3, 0)), path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "bad.qubo"
        path.write_text("qubo 2 1\n")
        with pytest.raises(FormatError):
            import_qubo(path)

    def test_duplicate_term_rejected(self, tmp_path):
        path = tmp_path / "bad.qubo"
        path.write_text("qubo 2 2 0\nl 0 1.0\nl 0 2.0\n")
        with pytest.raises(FormatError):
            import_qubo(path)
