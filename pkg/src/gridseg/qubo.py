"""QUBO form of the signed min-cut objective, plus a text exchange format.

For an edge (i, j) with weight w the cut indicator is the XOR
x_i + x_j - 2 x_i x_j, so the whole objective stays exactly equal to the
cut cost for every assignment, not only at the optimum.  That symmetry
also makes every problem built here invariant under global complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FormatError, InvalidParameterError
from .graph import GridGraph


@dataclass
class QuboProblem:
    """Sparse QUBO: offset + sum l_i x_i + sum_{i<j} q_ij x_i x_j over x in {0,1}^n."""

    num_vars: int
    linear: dict[int, float] = field(default_factory=dict)
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        if self.num_vars < 0:
            raise InvalidParameterError(f"num_vars must be >= 0, got {self.num_vars}")
        for i in self.linear:
            self._check_index(i)
        for i, j in self.quadratic:
            self._check_pair(i, j)

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.num_vars:
            raise InvalidParameterError(f"variable index {i} out of range [0, {self.num_vars})")

    def _check_pair(self, i: int, j: int) -> None:
        self._check_index(i)
        self._check_index(j)
        if i >= j:
            raise InvalidParameterError(f"quadratic key must have i < j, got ({i}, {j})")

    def add_linear(self, i: int, coeff: float) -> None:
        self._check_index(i)
        self.linear[i] = self.linear.get(i, 0.0) + float(coeff)

    def add_quadratic(self, i: int, j: int, coeff: float) -> None:
        """Accumulate a coupler; (j, i) insertions fold onto the (i, j) key."""
        if i == j:
            raise InvalidParameterError("quadratic terms need two distinct variables")
        if i > j:
            i, j = j, i
        self._check_pair(i, j)
        self.quadratic[(i, j)] = self.quadratic.get((i, j), 0.0) + float(coeff)

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Dense linear vector and COO quadratic triples, for vectorized math."""
        lin = np.zeros(self.num_vars, dtype=np.float64)
        for i, c in self.linear.items():
            lin[i] = c
        if self.quadratic:
            keys = sorted(self.quadratic)
            qi = np.array([k[0] for k in keys], dtype=np.int64)
            qj = np.array([k[1] for k in keys], dtype=np.int64)
            qv = np.array([self.quadratic[k] for k in keys], dtype=np.float64)
        else:
            qi = np.zeros(0, dtype=np.int64)
            qj = np.zeros(0, dtype=np.int64)
            qv = np.zeros(0, dtype=np.float64)
        return lin, qi, qj, qv


def as_bits(bits, num_vars: int) -> np.ndarray:
    """Validate and coerce an assignment to a length-n uint8 0/1 vector."""
    x = np.asarray(bits)
    if x.ndim != 1 or x.shape[0] != num_vars:
        raise DimensionError(f"expected {num_vars} bits, got shape {x.shape}")
    if x.size and not np.all((x == 0) | (x == 1)):
        raise InvalidParameterError("assignment entries must be 0 or 1")
    return x.astype(np.uint8)


def mincut_to_qubo(graph: GridGraph) -> QuboProblem:
    """Encode the signed min-cut of a grid graph as a QUBO.

    Every edge (i, j, w) contributes w to both linear terms and -2w to the
    coupler, so energy(x) equals the cut cost of the bipartition induced
    by x for every assignment.  The offset stays 0.
    """
    p = QuboProblem(num_vars=graph.num_nodes)
    for u, v, w in graph.edges():
        p.add_linear(u, w)
        p.add_linear(v, w)
        p.add_quadratic(u, v, -2.0 * w)
    return p


def energy(problem: QuboProblem, bits) -> float:
    """Objective value offset + l.x + sum q_ij x_i x_j for one assignment."""
    x = as_bits(bits, problem.num_vars)
    total = problem.offset
    for i, c in problem.linear.items():
        if x[i]:
            total += c
    for (i, j), c in problem.quadratic.items():
        if x[i] and x[j]:
            total += c
    return float(total)


def energies(problem: QuboProblem, xs: np.ndarray) -> np.ndarray:
    """Vectorized energy over a (rows, num_vars) 0/1 matrix."""
    x = np.asarray(xs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != problem.num_vars:
        raise DimensionError(f"expected shape (rows, {problem.num_vars}), got {x.shape}")
    lin, qi, qj, qv = problem.to_arrays()
    e = x @ lin + problem.offset
    for i, j, c in zip(qi, qj, qv):
        e += c * x[:, i] * x[:, j]
    return e


def cut_value(graph: GridGraph, bits) -> float:
    """Sum of weights over edges whose endpoints fall on different sides."""
    x = as_bits(bits, graph.num_nodes).reshape(graph.height, graph.width)
    h_cut = x[:, :-1] != x[:, 1:]
    v_cut = x[:-1, :] != x[1:, :]
    return float(
        graph.horizontal_weights[h_cut].sum() + graph.vertical_weights[v_cut].sum()
    )


def export_qubo(problem: QuboProblem, path) -> None:
    """Write the text form: header then sorted ``l`` and ``q`` lines.

    Format: ``qubo <num_vars> <num_linear> <num_quadratic>``, then
    ``l <i> <coeff>`` with ascending i, then ``q <i> <j> <coeff>`` with
    ascending (i, j).  Coefficients carry 17 significant digits and lines
    end with a bare LF, so a given problem always produces identical bytes.
    """
    lines = [f"qubo {problem.num_vars} {len(problem.linear)} {len(problem.quadratic)}\n"]
    for i in sorted(problem.linear):
        lines.append(f"l {i} {format(problem.linear[i], '.17g')}\n")
    for i, j in sorted(problem.quadratic):
        lines.append(f"q {i} {j} {format(problem.quadratic[(i, j)], '.17g')}\n")
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.writelines(lines)


def import_qubo(path) -> QuboProblem:
    """Parse a file written by export_qubo."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "qubo":
            raise FormatError(f"{path}: expected header 'qubo <vars> <linear> <quadratic>'")
        try:
            num_vars, n_lin, n_quad = int(header[1]), int(header[2]), int(header[3])
        except ValueError as exc:
            raise FormatError(f"{path}: malformed header fields") from exc
        problem = QuboProblem(num_vars=num_vars)
        for _ in range(n_lin):
            parts = fh.readline().split()
            if len(parts) != 3 or parts[0] != "l":
                raise FormatError(f"{path}: malformed linear line")
            i, coeff = int(parts[1]), float(parts[2])
            if not math.isfinite(coeff):
                raise FormatError(f"{path}: non-finite linear coefficient")
            if i in problem.linear:
                raise FormatError(f"{path}: duplicate linear index {i}")
            problem.add_linear(i, coeff)
        for _ in range(n_quad):
            parts = fh.readline().split()
            if len(parts) != 4 or parts[0] != "q":
                raise FormatError(f"{path}: malformed quadratic line")
            i, j, coeff = int(parts[1]), int(parts[2]), float(parts[3])
            if not math.isfinite(coeff):
                raise FormatError(f"{path}: non-finite quadratic coefficient")
            if i >= j:
                raise FormatError(f"{path}: quadratic line must have i < j")
            if (i, j) in problem.quadratic:
                raise FormatError(f"{path}: duplicate quadratic key ({i}, {j})")
            problem.add_quadratic(i, j, coeff)
        if fh.readline().strip():
            raise FormatError(f"{path}: trailing content after declared terms")
    return problem
