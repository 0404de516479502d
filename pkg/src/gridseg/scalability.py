"""Resource accounting for the two min-cut encodings of a w x h image.

The grid formulation keeps one binary variable per pixel with degree at
most 4.  The classical source/sink alternative adds two terminal vertices
wired to every pixel, which doubles the edge budget growth and makes the
terminal degree scale with the pixel count; its search space is 2^(n+2),
exactly four times the grid formulation's 2^n.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParameterError

FORMULATIONS = ("grid", "terminal")
CSV_HEADER = "formulation,width,height,logical_vars,edges,max_degree,solution_space_log2"


@dataclass(frozen=True)
class FormulationStats:
    formulation: str
    width: int
    height: int
    logical_vars: int
    edges: int
    max_degree: int
    solution_space_log2: int

    def csv_row(self) -> str:
        return (
            f"{self.formulation},{self.width},{self.height},{self.logical_vars},"
            f"{self.edges},{self.max_degree},{self.solution_space_log2}"
        )


def _grid_max_degree(width: int, height: int) -> int:
    def axis(extent: int) -> int:
        if extent >= 3:
            return 2
        return 1 if extent == 2 else 0

    return axis(width) + axis(height)


def stats_for(width: int, height: int, formulation: str) -> FormulationStats:
    if width < 1 or height < 1:
        raise InvalidParameterError(f"width and height must be >= 1, got {width}x{height}")
    if formulation not in FORMULATIONS:
        raise InvalidParameterError(
            f"unknown formulation {formulation!r}, expected one of {FORMULATIONS}"
        )
    n = width * height
    lattice_edges = 2 * n - width - height
    if formulation == "grid":
        return FormulationStats(
            formulation="grid",
            width=width,
            height=height,
            logical_vars=n,
            edges=lattice_edges,
            max_degree=_grid_max_degree(width, height),
            solution_space_log2=n,
        )
    # Terminal formulation: source and sink each connect to all n pixels.
    return FormulationStats(
        formulation="terminal",
        width=width,
        height=height,
        logical_vars=n + 2,
        edges=lattice_edges + 2 * n,
        max_degree=n,
        solution_space_log2=n + 2,
    )


def compare_report(sizes, path=None) -> str:
    """CSV comparing both formulations over square sizes, one row each.

    Rows are ordered by size with grid before terminal; optionally written
    to ``path`` as well.
    """
    sizes = list(sizes)
    if not sizes:
        raise InvalidParameterError("compare_report needs at least one size")
    lines = [CSV_HEADER]
    for g in sizes:
        for formulation in FORMULATIONS:
            lines.append(stats_for(g, g, formulation).csv_row())
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
    return text
