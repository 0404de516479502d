"""Classical QUBO solvers: exhaustive enumeration, annealing, tabu search.

All solvers return a SampleSet whose energies are recomputed from the
problem (never trusted from incremental bookkeeping) and whose samples are
sorted by (energy, bitstring), so best_index is always 0 and ties resolve
to the lexicographically lowest assignment.

Determinism: stochastic solvers derive one PCG64 stream per restart from
SeedSequence([seed, read_index]).  Results therefore do not depend on how
restarts are scheduled, and a run with more reads extends a run with
fewer reads instead of reshuffling it.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import InvalidParameterError, TooLargeError, UndefinedValueError
from .qubo import QuboProblem, energies

EXHAUSTIVE_MAX_VARS = 24
SOLVER_KINDS = ("exhaustive", "sa", "tabu")


@dataclass(frozen=True)
class SolverConfig:
    """Shared solver knobs; fields irrelevant to a given kind are ignored.

    beta_schedule is (beta_start, beta_end) for the geometric annealing
    ramp.  time_limit, when set, truncates the restart loop after the
    current read; runs are only reproducible without it.
    """

    kind: str = "sa"
    num_reads: int = 100
    sweeps: int = 1000
    beta_schedule: tuple[float, float] = (0.1, 10.0)
    tabu_tenure: int = 10
    seed: int = 0
    time_limit: float | None = None

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise InvalidParameterError(f"unknown solver kind {self.kind!r}, expected one of {SOLVER_KINDS}")
        if self.num_reads < 1:
            raise InvalidParameterError(f"num_reads must be >= 1, got {self.num_reads}")
        if self.sweeps < 1:
            raise InvalidParameterError(f"sweeps must be >= 1, got {self.sweeps}")
        b0, b1 = self.beta_schedule
        if not (math.isfinite(b0) and math.isfinite(b1) and 0 < b0 < b1):
            raise InvalidParameterError(f"beta_schedule must satisfy 0 < start < end, got {self.beta_schedule}")
        if self.tabu_tenure < 1:
            raise InvalidParameterError(f"tabu_tenure must be >= 1, got {self.tabu_tenure}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InvalidParameterError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.time_limit is not None and not self.time_limit > 0:
            raise InvalidParameterError(f"time_limit must be positive, got {self.time_limit}")


@dataclass(frozen=True)
class Sample:
    bits: np.ndarray
    energy: float
    count: int = 1


@dataclass(frozen=True)
class SampleSet:
    """Solver output: deduplicated samples sorted by (energy, bits)."""

    samples: list[Sample]
    best_index: int
    wall_time: float
    solver_label: str

    @property
    def best(self) -> Sample:
        return self.samples[self.best_index]

    def to_dict(self) -> dict:
        return {
            "solver_label": self.solver_label,
            "wall_time": self.wall_time,
            "best_index": self.best_index,
            "samples": [
                {"bits": "".join(str(int(b)) for b in s.bits), "energy": s.energy, "count": s.count}
                for s in self.samples
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SampleSet":
        samples = [
            Sample(
                bits=np.frombuffer(s["bits"].encode("ascii"), dtype=np.uint8) - ord("0"),
                energy=float(s["energy"]),
                count=int(s["count"]),
            )
            for s in d["samples"]
        ]
        return cls(
            samples=samples,
            best_index=int(d["best_index"]),
            wall_time=float(d["wall_time"]),
            solver_label=str(d["solver_label"]),
        )


def _finish(problem: QuboProblem, raw: list[np.ndarray], wall: float, label: str) -> SampleSet:
    """Dedupe raw bit vectors, recompute exact energies, sort canonically."""
    counts: dict[bytes, int] = {}
    order: list[bytes] = []
    for bits in raw:
        key = bits.tobytes()
        if key not in counts:
            counts[key] = 0
            order.append(key)
        counts[key] += 1
    uniq = [np.frombuffer(k, dtype=np.uint8).copy() for k in order]
    if problem.num_vars:
        exact = energies(problem, np.stack(uniq))
    else:
        exact = np.full(len(uniq), problem.offset)
    samples = [
        Sample(bits=b, energy=float(e), count=counts[b.tobytes()])
        for b, e in zip(uniq, exact)
    ]
    samples.sort(key=lambda s: (s.energy, s.bits.tobytes()))
    return SampleSet(samples=samples, best_index=0, wall_time=wall, solver_label=label)


def solve_exhaustive(problem: QuboProblem, max_ties: int = 4096) -> SampleSet:
    """Enumerate all 2^n assignments; returns every optimum (ties included).

    Hard-capped at 24 variables.  For pathologically degenerate problems
    the tie list is truncated at max_ties entries, taken in enumeration
    order (which starts at the all-zero assignment).
    """
    n = problem.num_vars
    if n > EXHAUSTIVE_MAX_VARS:
        raise TooLargeError(
            f"exhaustive solver is capped at {EXHAUSTIVE_MAX_VARS} variables, got {n}"
        )
    t0 = time.perf_counter()
    if n == 0:
        wall = time.perf_counter() - t0
        return _finish(problem, [np.zeros(0, dtype=np.uint8)], wall, "exhaustive")
    lin, qi, qj, qv = problem.to_arrays()
    shifts = np.arange(n, dtype=np.int64)
    total = 1 << n
    chunk = 1 << 16
    best_e = math.inf
    ties: list[int] = []
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        x = ((idx[:, None] >> shifts) & 1).astype(np.float64)
        e = x @ lin + problem.offset
        for i, j, c in zip(qi, qj, qv):
            e += c * x[:, i] * x[:, j]
        m = float(e.min())
        if m < best_e:
            best_e = m
            ties = idx[e == m][:max_ties].tolist()
        elif m == best_e and len(ties) < max_ties:
            ties.extend(idx[e == m][: max_ties - len(ties)].tolist())
    raw = [((t >> shifts) & 1).astype(np.uint8) for t in ties]
    wall = time.perf_counter() - t0
    return _finish(problem, raw, wall, "exhaustive")


def _csr(problem: QuboProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Symmetric neighbor lists (ptr, idx, val) from the quadratic terms."""
    n = problem.num_vars
    deg = np.zeros(n, dtype=np.int64)
    for i, j in problem.quadratic:
        deg[i] += 1
        deg[j] += 1
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=ptr[1:])
    idx = np.zeros(ptr[-1], dtype=np.int64)
    val = np.zeros(ptr[-1], dtype=np.float64)
    fill = ptr[:-1].copy()
    for (i, j), c in problem.quadratic.items():
        idx[fill[i]] = j
        val[fill[i]] = c
        fill[i] += 1
        idx[fill[j]] = i
        val[fill[j]] = c
        fill[j] += 1
    return ptr, idx, val


def _fields_and_energy(lin, qi, qj, qv, offset, x):
    """Local fields h_i = l_i + sum_j q_ij x_j and the exact current energy."""
    xf = x.astype(np.float64)
    h = lin.copy()
    e = float(lin @ xf + offset)
    if qi.size:
        np.add.at(h, qi, qv * xf[qj])
        np.add.at(h, qj, qv * xf[qi])
        e += float((qv * xf[qi] * xf[qj]).sum())
    return h, e


@njit(cache=True)
def _sa_block(ptr, idx, val, x, h, e, u, betas, best_e, best_x):
    """Run one block of Metropolis sweeps; x, h, best_x update in place.

    u[s, i] is the pre-drawn uniform for sweep s, variable i; it is
    indexed positionally, never consumed from a shared stream, so the
    trajectory does not depend on which proposals get accepted.
    """
    sweeps, n = u.shape
    for s in range(sweeps):
        beta = betas[s]
        for i in range(n):
            xi = x[i]
            de = h[i] if xi == 0 else -h[i]
            acc = de <= 0.0
            if not acc:
                acc = u[s, i] < math.exp(-beta * de)
            if acc:
                d = 1.0 - 2.0 * xi
                x[i] = 1 - xi
                e += de
                for k in range(ptr[i], ptr[i + 1]):
                    h[idx[k]] += val[k] * d
                if e < best_e:
                    best_e = e
                    best_x[:] = x
    return e, best_e


def _beta_ramp(cfg: SolverConfig) -> np.ndarray:
    b0, b1 = cfg.beta_schedule
    t = np.arange(cfg.sweeps, dtype=np.float64) / max(1, cfg.sweeps - 1)
    return b0 * (b1 / b0) ** t


def solve_sa(problem: QuboProblem, cfg: SolverConfig) -> SampleSet:
    """Simulated annealing: num_reads independent restarts of single-bit
    Metropolis sweeps under a geometric inverse-temperature ramp.

    Each restart r draws its initial state and all acceptance uniforms
    from PCG64 seeded with SeedSequence([seed, r]); the best state visited
    during the restart is kept.
    """
    t0 = time.perf_counter()
    n = problem.num_vars
    if n == 0:
        wall = time.perf_counter() - t0
        return _finish(problem, [np.zeros(0, dtype=np.uint8)], wall, "sa")
    lin, qi, qj, qv = problem.to_arrays()
    ptr, idx, val = _csr(problem)
    betas = _beta_ramp(cfg)
    block_sweeps = max(1, min(cfg.sweeps, 4_000_000 // n))
    raw: list[np.ndarray] = []
    for r in range(cfg.num_reads):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, r]))
        x = rng.integers(0, 2, n, dtype=np.uint8)
        h, e = _fields_and_energy(lin, qi, qj, qv, problem.offset, x)
        best_x = x.copy()
        best_e = e
        done = 0
        while done < cfg.sweeps:
            take = min(block_sweeps, cfg.sweeps - done)
            u = rng.random((take, n))
            e, best_e = _sa_block(
                ptr, idx, val, x, h, e, u, betas[done : done + take], best_e, best_x
            )
            done += take
        raw.append(best_x.copy())
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            break
    wall = time.perf_counter() - t0
    return _finish(problem, raw, wall, "sa")


def solve_tabu(problem: QuboProblem, cfg: SolverConfig) -> SampleSet:
    """Tabu search: steepest-descent single-bit flips with a tenure list.

    Every move flips the best non-tabu variable (ties to the lowest
    index); a tabu variable may still move if it improves on the best
    energy seen so far (aspiration).  Each restart runs at most
    max(100, 10 n) moves and stops early after max(50, 2 n) moves without
    improvement.  Restart seeding matches solve_sa.
    """
    t0 = time.perf_counter()
    n = problem.num_vars
    if n == 0:
        wall = time.perf_counter() - t0
        return _finish(problem, [np.zeros(0, dtype=np.uint8)], wall, "tabu")
    lin, qi, qj, qv = problem.to_arrays()
    ptr, idx, val = _csr(problem)
    max_moves = max(100, 10 * n)
    stall_limit = max(50, 2 * n)
    raw: list[np.ndarray] = []
    for r in range(cfg.num_reads):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, r]))
        x = rng.integers(0, 2, n, dtype=np.uint8)
        h, e = _fields_and_energy(lin, qi, qj, qv, problem.offset, x)
        best_x = x.copy()
        best_e = e
        tabu_until = np.zeros(n, dtype=np.int64)
        last_improve = 0
        for t in range(1, max_moves + 1):
            de = np.where(x == 0, h, -h)
            allowed = (tabu_until < t) | (e + de < best_e - 1e-12)
            if not allowed.any():
                allowed[:] = True
            i = int(np.argmin(np.where(allowed, de, np.inf)))
            d = 1.0 - 2.0 * x[i]
            x[i] = 1 - x[i]
            e += float(de[i])
            lo, hi = ptr[i], ptr[i + 1]
            h[idx[lo:hi]] += val[lo:hi] * d
            tabu_until[i] = t + cfg.tabu_tenure
            if e < best_e:
                best_e = e
                best_x[:] = x
                last_improve = t
            elif t - last_improve > stall_limit:
                break
        raw.append(best_x.copy())
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            break
    wall = time.perf_counter() - t0
    return _finish(problem, raw, wall, "tabu")


def solve(problem: QuboProblem, cfg: SolverConfig) -> SampleSet:
    """Dispatch on cfg.kind."""
    if cfg.kind == "exhaustive":
        return solve_exhaustive(problem)
    if cfg.kind == "sa":
        return solve_sa(problem, cfg)
    if cfg.kind == "tabu":
        return solve_tabu(problem, cfg)
    raise InvalidParameterError(f"unknown solver kind {cfg.kind!r}")


def relative_error(v_ref: float, v_heur: float) -> float:
    """|(v_ref - v_heur) / v_ref|; undefined when the reference is zero."""
    if v_ref == 0:
        raise UndefinedValueError("relative error is undefined for a zero reference value")
    return abs((v_ref - v_heur) / v_ref)
