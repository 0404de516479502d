"""Command line entry points.

Exit codes: 0 success, 1 usage or parameter errors, 2 I/O and file-format
errors, 3 solver or training failures.  Diagnostics go to stderr as a
single line.  Primary outputs (masks, edge lists, QUBO files, CSVs) are
byte-reproducible for a fixed configuration; JSON sidecars additionally
record wall times, which naturally vary run to run.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import statistics
import sys
from pathlib import Path

from . import io as gio
from .errors import (
    DivergenceError,
    FormatError,
    GridSegError,
    InvalidParameterError,
    TooLargeError,
)
from .graph import WeightConfig, as_single_band, load_edge_list, save_edge_list, synthetic_grid
from .metrics import format_table, score_batch
from .pipeline import PatchPlan, _segment_patched, _segment_single, downscale, preprocess_flood, preprocess_forest
from .qubo import export_qubo, mincut_to_qubo
from .solvers import EXHAUSTIVE_MAX_VARS, SOLVER_KINDS, SolverConfig, solve, solve_exhaustive
from .weight_learn import save_model, train


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _parse_int_list(text: str, what: str) -> list[int]:
    """Expand '2-5,8' style range lists."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo_s, hi_s = part.split("-", 1)
            lo, hi = int(lo_s), int(hi_s)
            if hi < lo:
                raise InvalidParameterError(f"{what}: descending range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    if not out:
        raise InvalidParameterError(f"{what}: empty list")
    return out


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        kind=args.solver,
        num_reads=args.num_reads,
        sweeps=args.sweeps,
        beta_schedule=(args.beta_start, args.beta_end),
        tabu_tenure=args.tabu_tenure,
        seed=args.seed,
    )


def _add_solver_flags(p, default_kind="sa"):
    p.add_argument("--solver", default=default_kind, choices=SOLVER_KINDS)
    p.add_argument("--num-reads", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--beta-start", type=float, default=0.1)
    p.add_argument("--beta-end", type=float, default=10.0)
    p.add_argument("--tabu-tenure", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)


def cmd_segment(args) -> int:
    img = gio.read_raster(args.input)
    if args.preprocess == "forest":
        img = preprocess_forest(img, channel=args.channel)
    elif args.preprocess == "flood":
        if args.green_band is None or args.nir_band is None:
            raise InvalidParameterError("--preprocess flood requires --green-band and --nir-band")
        img = preprocess_flood(img, args.green_band, args.nir_band)
    if args.downscale:
        img = downscale(img, args.downscale)
    plane = as_single_band(img)
    weight_cfg = WeightConfig(sigma=args.sigma, normalize=not args.no_normalize)
    solver_cfg = _solver_config(args)
    if args.patch:
        plan = PatchPlan.cover(plane.shape[1], plane.shape[0], args.patch)
        mask, info = _segment_patched(plane, plan, weight_cfg, solver_cfg)
    else:
        mask, info = _segment_single(plane, weight_cfg, solver_cfg)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    mask_path = out_dir / f"{stem}_mask.pgm"
    gio.write_mask(mask_path, mask)
    config = {
        "input": str(args.input),
        "preprocess": args.preprocess,
        "channel": args.channel,
        "green_band": args.green_band,
        "nir_band": args.nir_band,
        "downscale": args.downscale,
        "sigma": args.sigma,
        "normalize": not args.no_normalize,
        "patch": args.patch,
        "solver": args.solver,
        "num_reads": args.num_reads,
        "sweeps": args.sweeps,
        "beta_start": args.beta_start,
        "beta_end": args.beta_end,
        "tabu_tenure": args.tabu_tenure,
        "seed": args.seed,
    }
    gio.write_sidecar(out_dir / f"{stem}_mask.json",
                      {"format": "gridseg-mask/1", "config": config, "result": info})
    print(f"wrote {mask_path}")
    return 0


def cmd_synth(args) -> int:
    sizes = _parse_int_list(args.sizes, "--sizes")
    seeds = _parse_int_list(args.seeds, "--seeds")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for size in sizes:
        for seed in seeds:
            graph = synthetic_grid(size, seed)
            save_edge_list(graph, out_dir / f"grid_{size}x{size}_seed{seed}.txt", seed)
            count += 1
    print(f"wrote {count} edge-list file(s) to {out_dir}")
    return 0


def _bench_worker(task):
    """Solve one instance with every requested solver; returns row dicts."""
    path, kinds, cfg_kwargs = task
    graph, seed = load_edge_list(path)
    problem = mincut_to_qubo(graph)
    reference = None
    reference_label = "best_of_all"
    if problem.num_vars <= EXHAUSTIVE_MAX_VARS:
        reference = solve_exhaustive(problem).best.energy
        reference_label = "exhaustive"
    rows = []
    for kind in kinds:
        cfg = SolverConfig(kind=kind, **cfg_kwargs)
        result = solve(problem, cfg)
        rows.append({
            "file": Path(path).name,
            "width": graph.width,
            "height": graph.height,
            "seed": seed,
            "solver": kind,
            "best_energy": result.best.energy,
            "wall_time_s": result.wall_time,
            "reference_label": reference_label,
            "reference_energy": reference,
        })
    if reference is None:
        envelope = min(r["best_energy"] for r in rows)
        for r in rows:
            r["reference_energy"] = envelope
    for r in rows:
        ref = r["reference_energy"]
        r["relative_error"] = abs((ref - r["best_energy"]) / ref) if ref != 0 else None
    return rows


def _write_bench_csvs(rows, out_dir: Path) -> None:
    rows = sorted(rows, key=lambda r: (r["width"], r["height"], r["seed"], r["solver"]))
    per_path = out_dir / "bench_per_instance.csv"
    with open(per_path, "w", encoding="ascii", newline="") as fh:
        fh.write("file,width,height,seed,solver,best_energy,wall_time_s,"
                 "reference_label,reference_energy,relative_error\n")
        for r in rows:
            er = "n/a" if r["relative_error"] is None else format(r["relative_error"], ".17g")
            fh.write(
                f"{r['file']},{r['width']},{r['height']},{r['seed']},{r['solver']},"
                f"{format(r['best_energy'], '.17g')},{r['wall_time_s']:.6f},"
                f"{r['reference_label']},{format(r['reference_energy'], '.17g')},{er}\n"
            )
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r["width"], r["height"], r["solver"]), []).append(r)
    agg_path = out_dir / "bench_aggregate.csv"
    with open(agg_path, "w", encoding="ascii", newline="") as fh:
        fh.write("width,height,solver,instances,undefined,er_mean,er_min,er_max,er_std\n")
        for (w, h, solver), grp in sorted(groups.items()):
            defined = [r["relative_error"] for r in grp if r["relative_error"] is not None]
            if defined:
                stats = (
                    format(statistics.fmean(defined), ".17g"),
                    format(min(defined), ".17g"),
                    format(max(defined), ".17g"),
                    format(statistics.pstdev(defined), ".17g"),
                )
            else:
                stats = ("n/a",) * 4
            fh.write(f"{w},{h},{solver},{len(grp)},{len(grp) - len(defined)},"
                     + ",".join(stats) + "\n")


def cmd_bench(args) -> int:
    instance_dir = Path(args.instances)
    paths = sorted(str(p) for p in instance_dir.glob("*.txt"))
    if not paths:
        raise InvalidParameterError(f"no *.txt instances found in {instance_dir}")
    kinds = [k.strip() for k in args.solvers.split(",") if k.strip()]
    for k in kinds:
        if k not in SOLVER_KINDS:
            raise InvalidParameterError(f"unknown solver {k!r} in --solvers")
    cfg_kwargs = {
        "num_reads": args.num_reads,
        "sweeps": args.sweeps,
        "beta_schedule": (args.beta_start, args.beta_end),
        "tabu_tenure": args.tabu_tenure,
        "seed": args.seed,
    }
    SolverConfig(**cfg_kwargs)  # validate once up front
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(p, tuple(kinds), cfg_kwargs) for p in paths]
    rows: list[dict] = []
    failure = None
    if args.jobs <= 1:
        for task in tasks:
            try:
                rows.extend(_bench_worker(task))
            except GridSegError as exc:
                failure = f"{task[0]}: {exc}"
                break
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_bench_worker, t): t[0] for t in tasks}
            for fut in concurrent.futures.as_completed(futures):
                try:
                    rows.extend(fut.result())
                except GridSegError as exc:
                    failure = f"{futures[fut]}: {exc}"
                    for other in futures:
                        other.cancel()
                    break
    _write_bench_csvs(rows, out_dir)
    if failure is not None:
        print(f"error: solver failed on {failure}", file=sys.stderr)
        return 3
    print(f"benchmarked {len(paths)} instance(s), {len(rows)} rows -> {out_dir}")
    return 0


def cmd_eval(args) -> int:
    pred_dir = Path(args.pred)
    truth_dir = Path(args.truth)
    pred_names = sorted(p.name for p in pred_dir.glob("*.pgm"))
    truth_names = sorted(p.name for p in truth_dir.glob("*.pgm"))
    if not pred_names:
        raise InvalidParameterError(f"no *.pgm masks found in {pred_dir}")
    unmatched = sorted(set(pred_names) ^ set(truth_names))
    if unmatched:
        print(f"error: unpaired mask file(s): {', '.join(unmatched)}", file=sys.stderr)
        return 2
    pairs = []
    for name in pred_names:
        pred = gio.read_mask(pred_dir / name)
        truth = gio.read_mask(truth_dir / name, uncertain=args.uncertain)
        pairs.append((pred, truth))
    aggregate, items = score_batch(pairs)
    print(format_table(aggregate))
    if args.out:
        payload = {
            "aggregate": aggregate.to_dict(),
            "items": {name: rep.to_dict() for name, rep in zip(pred_names, items)},
        }
        gio.write_sidecar(args.out, payload)
    return 0


def cmd_export_qubo(args) -> int:
    if args.graph is not None:
        graph, _ = load_edge_list(args.graph)
    else:
        graph = synthetic_grid(args.size, args.seed)
    export_qubo(mincut_to_qubo(graph), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_learn_weights(args) -> int:
    images_dir = Path(args.images)
    masks_dir = Path(args.masks)
    names = sorted(p.name for p in images_dir.glob("*.pgm"))
    if not names:
        raise InvalidParameterError(f"no *.pgm images found in {images_dir}")
    missing = [n for n in names if not (masks_dir / n).exists()]
    if missing:
        print(f"error: missing mask file(s): {', '.join(missing)}", file=sys.stderr)
        return 2
    dataset = []
    for name in names:
        plane = as_single_band(gio.read_raster(images_dir / name))
        mask = gio.read_mask(masks_dir / name)
        dataset.append((plane, mask))
    model = train(dataset, learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    save_model(model, args.out)
    meta = model.metadata
    print(f"trained on {len(dataset)} image(s): loss {meta['loss_curve'][-1]:.6f}, "
          f"pair accuracy {meta['pair_accuracy']:.4f} -> {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="gridseg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a raster into a binary (or stitched) mask")
    p.add_argument("input", help="PGM/PPM/bands raster")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--preprocess", default="none", choices=("none", "forest", "flood"))
    p.add_argument("--channel", default="hue", choices=("hue", "saturation", "value"))
    p.add_argument("--green-band", type=int, default=None)
    p.add_argument("--nir-band", type=int, default=None)
    p.add_argument("--downscale", type=int, default=0, help="square target size, 0 disables")
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--patch", type=int, default=0, help="patch size, 0 segments whole image")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("synth", help="generate synthetic random grid instances")
    p.add_argument("--sizes", required=True, help="e.g. 2-44 or 2,3,5")
    p.add_argument("--seeds", required=True, help="e.g. 1-5")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="benchmark solvers over edge-list instances")
    p.add_argument("--instances", required=True, help="directory of edge-list .txt files")
    p.add_argument("--solvers", default="sa", help="comma list from sa,tabu,exhaustive")
    p.add_argument("--out", default=".", help="output directory for CSVs")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--num-reads", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--beta-start", type=float, default=0.1)
    p.add_argument("--beta-end", type=float, default=10.0)
    p.add_argument("--tabu-tenure", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted masks (*.pgm)")
    p.add_argument("--truth", required=True, help="directory of ground-truth masks (*.pgm)")
    p.add_argument("--uncertain", type=int, default=2,
                   help="gray level in truth masks meaning 'ignore' (-1)")
    p.add_argument("--out", default=None, help="optional JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-qubo", help="write the min-cut QUBO for a grid instance")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", default=None, help="edge-list file")
    src.add_argument("--size", type=int, default=None, help="synthetic grid size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output QUBO text file")
    p.set_defaults(func=cmd_export_qubo)

    p = sub.add_parser("learn-weights", help="fit the logistic edge-weight model")
    p.add_argument("--images", required=True, help="directory of training images (*.pgm)")
    p.add_argument("--masks", required=True, help="directory of matching label masks (*.pgm)")
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output model JSON path")
    p.set_defaults(func=cmd_learn_weights)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TooLargeError, DivergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except GridSegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
