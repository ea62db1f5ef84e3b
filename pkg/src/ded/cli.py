"""Command-line front end: ``ded <subcommand> ...``.

Failures print a single ``ded: error: <Kind>: <message>`` line on stderr and
exit with status 1 (status 2 for usage errors). Output files are staged and
renamed into place only after the whole command has succeeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ded.analysis import find_modes, level_set_tree, multilevel_features
from ded.density import SCHEMA_VERSION, PiecewiseDensity, TestFunction
from ded.harness import bound_audit, convergence_experiment, mode_experiment
from ded.partitioner import DedConfig, fit
from ded.simgen import preset, sample_mixture
from ded.tabular import (
    apply_transform,
    atomic_outputs,
    ingest,
    matrix_to_csv,
    read_matrix,
    rows_to_csv,
    transform_jacobian,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    d = DedConfig()
    p.add_argument("--theta", type=float, default=d.theta)
    p.add_argument("--m", type=int, default=d.m)
    p.add_argument("--alpha", type=float, default=d.pseudo_count, help="pseudo count (Laplace smoother)")
    p.add_argument("--epsilon", type=float, default=d.epsilon_shortcut)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--backend", choices=["auto", "l2", "exact"], default=d.backend)


def _config(args) -> DedConfig:
    return DedConfig(
        theta=args.theta,
        m=args.m,
        pseudo_count=args.alpha,
        epsilon_shortcut=args.epsilon,
        max_depth=args.max_depth,
        backend=args.backend,
        seed=getattr(args, "seed", 0) or 0,
    )


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _emit(staged, out: Optional[str], text: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        staged.append((Path(out), text))


def _load_model(path) -> PiecewiseDensity:
    with open(path, encoding="utf-8") as fh:
        return PiecewiseDensity.from_json(fh.read())


def cmd_fit(args, staged):
    data = ingest(args.data, rescale=args.rescale)
    _, p = fit(data.points, _config(args))
    p.transform = data.transform
    staged.append((Path(args.out), p.to_json() + "\n"))


def cmd_eval(args, staged):
    p = _load_model(args.model)
    X, header = read_matrix(args.points)
    if X.shape[1] != p.d:
        raise ValueError(f"points have {X.shape[1]} columns, model has d={p.d}")
    dens = p.eval(apply_transform(X, p.transform)) * transform_jacobian(p.transform)
    cols = header or [f"x{j}" for j in range(p.d)]
    _emit(staged, args.out, matrix_to_csv(np.column_stack([X, dens]), cols + ["density"]))


def cmd_modes(args, staged):
    p = _load_model(args.model)
    modes = find_modes(p)
    _emit(staged, args.out, _dump({"schema_version": SCHEMA_VERSION, "modes": [md.to_dict(p) for md in modes]}))


def cmd_lst(args, staged):
    p = _load_model(args.model)
    tree = level_set_tree(p)
    payload = {"schema_version": SCHEMA_VERSION, "n_modes": len(tree.tree_leaves()), "tree": tree.to_dict()}
    _emit(staged, args.out, _dump(payload))


def cmd_features(args, staged):
    data = ingest(args.data, rescale=args.rescale)
    F = multilevel_features(data.points, args.levels, _config(args))
    _emit(staged, args.out, matrix_to_csv(F, [f"level_{L}" for L in args.levels]))


def cmd_simulate(args, staged):
    spec = preset(args.preset)
    X = sample_mixture(spec, args.n, args.seed)
    _emit(staged, args.out, matrix_to_csv(X, [f"x{j}" for j in range(spec.d)]))


def cmd_convergence(args, staged):
    spec = preset(args.preset)
    f = TestFunction.by_name(args.function, spec.d)
    rep = convergence_experiment(spec, f, args.sizes, args.replicas, _config(args), args.seed, not args.absolute)
    rows = [(r.n, r.mean_error, r.std_error) for r in rep.rows]
    summary = {"schema_version": SCHEMA_VERSION, "preset": args.preset, "seed": args.seed,
               "replicas": args.replicas, **rep.summary()}
    summary.pop("elapsed_seconds", None)
    staged.append((Path(f"{args.out}.csv"), rows_to_csv(["n", "mean_error", "std_error"], rows)))
    staged.append((Path(f"{args.out}.json"), _dump(summary)))


def cmd_mode_study(args, staged):
    study = mode_experiment(args.d, args.n, args.replicas, _config(args), args.seed)
    rows = [(r, c) for r, c in enumerate(study.counts)]
    summary = {"schema_version": SCHEMA_VERSION, "seed": args.seed, "replicas": args.replicas, **study.summary()}
    staged.append((Path(f"{args.out}.csv"), rows_to_csv(["replica", "modes"], rows)))
    staged.append((Path(f"{args.out}.json"), _dump(summary)))


def cmd_audit(args, staged):
    data = ingest(args.data, rescale=args.rescale)
    cfg = _config(args)
    tree, _ = fit(data.points, cfg)
    rep = bound_audit(tree, cfg)
    header = ["node", "count", "depth", "backend", "recorded", "recomputed", "threshold", "exact", "status"]
    rows = [(r.node, r.count, r.depth, r.backend, r.recorded, r.recomputed, r.threshold, r.exact, r.status)
            for r in rep.rows]
    summary = {"schema_version": SCHEMA_VERSION, "config": cfg.to_dict(), **rep.summary()}
    staged.append((Path(f"{args.out}.csv"), rows_to_csv(header, rows)))
    staged.append((Path(f"{args.out}.json"), _dump(summary)))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ded", description="Density estimation by discrepancy-controlled binary partitioning.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a model to a CSV of points")
    p.add_argument("data")
    _add_fit_flags(p)
    p.add_argument("--rescale", action="store_true", help="min-max map each column onto [0, 1]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="append a density column to a CSV of points")
    p.add_argument("model")
    p.add_argument("points")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("modes", help="write the modes of a model as JSON")
    p.add_argument("model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("lst", help="write the level set tree of a model as JSON")
    p.add_argument("model")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lst)

    p = sub.add_parser("features", help="multi-level density features")
    p.add_argument("data")
    p.add_argument("--levels", type=_int_list, required=True)
    _add_fit_flags(p)
    p.add_argument("--rescale", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("simulate", help="sample a preset mixture")
    p.add_argument("--preset", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("convergence", help="integration error versus sample size")
    p.add_argument("--preset", default="beta-mixture-d2")
    p.add_argument("--function", default="f2", choices=["f1", "f2", "f3", "const"])
    p.add_argument("--sizes", type=_int_list, default=[500, 2000, 8000])
    p.add_argument("--replicas", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--absolute", action="store_true", help="report absolute rather than relative error")
    _add_fit_flags(p)
    p.add_argument("--out", required=True, help="output prefix for .csv and .json")
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("mode-study", help="mode counts on the four-Gaussian mixture")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--replicas", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _add_fit_flags(p)
    p.add_argument("--out", required=True, help="output prefix for .csv and .json")
    p.set_defaults(func=cmd_mode_study)

    p = sub.add_parser("audit", help="fit and re-check every leaf against its tolerance")
    p.add_argument("data")
    _add_fit_flags(p)
    p.add_argument("--rescale", action="store_true")
    p.add_argument("--out", required=True, help="output prefix for .csv and .json")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"ded: error: UsageError: {exc}", file=sys.stderr)
        return 2
    start = time.perf_counter()
    try:
        with atomic_outputs() as staged:
            args.func(args, staged)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one stderr line
        message = " ".join(str(exc).split())
        print(f"ded: error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 1
    if args.command in ("convergence", "mode-study", "audit"):
        print(f"ded: {args.command} finished in {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
