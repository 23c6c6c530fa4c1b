"""Command line interface.

Subcommands: simulate (batch simulation grid), realdata (repeated K-fold
evaluation on a loaded dataset), fit / predict (single stacked model, JSON
in/out), and summarize (grouped mean/sd table of a result file).
"""

import argparse
import csv
import sys

from .dataset import load_multiview_csv, log2_transform
from .harness import ExperimentConfig, load_config, run_repeated_cv, \
    run_simulation_grid, summarize
from .meta import META_KINDS
from .numerics import RngStream
from .stacking import StackedClassifier, fit_mvs, predict


def _add_data_args(p, outcome_required=True):
    p.add_argument("--features", required=True, help="features CSV with header")
    p.add_argument("--viewmap", required=True, help="feature,view map CSV")
    p.add_argument("--outcome", required=outcome_required,
                   help="name of the outcome column")
    p.add_argument("--log2", action="store_true",
                   help="log2-transform features after loading")


def _load(args, outcome=None):
    d = load_multiview_csv(args.features, args.viewmap,
                           outcome if outcome is not None else args.outcome)
    if args.log2:
        d = log2_transform(d)
    return d


def main(argv=None):
    parser = argparse.ArgumentParser(prog="mvstack",
                                     description="multi-view stacked classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the simulation grid from a config")
    p.add_argument("--config", required=True, help="JSON or TOML experiment config")
    p.add_argument("--out", required=True, help="output result CSV")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("realdata", help="repeated K-fold evaluation on a dataset")
    _add_data_args(p)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("fit", help="fit one stacked classifier, write JSON model")
    _add_data_args(p)
    p.add_argument("--meta", required=True, choices=META_KINDS)
    p.add_argument("--out", required=True, help="output model JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10, help="K for the Z matrix")
    p.add_argument("--stability-q", type=int, default=None)
    p.add_argument("--pfer-max", type=float, default=1.5)
    p.add_argument("--base-tune-once", action="store_true")

    p = sub.add_parser("predict", help="predict probabilities with a JSON model")
    _add_data_args(p, outcome_required=False)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output CSV of probabilities")

    p = sub.add_parser("summarize", help="grouped mean/sd table of a result CSV")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)

    if args.command == "simulate":
        cfg = load_config(args.config)
        if args.workers is not None:
            cfg.workers = args.workers
        if args.seed is not None:
            cfg.seed = args.seed
        records = run_simulation_grid(cfg, args.out)
        print(f"wrote {len(records)} records to {args.out}")
    elif args.command == "realdata":
        cfg = load_config(args.config)
        if args.workers is not None:
            cfg.workers = args.workers
        if args.seed is not None:
            cfg.seed = args.seed
        d = _load(args)
        records = run_repeated_cv(d, cfg, args.out)
        print(f"wrote {len(records)} records to {args.out}")
    elif args.command == "fit":
        d = _load(args)
        clf = fit_mvs(d, args.meta, K=args.folds, rng=RngStream(args.seed),
                      base_tune_once=args.base_tune_once,
                      stability_q=args.stability_q,
                      stability_pfer_max=args.pfer_max)
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(clf.to_json())
        names = ", ".join(clf.meta.selected_names) or "(none)"
        print(f"fit {args.meta}; selected views: {names}")
    elif args.command == "predict":
        with open(args.model, "r", encoding="utf-8") as fh:
            clf = StackedClassifier.from_json(fh.read())
        d = _load(args, outcome=args.outcome)
        p_hat = predict(clf, d)
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "probability"])
            for i, v in enumerate(p_hat):
                w.writerow([i, repr(float(v))])
        print(f"wrote {len(p_hat)} predictions to {args.out}")
    elif args.command == "summarize":
        summarize(args.in_path, args.out)
        print(f"wrote summary to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
