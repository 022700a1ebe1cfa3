"""Command-line driver: ``krerank {rerank,eval,sweep,synth}``."""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import sys
from decimal import Decimal, InvalidOperation

from krerank import io
from krerank.aggregate import original_ranking, rerank_components
from krerank.baselines import average_query_expansion
from krerank.core import RerankParams, validate_params
from krerank.distance import MetricSpec, pairwise_distance
from krerank.errors import InvalidArgs, KReRankError
from krerank.evaluation import GroundTruth, evaluate
from krerank.synthetic import generate_synthetic, split_probe_gallery

log = logging.getLogger("krerank")

SWEEPABLE = ("k1", "k2", "lambda")


def parse_sweep(text):
    """``name=start:stop:step`` (inclusive) or ``name=v1,v2,...``."""
    name, sep, spec = text.partition("=")
    name = name.strip()
    if not sep or name not in SWEEPABLE:
        raise argparse.ArgumentTypeError(f"expected one of {SWEEPABLE} followed by '=', got {text!r}")
    try:
        if ":" in spec:
            start, stop, step = (Decimal(p) for p in spec.split(":"))
            if step <= 0 or stop < start:
                raise argparse.ArgumentTypeError(f"bad range {spec!r}")
            count = int((stop - start) / step) + 1
            values = [start + i * step for i in range(count)]
        else:
            values = [Decimal(p) for p in spec.split(",") if p.strip()]
    except (InvalidOperation, ValueError):
        raise argparse.ArgumentTypeError(f"bad sweep values {spec!r}") from None
    if not values:
        raise argparse.ArgumentTypeError(f"empty sweep {text!r}")
    if name == "lambda":
        return name, [float(v) for v in values]
    if any(v != v.to_integral_value() for v in values):
        raise argparse.ArgumentTypeError(f"{name} values must be integers")
    return name, [int(v) for v in values]


def _add_input_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", metavar="PATH", help="KRF1 or CSV features, probes first")
    src.add_argument("--dist", metavar="PATH", help="precomputed square distance matrix (CSV/.npy)")
    p.add_argument("--n-probe", type=int, required=True)
    p.add_argument("--k1", type=int, default=20)
    p.add_argument("--k2", type=int, default=6)
    p.add_argument("--lambda", dest="lambda_value", type=float, default=0.3)
    p.add_argument("--metric", choices=("euclidean", "mahalanobis"), default="euclidean")
    p.add_argument("--metric-matrix", metavar="PATH")
    p.add_argument("--method", choices=("kreciprocal", "aqe", "none"), default="kreciprocal")
    p.add_argument("--aqe-k", type=int, default=5, help="expansion size for --method aqe")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--workers", type=int, default=1)


def _add_eval_args(p):
    p.add_argument("--max-rank", type=int, default=50)
    p.add_argument("--junk", choices=("none", "camid"), default="none")
    p.add_argument("--labels", metavar="PATH", help="id,cam CSV (needed with --dist)")


def build_parser():
    parser = argparse.ArgumentParser(prog="krerank", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rerank", help="write re-ranked lists as CSV")
    _add_input_args(p)
    p.add_argument("--out", default="-", metavar="PATH")

    p = sub.add_parser("eval", help="re-rank and report CMC/mAP")
    _add_input_args(p)
    _add_eval_args(p)
    p.add_argument("--out", metavar="PATH", help="also write the report as CSV")

    p = sub.add_parser("sweep", help="rank-1/mAP over a parameter grid")
    _add_input_args(p)
    _add_eval_args(p)
    p.add_argument("--sweep", type=parse_sweep, action="append", required=True,
                   metavar="NAME=START:STOP:STEP")
    p.add_argument("--out", default="-", metavar="PATH")

    p = sub.add_parser("synth", help="generate clustered synthetic features")
    p.add_argument("--n-ids", type=int, default=50)
    p.add_argument("--per-id", type=int, default=8)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--sigma", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-cams", type=int, default=2)
    p.add_argument("--probes-per-id", type=int, default=1,
                   help="move this many rows per identity to the front as probes (0 = no split)")
    p.add_argument("--out", required=True, metavar="PATH", help=".krf or .csv")
    return parser


class _Inputs:
    def __init__(self, args):
        self.args = args
        self.items = None
        self.metric = MetricSpec()
        if args.metric == "mahalanobis":
            if not args.metric_matrix:
                raise InvalidArgs("--metric mahalanobis needs --metric-matrix")
            self.metric = MetricSpec.mahalanobis(io.load_matrix(args.metric_matrix))
        if args.features:
            self.items = io.load_features(args.features)
            self.dist = pairwise_distance(self.items, self.metric, args.n_probe, args.workers)
        else:
            self.dist = io.load_distance_matrix(args.dist, args.n_probe)
        if args.method == "aqe" and self.items is None:
            raise InvalidArgs("--method aqe needs --features")

    def truth(self):
        args = self.args
        n_p = self.dist.n_probe
        if getattr(args, "labels", None):
            ids, cams = io.load_labels(args.labels)
        elif self.items is not None:
            ids, cams = self.items.ids, self.items.cams
        else:
            raise InvalidArgs("evaluation with --dist needs --labels")
        if len(ids) != self.dist.n_total:
            raise InvalidArgs(f"{len(ids)} labels for {self.dist.n_total} items")
        return GroundTruth(ids[:n_p], ids[n_p:], cams[:n_p], cams[n_p:], junk=args.junk)

    def rankings(self, params):
        args = self.args
        if args.method == "none":
            return original_ranking(self.dist, normalize=not args.no_normalize)
        if args.method == "aqe":
            return average_query_expansion(self.items, args.n_probe, args.aqe_k, self.metric)
        out = rerank_components(
            self.dist, params=params, normalize=not args.no_normalize, workers=args.workers
        )
        return out.rankings()


def _params(args):
    return RerankParams(args.k1, args.k2, args.lambda_value)


def _open_out(path):
    return sys.stdout if path == "-" else open(path, "w", newline="")


def cmd_rerank(args):
    inputs = _Inputs(args)
    params = validate_params(_params(args), inputs.dist.n_total)
    results = inputs.rankings(params)
    fh = _open_out(args.out)
    try:
        io.write_rankings(fh, results)
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_eval(args):
    inputs = _Inputs(args)
    params = validate_params(_params(args), inputs.dist.n_total)
    report = evaluate(inputs.rankings(params), inputs.truth(), args.max_rank)
    print(report.to_text())
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(report.to_csv())


def cmd_sweep(args):
    inputs = _Inputs(args)
    truth = inputs.truth()
    names = [name for name, _ in args.sweep]
    if len(set(names)) != len(names):
        raise InvalidArgs("each parameter may be swept once")
    base = {"k1": args.k1, "k2": args.k2, "lambda": args.lambda_value}
    rows = []
    for combo in itertools.product(*(values for _, values in args.sweep)):
        setting = dict(base, **dict(zip(names, combo)))
        params = validate_params(
            RerankParams(setting["k1"], setting["k2"], setting["lambda"]), inputs.dist.n_total
        )
        report = evaluate(inputs.rankings(params), truth, args.max_rank)
        log.info("%s -> rank1 %.4f mAP %.4f", setting, report.rank1, report.map)
        rows.append([*combo, repr(report.rank1), repr(report.map)])
    fh = _open_out(args.out)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*names, "rank1", "mAP"])
        writer.writerows(rows)
    finally:
        if fh is not sys.stdout:
            fh.close()


def cmd_synth(args):
    items = generate_synthetic(args.n_ids, args.per_id, args.dim, args.sigma, args.seed, args.n_cams)
    n_probe = 0
    if args.probes_per_id > 0:
        items, n_probe = split_probe_gallery(items, args.probes_per_id)
    if args.out.lower().endswith(".csv"):
        io.save_features_csv(args.out, items)
    else:
        io.save_features(args.out, items)
    print(f"wrote {len(items)} rows to {args.out}; n_probe={n_probe}", file=sys.stderr)


COMMANDS = {"rerank": cmd_rerank, "eval": cmd_eval, "sweep": cmd_sweep, "synth": cmd_synth}


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except (KReRankError, OSError, ValueError) as exc:
        print(f"krerank: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
