"""Command-line entry point.

Every subcommand prints one JSON document on stdout; logs go to stderr.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import analysis, baselines, dataio, retrieval
from .errors import NumericalError, SDCError
from .hashing import encode
from .trainer import TrainConfig, train

log = logging.getLogger("sdchash")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_global(p, suppress: bool):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=default, help="master random seed")
    p.add_argument("--config", default=default, help="JSON file of flat settings; flags win")
    p.add_argument("--out", default=default, help="output path")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sdchash", description="Train, apply and evaluate binary hash codes")
    _add_global(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        _add_global(p, suppress=True)
        return p

    p = command("gen-data", "generate a synthetic clustered feature set")
    p.add_argument("--clusters", type=int)
    p.add_argument("--per", type=int, help="points per cluster")
    p.add_argument("--dim", type=int)
    p.add_argument("--center-scale", type=float)
    p.add_argument("--within-std", type=float)

    p = command("train", "train a hash layer on a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--bits", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lambda-q", type=float)
    p.add_argument("--lambda-cl", type=float)
    p.add_argument("--alpha", type=float, help="calibration Beta alpha")
    p.add_argument("--beta", type=float, help="calibration Beta beta")
    p.add_argument("--objective", choices=["sdc", "preservation"])

    p = command("encode", "encode features into a packed code file")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)

    p = command("retrieve", "top-k Hamming search")
    p.add_argument("--queries", required=True, help="query code file")
    p.add_argument("--gallery", required=True, help="gallery code file")
    p.add_argument("--k", type=int, default=10)

    p = command("eval", "mAP@k and PR curve on a query/gallery split")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--codes")
    p.add_argument("--features", required=True, help="feature file providing labels (and inputs for --model)")
    p.add_argument("--k", type=int, default=100)
    p.add_argument("--n-query", type=int, help="queries drawn at random; the rest form the gallery")
    p.add_argument("--pr-csv", help="also write the PR curve as CSV")

    p = command("analyze", "similarity-collapse histogram report")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--model")
    src.add_argument("--codes")
    p.add_argument("--features", required=True)
    p.add_argument("--n-pos", type=int, default=10_000)
    p.add_argument("--n-neg", type=int, default=100_000)
    p.add_argument("--bins", type=int, default=analysis.DEFAULT_BINS)

    p = command("baseline", "fit an ITQ or LSH baseline")
    p.add_argument("--method", choices=["itq", "lsh"], required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--bits", type=int)
    p.add_argument("--iters", type=int, default=50)
    return parser


def _load_config(path):
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return cfg


def _pick(flag, config, key, default):
    if flag is not None:
        return flag
    return config.get(key, default)


def _emit(doc):
    sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


def _require_out(args):
    if not getattr(args, "out", None):
        raise UsageError(f"{args.command} requires --out")
    return args.out


def _cmd_gen_data(args, cfg, seed):
    spec = dataio.SyntheticSpec(
        n_clusters=_pick(args.clusters, cfg, "n_clusters", 4),
        points_per_cluster=_pick(args.per, cfg, "points_per_cluster", 250),
        dim=_pick(args.dim, cfg, "dim", 128),
        center_scale=_pick(args.center_scale, cfg, "center_scale", 0.5),
        within_std=_pick(args.within_std, cfg, "within_std", 1.0),
        seed=seed,
    )
    out = _require_out(args)
    fm = dataio.generate_synthetic(spec)
    dataio.write_features(out, fm)
    _emit({"command": "gen-data", "out": out, "n": fm.n, "d": fm.d, "spec": spec.to_dict()})


def _cmd_train(args, cfg, seed):
    values = {**cfg, "seed": seed}
    overrides = {
        "k_bits": args.bits,
        "epochs": args.epochs,
        "batch_size": args.batch_size,
        "lr": args.lr,
        "lambda_q": args.lambda_q,
        "lambda_cl": args.lambda_cl,
        "calib_alpha": args.alpha,
        "calib_beta": args.beta,
        "objective": args.objective,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    tc = TrainConfig.from_dict(values)
    out = _require_out(args)
    fm = dataio.read_features(args.features)
    model, report = train(fm, tc)
    dataio.write_model(out, model, config=tc.to_dict())
    for r in report.records:
        log.debug("epoch %d total %.6f (%.2fs)", r.epoch, r.total, r.wall_time)
    _emit({"command": "train", "out": out, "config": tc.to_dict(), **report.to_dict()})


def _encode_with(model, fm):
    if isinstance(model, baselines.ItqModel):
        return baselines.encode_itq(model, fm)
    return encode(model, fm.x)


def _cmd_encode(args, cfg, seed):
    out = _require_out(args)
    model = dataio.read_any_model(args.model)
    fm = dataio.read_features(args.features)
    codes = _encode_with(model, fm)
    dataio.write_codes(out, codes)
    _emit({"command": "encode", "out": out, "n": codes.n, "k_bits": codes.k_bits})


def _cmd_retrieve(args, cfg, seed):
    queries = dataio.read_codes(args.queries)
    gallery = dataio.read_codes(args.gallery)
    results = retrieval.search_topk(queries, gallery, args.k)
    doc = {
        "command": "retrieve",
        "k": args.k,
        "results": [
            {"query": r.query_index, "indices": r.indices.tolist(), "distances": r.distances.tolist()}
            for r in results
        ],
    }
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(doc, sort_keys=True) + "\n")
    _emit(doc)


def _codes_for(args, fm):
    if args.model:
        return _encode_with(dataio.read_any_model(args.model), fm)
    codes = dataio.read_codes(args.codes)
    if codes.n != fm.n:
        raise SDCError(f"{codes.n} codes but {fm.n} labelled feature rows")
    return codes


def _cmd_eval(args, cfg, seed):
    fm = dataio.read_features(args.features)
    if fm.labels is None:
        raise SDCError(f"{args.features} carries no labels")
    codes = _codes_for(args, fm)
    n_query = _pick(args.n_query, cfg, "n_query", min(100, max(1, fm.n // 10)))
    if not 1 <= n_query < fm.n:
        raise SDCError(f"n_query must be in [1, {fm.n - 1}]")
    perm = np.random.default_rng(seed).permutation(fm.n)
    q, g = np.sort(perm[:n_query]), np.sort(perm[n_query:])
    summary = retrieval.evaluate(
        codes[q], codes[g], fm.labels[q], fm.labels[g], k=args.k, multilabel=fm.multilabel
    )
    if args.pr_csv:
        summary.write_pr_csv(args.pr_csv)
    doc = {"command": "eval", "seed": seed, "n_query": int(n_query), "n_gallery": int(g.size), **summary.to_dict()}
    if getattr(args, "out", None):
        Path(args.out).write_text(json.dumps(doc, sort_keys=True) + "\n")
    _emit(doc)


def _cmd_analyze(args, cfg, seed):
    fm = dataio.read_features(args.features)
    if fm.labels is None:
        raise SDCError(f"{args.features} carries no labels")
    if args.model:
        source = _encode_with(dataio.read_any_model(args.model), fm)
    elif args.codes:
        source = dataio.read_codes(args.codes)
    else:
        source = None
    report = analysis.collapse_report(
        source, fm.labels, features=fm, n_pos=args.n_pos, n_neg=args.n_neg,
        bins=args.bins, seed=seed, multilabel=fm.multilabel,
    )
    doc = {"command": "analyze", **report.to_dict()}
    if getattr(args, "out", None):
        hist, pairs = report.write_csvs(args.out)
        doc["histogram_csv"] = str(hist)
        doc["pairs_csv"] = str(pairs)
    _emit(doc)


def _cmd_baseline(args, cfg, seed):
    out = _require_out(args)
    fm = dataio.read_features(args.features)
    bits = _pick(args.bits, cfg, "k_bits", 64)
    settings = {"method": args.method, "k_bits": bits, "seed": seed}
    if args.method == "itq":
        settings["iters"] = args.iters
        model = baselines.fit_itq(fm, bits, iters=args.iters, seed=seed)
        dataio.write_itq(out, model, config=settings)
        extra = {"quantization_error": model.errors[-1]}
    else:
        model = baselines.fit_lsh(fm.d, bits, seed=seed)
        dataio.write_model(out, model, config=settings)
        extra = {}
    _emit({"command": "baseline", "out": out, **settings, **extra})


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "encode": _cmd_encode,
    "retrieve": _cmd_retrieve,
    "eval": _cmd_eval,
    "analyze": _cmd_analyze,
    "baseline": _cmd_baseline,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
            stream=sys.stderr,
        )
        cfg = _load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        _COMMANDS[args.command](args, cfg, seed)
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip() + "\n")
        return EXIT_USAGE
    except NumericalError as exc:
        sys.stderr.write(f"sdchash: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    except (SDCError, OSError, ValueError) as exc:
        sys.stderr.write(f"sdchash: error: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
