"""Command-line pipeline: align, train, predict, evaluate, benchmark.

Every command is a thin wrapper over the library; all randomness comes
from the configured seed.  Exit codes: 0 success, 2 usage error (from
argument parsing), 3 validation error (bad files, data, or config),
4 training abort (non-finite loss).
"""

import argparse
import hashlib
import sys
from dataclasses import replace

from .bench import CASES, run_benchmark
from .config import RunConfig, load_run_config
from .errors import TrainingAbort, ValidationError
from .fieldio import load_field_csv, load_nodes_csv, save_field_csv
from .gridalign import align_pair, interpolate
from .fieldio import FidelityPair, FieldDataset
from .model import load_model, predict_field, save_model
from .train import evaluate, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_TRAINING = 4


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _load_config(args):
    cfg = load_run_config(args.config) if args.config else RunConfig()
    overrides = {}
    for flag, field in (
        ("epochs", "epochs"),
        ("seed", "seed"),
        ("learning_rate", "learning_rate"),
        ("hf_budget", "hf_budget"),
        ("method", "method"),
        ("power", "idw_power"),
        ("k", "idw_k"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    return replace(cfg, **overrides)


def _write_provenance(path, entries):
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries:
            fh.write(f"{key}={value}\n")


def cmd_align(args):
    cfg = _load_config(args)
    cmap = cfg.column_map()
    lf = load_field_csv(args.lf, cmap)
    hf = load_field_csv(args.hf, cmap)
    method = cfg.interp_method()
    if args.direction == "hf-to-lf":
        resampled = align_pair(lf, hf, method).hf_on_lf_nodes
    else:
        resampled = interpolate(lf, hf.nodes, method)
    save_field_csv(resampled, args.out)
    _write_provenance(
        str(args.out) + ".prov",
        [
            *sorted(method.describe().items()),
            ("direction", args.direction),
            ("lf_file", args.lf),
            ("lf_sha256", _sha256(args.lf)),
            ("hf_file", args.hf),
            ("hf_sha256", _sha256(args.hf)),
        ],
    )
    print(f"wrote {args.out} ({len(resampled)} nodes) and {args.out}.prov")
    return EXIT_OK


def cmd_train(args):
    cfg = _load_config(args)
    cmap = cfg.column_map()
    if args.pair:
        lf = load_field_csv(args.pair[0], cmap)
        hf_aligned = load_field_csv(args.pair[1], cmap)
        pair = FidelityPair(lf, FieldDataset(lf.nodes, hf_aligned.values,
                                             name=hf_aligned.name))
    else:
        lf = load_field_csv(args.lf, cmap)
        hf = load_field_csv(args.hf, cmap)
        pair = align_pair(lf, hf, cfg.interp_method())
    model, report = train(pair, cfg.mpinn_config(), cfg.train_config())
    save_model(model, args.out)
    if args.report:
        report.to_csv(args.report)
    print(
        f"trained {cfg.epochs} epochs in {report.wall_time:.2f}s: "
        f"total={report.total[-1]:.6g} lf_mse={report.lf_mse[-1]:.6g} "
        f"hf_mse={report.hf_mse[-1]:.6g} l2={report.l2_penalty[-1]:.6g} "
        f"alpha={report.final_alpha:.6g}"
    )
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_predict(args):
    cfg = _load_config(args)
    model = load_model(args.model)
    nodes = load_nodes_csv(args.nodes, cfg.column_map())
    save_field_csv(predict_field(model, nodes), args.out)
    print(f"wrote {args.out} ({len(nodes)} nodes)")
    return EXIT_OK


def _fmt_metric(value):
    return "undefined" if value is None else repr(float(value))


def cmd_evaluate(args):
    cfg = _load_config(args)
    model = load_model(args.model)
    truth = load_field_csv(args.truth, cfg.column_map())
    metrics = evaluate(model, truth)
    print(
        f"metrics mse={_fmt_metric(metrics.mse)} rmse={_fmt_metric(metrics.rmse)} "
        f"rel_l2={_fmt_metric(metrics.rel_l2)} "
        f"max_abs_err={_fmt_metric(metrics.max_abs_err)} n={metrics.n}"
    )
    print(f"  mean squared error : {metrics.mse:.6g}")
    print(f"  root mean sq error : {metrics.rmse:.6g}")
    rel = "undefined" if metrics.rel_l2 is None else f"{metrics.rel_l2:.6g}"
    print(f"  relative L2 error  : {rel}")
    print(f"  max absolute error : {metrics.max_abs_err:.6g}")
    print(f"  points             : {metrics.n}")
    return EXIT_OK


def cmd_benchmark(args):
    cfg = _load_config(args)
    seeds = [cfg.seed + i for i in range(args.seeds)]
    result = run_benchmark(args.case, cfg.mpinn_config(), cfg.train_config(), seeds)
    if args.out:
        result.to_csv(args.out)
    print(result.summary())
    return EXIT_OK


def _add_config_flags(sub, with_train_flags=False, with_align_flags=False):
    sub.add_argument("--config", help="INI run configuration file")
    if with_train_flags:
        sub.add_argument("--epochs", type=int, help="override training epochs")
        sub.add_argument("--seed", type=int, help="override the seed")
        sub.add_argument("--learning-rate", dest="learning_rate", type=float,
                         help="override the learning rate")
        sub.add_argument("--hf-budget", dest="hf_budget", type=int,
                         help="subsample this many high-fidelity points")
    if with_align_flags:
        sub.add_argument("--method", choices=("nearest", "idw"),
                         help="interpolation method")
        sub.add_argument("--power", type=float, help="idw distance power")
        sub.add_argument("--k", type=int, help="idw neighbor count")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mpinn",
        description="Multi-fidelity surrogate modeling of scalar fields "
        "on unstructured 2-d grids.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("align", help="resample one field onto another grid")
    p.add_argument("--lf", required=True, help="low-fidelity CSV")
    p.add_argument("--hf", required=True, help="high-fidelity CSV")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--direction", choices=("hf-to-lf", "lf-to-hf"),
                   default="hf-to-lf")
    _add_config_flags(p, with_align_flags=True)
    p.set_defaults(func=cmd_align)

    p = subs.add_parser("train", help="fit the composite model")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--pair", nargs=2, metavar=("LF_CSV", "ALIGNED_HF_CSV"),
                       help="already-aligned pair (shared nodes)")
    group.add_argument("--lf", help="raw low-fidelity CSV (auto-aligns --hf)")
    p.add_argument("--hf", help="raw high-fidelity CSV")
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report", help="per-epoch loss trace CSV")
    _add_config_flags(p, with_train_flags=True, with_align_flags=True)
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("predict", help="evaluate a saved model on nodes")
    p.add_argument("--model", required=True)
    p.add_argument("--nodes", required=True, help="CSV with x,y columns")
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("evaluate", help="metrics of a model against a truth CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--truth", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("benchmark", help="paired closed-form benchmark run")
    p.add_argument("--case", required=True, choices=sorted(CASES))
    p.add_argument("--seeds", type=int, default=1, help="number of seeds (base+i)")
    p.add_argument("--out", help="comparison table CSV")
    _add_config_flags(p, with_train_flags=True)
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "train" and args.lf and not args.hf:
        parser.error("--lf requires --hf")
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"error[{err.category}]: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except TrainingAbort as err:
        print(f"error[{err.category}]: {err}", file=sys.stderr)
        return EXIT_TRAINING
    except OSError as err:
        print(f"error[io]: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
