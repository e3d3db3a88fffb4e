"""Batch command-line front end.

Every subcommand writes its artifacts into ``--out`` together with a
``manifest.json`` recording the resolved configuration, the input and output
files and their sha256 checksums.

Exit status: 0 on success, 2 for usage errors and invalid values, 1 for file
I/O failures, 3 when a forecaster diverges numerically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .completion import VARIANTS, CompletionOptions, complete
from .cp import AlsOptions, cp_als, rank_sweep
from .experiments import (
    TABLE1_HEADER,
    completion_traces,
    missing_sweep,
    rank_error_curve,
    roc_curves,
    table1,
)
from .lstm import TrainConfig
from .pipeline import MODES, PIPELINE_RIDGE, PREDICTORS, PipelineConfig, run, split_learn_predict
from .synth import Scenario, generate, generate_mask, load_scenario, scenario_to_config
from .tensor import as_mask
from .textio import read_mask, read_tensor, write_csv, write_factors, write_mask, write_tensor

log = logging.getLogger("tensorcast")

EXIT_IO = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    version: str = __version__

    def write(self, out_dir):
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
        return path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, np.ndarray)):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def parse_ranks(text):
    """``"1..20"``, ``"5,10,15"`` or ``"10"`` to a list of ints."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(v) for v in text.split(".."))
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad rank list {text!r}; use 'a..b' or 'a,b,c'") from None


def parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def parse_names(choices):
    def parse(text):
        names = [v.strip() for v in text.split(",") if v.strip()]
        bad = [v for v in names if v not in choices]
        if bad or not names:
            raise argparse.ArgumentTypeError(f"choose from {','.join(choices)}; got {text!r}")
        return names
    return parse


# -- shared option groups ------------------------------------------------------

def _add_common(p):
    p.add_argument("--out", required=True, help="output directory (created if missing)")
    p.add_argument("--seed", type=int, default=0, help="base random seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker cap; results do not depend on it")


def _add_scenario(p, with_truth=True):
    g = p.add_argument_group("input")
    g.add_argument("--tensor", help="tensor file; if omitted a scenario is generated")
    if with_truth:
        g.add_argument("--truth", help="ground-truth occupancy file to go with --tensor")
    g.add_argument("--scenario", help="scenario config file (default: built-in scenario)")
    g.add_argument("-F", type=int, dest="F", help="override frequency bins")
    g.add_argument("-T", type=int, dest="T", help="override time slots per day")
    g.add_argument("-N", type=int, dest="N", help="override number of days")


def _add_als(p, ridge):
    g = p.add_argument_group("CP-ALS")
    g.add_argument("--max-sweeps", type=int, default=500)
    g.add_argument("--rel-tol", type=float, default=1e-6)
    g.add_argument("--ridge", type=float, default=ridge, help=f"relative ridge damping (default {ridge:g})")


def _add_pipeline(p):
    g = p.add_argument_group("prediction")
    g.add_argument("--rank", type=int, default=10)
    g.add_argument("--n-learn", type=int, default=80)
    g.add_argument("--n-predict", type=int, default=20)
    g.add_argument("--ar-order", type=int, default=7)
    g.add_argument("--layers", type=int, default=4, help="LSTM layers (default 4)")
    g.add_argument("--width", type=int, default=4, help="LSTM units per layer (default 4)")
    g.add_argument("--lr", type=float, default=0.05, help="Adam learning rate (default 0.05)")
    g.add_argument("--epochs", type=int, default=300)
    g.add_argument("--max-outer-iters", type=int, default=50)
    g.add_argument("--outer-rel-tol", type=float, default=1e-4)
    _add_als(p, PIPELINE_RIDGE)


def build_parser():
    parser = argparse.ArgumentParser(prog="tensorcast", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("generate", help="draw a synthetic occupancy tensor")
    _add_common(p)
    p.add_argument("--scenario", help="scenario config file (default: built-in scenario)")
    p.add_argument("-F", type=int, dest="F")
    p.add_argument("-T", type=int, dest="T")
    p.add_argument("-N", type=int, dest="N")
    p.add_argument("--missing-ratio", type=float, default=None, help="also write a random mask")
    p.add_argument("--mask-seed", type=int, default=0)

    p = sub.add_parser("decompose", help="CP-ALS fit and rank sweep")
    _add_common(p)
    p.add_argument("--tensor", required=True)
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--ranks", type=parse_ranks, default=None, help="rank sweep, e.g. 1..20")
    _add_als(p, 0.0)

    p = sub.add_parser("complete", help="fill missing entries by iterative CP imputation")
    _add_common(p)
    p.add_argument("--tensor", required=True)
    p.add_argument("--mask", required=True, help="0/1 mask file, 1 = observed")
    p.add_argument("--truth", help="complete tensor, only used to report hidden-entry error")
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--variant", choices=VARIANTS, default="masked")
    p.add_argument("--max-outer-iters", type=int, default=50)
    p.add_argument("--outer-rel-tol", type=float, default=1e-4)
    _add_als(p, 0.0)

    p = sub.add_parser("predict", help="forecast the last days and score them")
    _add_common(p)
    _add_scenario(p, with_truth=False)
    p.add_argument("--mask", help="mask for the learning days; enables joint completion")
    p.add_argument("--variant", choices=VARIANTS, default="masked")
    p.add_argument("--mode", choices=MODES, default="cpd")
    p.add_argument("--predictor", choices=PREDICTORS, default="lstm")
    _add_pipeline(p)

    p = sub.add_parser("evaluate", help="prediction error against missing ratio")
    _add_common(p)
    _add_scenario(p, with_truth=False)
    p.add_argument("--ratios", type=parse_floats, default=[0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument("--variants", type=parse_names(VARIANTS), default=list(VARIANTS))
    p.add_argument("--mask-seed", type=int, default=0)
    p.add_argument("--predictor", choices=PREDICTORS, default="lstm")
    _add_pipeline(p)

    p = sub.add_parser("roc", help="detector ROC curves for each predictor")
    _add_common(p)
    _add_scenario(p)
    p.add_argument("--predictors", type=parse_names(PREDICTORS), default=list(PREDICTORS))
    p.add_argument("--num-thresholds", type=int, default=200)
    _add_pipeline(p)

    p = sub.add_parser("table1", help="AR and LSTM, raw and CP-based, on one scenario")
    _add_common(p)
    _add_scenario(p, with_truth=False)
    _add_pipeline(p)

    p = sub.add_parser("figures", help="all curve CSVs in one run")
    _add_common(p)
    _add_scenario(p)
    p.add_argument("--ranks", type=parse_ranks, default=list(range(1, 21)))
    p.add_argument("--ratios", type=parse_floats, default=[0.1, 0.2, 0.3, 0.4, 0.5])
    p.add_argument("--trace-ratio", type=float, default=0.3, help="missing ratio for the iteration traces")
    p.add_argument("--mask-seed", type=int, default=0)
    p.add_argument("--num-thresholds", type=int, default=200)
    p.add_argument("--predictor", choices=PREDICTORS, default="lstm")
    _add_pipeline(p)
    return parser


# -- helpers -------------------------------------------------------------------

class _Run:
    """Collects inputs and outputs for the manifest."""

    def __init__(self, args):
        self.args = args
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        self.inputs = {}
        self.outputs = []
        self.config = {k: v for k, v in vars(args).items() if k not in ("func", "verbose")}

    def read(self, path, reader):
        self.inputs[path] = sha256(path)
        return reader(path)

    def path(self, name):
        p = os.path.join(self.out, name)
        self.outputs.append(p)
        return p

    def text(self, name, content):
        with open(self.path(name), "w") as fh:
            fh.write(content)

    def finish(self):
        outputs = {os.path.basename(p): sha256(p) for p in self.outputs}
        manifest = RunManifest(self.args.command, self.config, self.args.seed, self.inputs, outputs)
        manifest.write(self.out)


def _scenario(args):
    overrides = {"F": args.F, "T": args.T, "N": args.N, "seed": args.seed}
    if args.scenario:
        return load_scenario(args.scenario, **overrides)
    return Scenario(**{k: v for k, v in overrides.items() if v is not None})


def _load_data(args, rr):
    """Tensor and (possibly None) ground truth, from files or a fresh scenario."""
    if args.tensor:
        x = rr.read(args.tensor, read_tensor)
        truth = None
        if getattr(args, "truth", None):
            truth = rr.read(args.truth, read_mask)
        return x, truth
    if args.scenario:
        rr.inputs[args.scenario] = sha256(args.scenario)
    s = _scenario(args)
    rr.config["scenario_resolved"] = asdict(s)
    return generate(s)


def _pipeline_config(args, **kw):
    als = AlsOptions(max_sweeps=args.max_sweeps, rel_tol=args.rel_tol, seed=args.seed, ridge=args.ridge)
    train = TrainConfig(args.layers, args.width, args.lr, args.epochs, seed=args.seed)
    values = dict(
        rank=args.rank,
        n_learn=args.n_learn,
        n_predict=args.n_predict,
        predictor=getattr(args, "predictor", "lstm"),
        als=als,
        train=train,
        ar_order=args.ar_order,
        seed=args.seed,
        threads=args.threads,
    )
    values.update(kw)
    cfg = PipelineConfig(**values)
    return replace(
        cfg,
        completion=replace(
            cfg.completion_options(),
            cp_variant=getattr(args, "variant", "masked"),
            max_outer_iters=args.max_outer_iters,
            outer_rel_tol=args.outer_rel_tol,
        ),
    )


def _check_days(x, cfg):
    if x.shape[2] != cfg.n_learn + cfg.n_predict:
        raise ValueError(
            f"tensor has {x.shape[2]} days; --n-learn + --n-predict = {cfg.n_learn + cfg.n_predict}"
        )


# -- subcommands ---------------------------------------------------------------

def cmd_generate(args, rr):
    if args.scenario:
        rr.inputs[args.scenario] = sha256(args.scenario)
    s = _scenario(args)
    rr.config["scenario_resolved"] = asdict(s)
    x, truth = generate(s)
    rr.text("scenario.cfg", scenario_to_config(s))
    write_tensor(rr.path("tensor.txt"), x)
    write_mask(rr.path("truth.txt"), truth)
    if args.missing_ratio is not None:
        write_mask(rr.path("mask.txt"), generate_mask(s.dims, args.missing_ratio, args.mask_seed))


def cmd_decompose(args, rr):
    x = rr.read(args.tensor, read_tensor)
    opts = AlsOptions(args.max_sweeps, args.rel_tol, args.seed, args.ridge)
    fs, history = cp_als(x, args.rank, opts)
    write_factors(rr.path("factors.txt"), fs)
    write_csv(rr.path("fit_history.csv"), ("sweep", "e_cpd"), enumerate(history, 1))
    if args.ranks:
        write_csv(rr.path("rank_sweep.csv"), ("rank", "e_cpd"), rank_sweep(x, args.ranks, opts))


def cmd_complete(args, rr):
    x = rr.read(args.tensor, read_tensor)
    mask = as_mask(rr.read(args.mask, read_mask), x.shape)
    truth = rr.read(args.truth, read_tensor) if args.truth else None
    opts = CompletionOptions(
        rank=args.rank,
        cp_variant=args.variant,
        max_outer_iters=args.max_outer_iters,
        outer_rel_tol=args.outer_rel_tol,
        als=AlsOptions(args.max_sweeps, args.rel_tol, args.seed, args.ridge),
    )
    result = complete(np.where(mask, x, 0.0), mask, opts, truth=truth)
    write_tensor(rr.path("completed.txt"), result.tensor)
    write_factors(rr.path("factors.txt"), result.factors)
    write_csv(rr.path("completion_history.csv"), ("iteration", "observed_error", "hidden_error"), result.history)
    if not result.converged:
        log.warning("completion stopped at --max-outer-iters before meeting --outer-rel-tol")


def cmd_predict(args, rr):
    x, _ = _load_data(args, rr)
    cfg = _pipeline_config(args, mode=args.mode)
    _check_days(x, cfg)
    mask = rr.read(args.mask, read_mask) if args.mask else None
    report = run(x, cfg, mask=mask)
    rr.text("report.json", report.to_json() + "\n")
    write_tensor(rr.path("predicted.txt"), report.predicted)
    if report.factors is not None:
        write_factors(rr.path("factors.txt"), report.factors)
    print(f"e_p = {report.e_p:.6f}  learning {report.learning_time:.2f}s  total {report.total_time:.2f}s")


def cmd_evaluate(args, rr):
    x, _ = _load_data(args, rr)
    cfg = _pipeline_config(args)
    _check_days(x, cfg)
    rows = missing_sweep(x, args.ratios, args.variants, cfg, args.mask_seed)
    write_csv(
        rr.path("missing_sweep.csv"),
        ("missing_ratio", "variant", "completion_error", "e_p", "outer_iterations"),
        rows,
    )


def _write_roc(rr, curves):
    summary = {}
    for name, curve in curves.items():
        write_csv(rr.path(f"roc_{name}.csv"), ("gamma", "p_f", "p_d"), curve.rows())
        summary[name] = {"auc": curve.auc, "points": len(curve.gamma)}
    rr.text("roc_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    for name, item in summary.items():
        print(f"{name}: AUC = {item['auc']:.4f}")


def _need_truth(truth):
    if truth is None:
        raise ValueError("ROC needs ground truth: pass --truth with --tensor, or generate a scenario")


def cmd_roc(args, rr):
    x, truth = _load_data(args, rr)
    _need_truth(truth)
    cfg = _pipeline_config(args)
    _check_days(x, cfg)
    _write_roc(rr, roc_curves(x, truth, args.predictors, cfg, args.num_thresholds))


def cmd_table1(args, rr):
    x, _ = _load_data(args, rr)
    cfg = _pipeline_config(args)
    _check_days(x, cfg)
    rows, _ = table1(x, cfg)
    write_csv(rr.path("table1.csv"), TABLE1_HEADER, rows)
    for row in rows:
        print(f"{row[0]:<9} e_p {row[4]:6.2f}%  learning {row[2]:8.2f}s")


def cmd_figures(args, rr):
    x, truth = _load_data(args, rr)
    _need_truth(truth)
    cfg = _pipeline_config(args)
    _check_days(x, cfg)
    x_learn, _ = split_learn_predict(x, cfg.n_learn)
    mask = generate_mask(x_learn.shape, args.trace_ratio, args.mask_seed)
    write_csv(
        rr.path("completion_history.csv"),
        ("variant", "iteration", "observed_error", "hidden_error"),
        completion_traces(x_learn, mask, cfg),
    )
    write_csv(
        rr.path("missing_sweep.csv"),
        ("missing_ratio", "variant", "completion_error", "e_p", "outer_iterations"),
        missing_sweep(x, args.ratios, VARIANTS, cfg, args.mask_seed),
    )
    write_csv(rr.path("rank_sweep.csv"), ("rank", "e_cpd", "e_p"), rank_error_curve(x, args.ranks, cfg))
    _write_roc(rr, roc_curves(x, truth, PREDICTORS, cfg, args.num_thresholds))


COMMANDS = {
    "generate": cmd_generate,
    "decompose": cmd_decompose,
    "complete": cmd_complete,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "roc": cmd_roc,
    "table1": cmd_table1,
    "figures": cmd_figures,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        rr = _Run(args)
        COMMANDS[args.command](args, rr)
        rr.finish()
    except FloatingPointError as exc:
        print(f"tensorcast {args.command}: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except OSError as exc:
        print(f"tensorcast {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"tensorcast {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
