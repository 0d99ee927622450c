"""Command-line entry point: ``cotec {gen,cluster,sitec,experiment,oracle}``.

Exit codes: 0 success, 1 usage error, 2 data or domain error, 3 oracle budget refusal.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import datagen, experiment, tnsio
from .divergence import KL, from_token
from .exceptions import BudgetExceeded, DimensionError, DomainError
from .tenclus import VARIANTS, RunConfig, make_coclustering, variant_pipeline
from .tensor import DenseTensor
from .verify import DEFAULT_BUDGET, bound_for, oracle_optimal

log = logging.getLogger("cotec")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text, sep=","):
    try:
        vals = [int(x) for x in text.split(sep)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers separated by {sep!r}: {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"values must be positive: {text!r}")
    return tuple(vals)


def _shape(text):
    return _int_list(text, "x")


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def _variant_list(text):
    vals = tuple(text.split(","))
    for v in vals:
        if v not in VARIANTS:
            raise argparse.ArgumentTypeError(f"unknown variant {v!r}")
    return vals


def _nonneg_int(text):
    val = int(text)
    if val < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return val


def _pos_int(text):
    val = int(text)
    if val < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--div", default="sqeuclidean",
                        choices=["sqeuclidean", "kl", "l1", "kernel:absdiff", "kernel:sqdiff"])
    common.add_argument("--seed", type=_nonneg_int, default=0)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--max-iters", type=_pos_int, default=100)
    common.add_argument("--restarts", type=_pos_int, default=1)
    common.add_argument("--output-dir", default=None)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--eps", type=float, default=1e-6, help="KL positivity floor")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="cotec", description="Tensor co-clustering with approximation guarantees.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("gen", parents=[common], help="write a planted tensor and its truth file")
    gen.add_argument("--shape", type=_shape, required=True)
    gen.add_argument("--k", type=_int_list, required=True)
    gen.add_argument("--noise", type=float, default=1.0)
    gen.add_argument("--mode", choices=datagen.MODES, default=None,
                     help="noise model; defaults to poisson for --div kl, else gaussian")
    gen.add_argument("--means-range", type=_float_list, default=(1.0, 10.0))
    gen.add_argument("--poisson-scale", type=float, default=1.0)
    gen.add_argument("--name", default="planted")

    for name, default, text in (("cluster", "sk", "run a clustering variant on a tensor file"),
                                ("sitec", "skc", "same as cluster, restricted to c-variants")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--input", required=True)
        p.add_argument("--k", type=_int_list, required=True)
        p.add_argument("--variant", default=default, choices=VARIANTS)
        p.add_argument("--truth", default=None, help="truth sidecar; adds the empirical factor")
        p.add_argument("--clamp", action="store_true", help="clamp entries to the KL floor before clustering")

    exp = sub.add_parser("experiment", parents=[common], help="noise sweep over planted tensors")
    exp.add_argument("--shape", type=_shape, default=(30, 30, 20))
    exp.add_argument("--k", type=_int_list, default=(5, 5, 5))
    exp.add_argument("--noise-list", type=_float_list, default=(0.5, 1.0, 2.0, 3.0))
    exp.add_argument("--tensors", type=_pos_int, default=3)
    exp.add_argument("--trials", type=_pos_int, default=20)
    exp.add_argument("--variants", type=_variant_list, default=VARIANTS)
    exp.add_argument("--means-range", type=_float_list, default=(1.0, 10.0))
    exp.add_argument("--poisson-scale", type=float, default=1.0)
    exp.add_argument("--timing", action="store_true", help="add wall time to the report metadata")

    orc = sub.add_parser("oracle", parents=[common], help="exhaustive optimum of a small instance")
    orc.add_argument("--input", required=True)
    orc.add_argument("--k", type=_int_list, required=True)
    orc.add_argument("--budget", type=_pos_int, default=DEFAULT_BUDGET)
    orc.add_argument("--result", default=None, help="JSON output of `cotec cluster` to check")
    orc.add_argument("--variant", default=None, choices=VARIANTS, help="run this variant and check it")
    orc.add_argument("--alpha-t", type=float, default=1.0, help="1D approximation factor in the bound")
    return parser


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _kv_csv(record: dict) -> str:
    lines = ["field,value"]
    for key in sorted(record):
        val = record[key]
        if isinstance(val, (list, dict)):
            val = json.dumps(val, sort_keys=True)
        elif val is None:
            val = ""
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key},\"{val}\"" if "," in str(val) else f"{key},{val}")
    return "\n".join(lines) + "\n"


def _emit(args, record: dict, stem: str, stdout) -> None:
    text = _dumps(record) if args.format == "json" else _kv_csv(record)
    stdout.write(text)
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        with open(os.path.join(args.output_dir, f"{stem}.{args.format}"), "w", encoding="utf-8") as fh:
            fh.write(text)


def _spec(args):
    try:
        return from_token(args.div, eps=args.eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load(args, spec) -> DenseTensor:
    try:
        a = tnsio.read_tensor(args.input)
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from None
    except tnsio.TNSFormatError as exc:
        raise DataError(f"{args.input}: {exc}") from None
    if getattr(args, "clamp", False) and spec.kind == KL:
        a = DenseTensor(np.maximum(a.data, spec.eps))
    spec.check_domain(a.data, "tensor entry")
    return a


def _check_k(a, k):
    if len(k) != a.order:
        raise UsageError(f"--k has {len(k)} entries, tensor has order {a.order}")
    for j, (n, kj) in enumerate(zip(a.shape, k)):
        if kj > n:
            raise UsageError(f"--k: mode {j} has {n} indices, cannot form {kj} clusters")


def cmd_gen(args, stdout):
    spec = _spec(args)
    mode = args.mode or ("poisson" if spec.kind == KL else "gaussian")
    try:
        planted = datagen.PlantedSpec(args.shape, args.k, args.noise, mode, tuple(args.means_range),
                                      args.seed, args.poisson_scale, args.eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    a, truth = datagen.generate(planted)
    outdir = args.output_dir or "."
    os.makedirs(outdir, exist_ok=True)
    tpath = os.path.join(outdir, f"{args.name}.tns")
    spath = os.path.join(outdir, f"{args.name}.truth")
    tnsio.write_tensor(tpath, a)
    datagen.write_truth(spath, truth)
    record = {"tensor": tpath, "truth": spath, "shape": list(a.shape), "k": list(truth.k),
              "mode": mode, "noise": args.noise, "seed": args.seed, "J_true": truth.objective,
              "divergence": truth.divergence.name}
    stdout.write(_dumps(record) if args.format == "json" else _kv_csv(record))
    return EXIT_OK


def _run_config(args, k) -> RunConfig:
    return RunConfig(tuple(k), args.seed, args.restarts, args.max_iters, args.tol, args.max_iters)


def _cluster_record(args, a, res, spec) -> dict:
    cc = res.clustering
    return {
        "variant": res.variant,
        "divergence": spec.name,
        "shape": list(a.shape),
        "k": list(cc.k),
        "seed": args.seed,
        "J": cc.objective,
        "labels": [lab.tolist() for lab in cc.labels],
        "means": cc.means.data.tolist(),
        "empty_blocks": cc.empty_blocks,
        "sitec_sweeps": res.sweeps,
        "dim_objectives": [float(x) for x in cc.dim_objectives],
    }


def cmd_cluster(args, stdout):
    spec = _spec(args)
    if args.command == "sitec" and not args.variant.endswith("c"):
        raise UsageError("the sitec command needs a c-variant (rc, sc, rkc, skc)")
    a = _load(args, spec)
    _check_k(a, args.k)
    res = variant_pipeline(a, args.variant, _run_config(args, args.k), spec)
    record = _cluster_record(args, a, res, spec)
    if args.truth:
        try:
            labels, tk, _ = datagen.read_truth(args.truth)
        except (OSError, ValueError) as exc:
            raise DataError(f"truth file: {exc}") from None
        try:
            truth = make_coclustering(a, labels, spec)
        except (DimensionError, ValueError) as exc:
            raise DataError(f"truth file does not fit the tensor: {exc}") from None
        record["J_truth"] = truth.objective
        record["alpha_hat"] = res.clustering.objective / truth.objective if truth.objective > 0 else None
        try:
            record["theoretical_bound"] = bound_for(a, spec, 1.0)
        except ValueError:
            record["theoretical_bound"] = None
    _emit(args, record, "cluster", stdout)
    return EXIT_OK


def cmd_experiment(args, stdout):
    spec = _spec(args)
    if spec.name not in ("sqeuclidean", "kl"):
        raise UsageError("experiment supports --div sqeuclidean or kl")
    mode = "poisson" if spec.kind == KL else "gaussian"
    if len(args.shape) != len(args.k) or any(kj > n for kj, n in zip(args.k, args.shape)):
        raise UsageError(f"--k {args.k} does not fit --shape {args.shape}")
    start = time.perf_counter()
    report = experiment.run_experiment(
        args.shape, args.k, args.noise_list, args.tensors, args.trials, args.variants, mode,
        args.seed, args.restarts, args.max_iters, args.tol, args.means_range, args.poisson_scale,
    )
    if args.timing:
        report.metadata["wall_time_s"] = round(time.perf_counter() - start, 3)
    log.info("experiment finished in %.2fs", time.perf_counter() - start)
    if args.output_dir:
        os.makedirs(args.output_dir, exist_ok=True)
        files = {
            "experiment_table.csv": experiment.table_csv(report),
            "experiment_factors.csv": experiment.factor_csv(report),
            "experiment_runs.csv": experiment.runs_csv(report),
            "experiment.json": _dumps(report.to_dict(include_runs=True)),
        }
        for name, text in files.items():
            with open(os.path.join(args.output_dir, name), "w", encoding="utf-8") as fh:
                fh.write(text)
    if args.format == "json":
        stdout.write(_dumps(report.to_dict()))
    else:
        stdout.write(experiment.table_csv(report))
    return EXIT_OK


def cmd_oracle(args, stdout):
    spec = _spec(args)
    a = _load(args, spec)
    _check_k(a, args.k)
    best, j_opt = oracle_optimal(a, args.k, spec, budget=args.budget)
    record = {
        "divergence": spec.name,
        "shape": list(a.shape),
        "k": list(args.k),
        "J_OPT": j_opt,
        "labels": [lab.tolist() for lab in best.labels],
    }
    heuristic = None
    if args.result:
        try:
            with open(args.result, encoding="utf-8") as fh:
                data = json.load(fh)
            heuristic = (data.get("variant", "supplied"), float(data["J"]))
        except (OSError, ValueError, KeyError) as exc:
            raise DataError(f"cannot read heuristic result: {exc}") from None
    elif args.variant:
        res = variant_pipeline(a, args.variant, _run_config(args, args.k), spec)
        heuristic = (args.variant, res.clustering.objective)
    status = EXIT_OK
    if heuristic is not None:
        name, j_h = heuristic
        try:
            bound = bound_for(a, spec, args.alpha_t)
        except ValueError:
            bound = None
        consistent = j_h >= j_opt - 1e-9 * max(1.0, abs(j_opt))
        record.update({
            "heuristic": name,
            "J_heuristic": j_h,
            "alpha_hat": j_h / j_opt if j_opt > 0 else None,
            "theoretical_bound": bound,
            "bound_holds": None if bound is None else bool(j_h <= bound * j_opt + 1e-9),
            "consistent": consistent,
        })
        if not consistent:
            log.error("heuristic objective %r is below the exhaustive optimum %r", j_h, j_opt)
            status = EXIT_DATA
    _emit(args, record, "oracle", stdout)
    return status


COMMANDS = {"gen": cmd_gen, "cluster": cmd_cluster, "sitec": cmd_cluster,
            "experiment": cmd_experiment, "oracle": cmd_oracle}


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, stdout)
    except UsageError as exc:
        print(f"cotec {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"cotec {args.command}: refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (DataError, DomainError, DimensionError) as exc:
        print(f"cotec {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
