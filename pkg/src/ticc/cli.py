"""Command-line workflows: generate, fit, evaluate, sweep.

Every command reads/writes plain CSV and JSON under an output directory
and records a manifest (command, full config, paths, seed, PRNG, per-phase
timings, tool version) so a run can be reproduced exactly on the same
platform. Errors exit nonzero with a machine-readable JSON object on
stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, glasso, metrics, solver, synth, timeseries, toeplitz

PRNG_NAME = "numpy-PCG64"


def _write_json(path: Path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def _read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _manifest(out_dir: Path, command: str, config: dict, inputs: list,
              outputs: list, seed, timings: dict) -> None:
    doc = {
        "command": command,
        "version": __version__,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": seed,
        "prng": PRNG_NAME,
        "timings_s": timings,
    }
    _write_json(out_dir / "manifest.json", doc)


def _parse_segments(text: str) -> list:
    """Parse explicit segments like '0:200,1:200,0:200' into (cid, len) pairs."""
    spec = []
    for part in text.split(","):
        cid, _, length = part.partition(":")
        try:
            spec.append((int(cid), int(length)))
        except ValueError:
            raise ValueError(
                f"bad segment {part!r}; expected 'cluster:length' pairs"
            ) from None
    return spec


def cmd_generate(args) -> None:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    if args.preset is not None:
        truth = synth.make_preset(args.preset, n=args.n, w=args.w,
                                  p_edge=args.p_edge, seed=args.seed,
                                  samples_per_segment=args.samples_per_segment)
    elif args.segments is not None:
        spec = _parse_segments(args.segments)
        K = max(cid for cid, _ in spec) + 1
        children = np.random.SeedSequence(args.seed).spawn(K + 1)
        thetas = [synth.random_toeplitz_precision(args.n, args.w, args.p_edge,
                                                  children[k]) for k in range(K)]
        truth = synth.generate_sequence(spec, thetas, children[K])
    else:
        raise ValueError("generate requires --preset or --segments")
    gen_time = time.perf_counter() - t0

    series_path = out_dir / "series.csv"
    labels_path = out_dir / "truth_labels.json"
    thetas_path = out_dir / "truth_thetas.json"
    timeseries.save_csv(truth.series, series_path)
    _write_json(labels_path, {
        "K": truth.K,
        "labels": truth.labels.tolist(),
        "segments": [list(s) for s in truth.segment_spec],
    })
    _write_json(thetas_path, {"thetas": [toeplitz.to_dict(t) for t in truth.thetas]})
    config = {"preset": args.preset, "segments": args.segments, "n": args.n,
              "w": args.w, "p_edge": args.p_edge,
              "samples_per_segment": args.samples_per_segment}
    _manifest(out_dir, "generate", config, [],
              [series_path, labels_path, thetas_path], args.seed,
              {"generate": gen_time})


def _fit_config(args, K=None, w=None, beta=None) -> solver.TiccConfig:
    return solver.TiccConfig(
        K=K if K is not None else args.K,
        w=w if w is not None else args.w,
        lam=args.lam,
        beta=beta if beta is not None else args.beta,
        max_em_iters=args.max_em_iters,
        seed=args.seed,
        admm=glasso.AdmmConfig(rho=args.rho),
        threads=args.threads,
        debug_trace=getattr(args, "debug_trace", False),
    )


def cmd_fit(args) -> None:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ts = timeseries.load_csv(args.input, has_header=args.has_header)
    cfg = _fit_config(args)
    t0 = time.perf_counter()
    model = solver.fit(ts, cfg)
    total = time.perf_counter() - t0

    model_path = out_dir / "model.json"
    assign_path = out_dir / "assignment.csv"
    with open(model_path, "w") as fh:
        fh.write(solver.model_to_json(model))
        fh.write("\n")
    with open(assign_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "label"])
        for t, label in enumerate(model.assignment.labels):
            writer.writerow([t, int(label)])
    outputs = [model_path, assign_path]
    if cfg.debug_trace:
        trace_path = out_dir / "admm_trace.csv"
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["em_iter", "cluster", "iteration", "primal_res",
                             "dual_res", "objective", "stationarity_res"])
            writer.writerows(model.admm_traces)
        outputs.append(trace_path)
    timings = dict(model.timings)
    timings["total"] = total
    _manifest(out_dir, "fit", solver.config_to_dict(cfg), [args.input],
              outputs, args.seed, timings)


def cmd_evaluate(args) -> None:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    model = solver.model_from_json(Path(args.model).read_text())
    truth_labels_doc = _read_json(args.truth_labels)
    truth_labels = np.asarray(truth_labels_doc["labels"], dtype=int)
    K = model.K
    if truth_labels_doc["K"] != K:
        raise ValueError(
            f"cluster count mismatch: model has K={K}, "
            f"truth has K={truth_labels_doc['K']}")
    match = metrics.macro_f1(model.assignment, truth_labels, K)
    doc = metrics.scores_to_dict(match)
    if args.truth_thetas is not None:
        thetas_doc = _read_json(args.truth_thetas)
        true_thetas = [toeplitz.from_dict(d) for d in thetas_doc["thetas"]]
        if len(true_thetas) != K:
            raise ValueError(
                f"cluster count mismatch: model has K={K}, "
                f"truth has {len(true_thetas)} precision matrices")
        est_thetas = [c.theta for c in model.clusters]
        doc["network_f1"] = metrics.network_f1(est_thetas, true_thetas,
                                               match.permutation)
    scores_path = out_dir / "scores.json"
    _write_json(scores_path, doc)
    inputs = [args.model, args.truth_labels]
    if args.truth_thetas is not None:
        inputs.append(args.truth_thetas)
    _manifest(out_dir, "evaluate", {}, inputs, [scores_path], None,
              {"evaluate": time.perf_counter() - t0})


def _parse_sweep_values(args) -> list:
    if args.values is not None:
        values = [v for v in args.values.split(",") if v]
    elif args.range is not None:
        lo, _, hi = args.range.partition(":")
        try:
            values = [str(v) for v in range(int(lo), int(hi) + 1)]
        except ValueError:
            raise ValueError(f"bad range {args.range!r}; expected 'lo:hi'") from None
    else:
        raise ValueError("sweep requires --values or --range")
    if not values:
        raise ValueError("sweep range is empty")
    caster = float if args.param == "beta" else int
    return [caster(v) for v in values]


def cmd_sweep(args) -> None:
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    values = _parse_sweep_values(args)
    ts = timeseries.load_csv(args.input, has_header=args.has_header)
    truth_labels = None
    if args.truth_labels is not None:
        truth_labels = np.asarray(_read_json(args.truth_labels)["labels"], dtype=int)

    rows = []
    for value in values:
        cfg = _fit_config(args, **{args.param: value})
        t0 = time.perf_counter()
        model = solver.fit(ts, cfg)
        runtime = time.perf_counter() - t0
        subseq = timeseries.stack_windows(ts, cfg.w)
        row = {
            "param": args.param,
            "value": value,
            "bic": solver.bic(model, subseq),
            "macro_f1": "",
            "num_switches": model.assignment.num_switches,
            "runtime_s": runtime,
            "converged": model.converged,
        }
        if truth_labels is not None:
            K = max(cfg.K, int(truth_labels.max()) + 1)
            row["macro_f1"] = metrics.macro_f1(
                np.asarray(model.assignment.labels), truth_labels, K).macro_f1
        rows.append(row)

    sweep_path = out_dir / "sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    config = {"param": args.param, "values": values,
              "base": solver.config_to_dict(_fit_config(args))}
    _manifest(out_dir, "sweep", config, [args.input], [sweep_path], args.seed,
              {"total": sum(r["runtime_s"] for r in rows)})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ticc",
        description="Toeplitz inverse covariance-based clustering of "
                    "multivariate time series.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common_fit_flags(p):
        p.add_argument("--input", required=True, help="input series CSV")
        p.add_argument("--has-header", action="store_true",
                       help="skip the first CSV line")
        p.add_argument("-w", type=int, default=5, help="window size")
        p.add_argument("--lambda", dest="lam", type=float, default=5.0,
                       help="sparsity penalty (scalar, broadcast)")
        p.add_argument("--beta", type=float, default=100.0,
                       help="switch penalty")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--rho", type=float, default=1.0, help="ADMM penalty")
        p.add_argument("--max-em-iters", type=int, default=100)
        p.add_argument("--threads", type=int, default=1,
                       help="worker cap for per-cluster solves")
        p.add_argument("--output-dir", required=True)

    gen = sub.add_parser("generate", help="generate a synthetic dataset")
    gen.add_argument("--preset", help="named temporal sequence, e.g. '1,2,1'")
    gen.add_argument("--segments",
                     help="explicit 'cluster:length' pairs, comma separated")
    gen.add_argument("--samples-per-segment", type=int, default=None)
    gen.add_argument("--n", type=int, default=5, help="sensor dimension")
    gen.add_argument("-w", type=int, default=5, help="window size")
    gen.add_argument("--p-edge", type=float, default=0.2)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output-dir", required=True)
    gen.set_defaults(func=cmd_generate)

    fit = sub.add_parser("fit", help="fit a clustering model")
    fit.add_argument("-K", type=int, required=True, help="number of clusters")
    common_fit_flags(fit)
    fit.add_argument("--debug-trace", action="store_true",
                     help="write per-iteration ADMM diagnostics CSV")
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("evaluate", help="score a model against ground truth")
    ev.add_argument("--model", required=True, help="model.json from fit")
    ev.add_argument("--truth-labels", required=True)
    ev.add_argument("--truth-thetas", default=None)
    ev.add_argument("--output-dir", required=True)
    ev.set_defaults(func=cmd_evaluate)

    sw = sub.add_parser("sweep", help="fit over a parameter range")
    sw.add_argument("--param", choices=["K", "beta", "w"], required=True)
    sw.add_argument("--values", help="comma-separated values")
    sw.add_argument("--range", help="inclusive integer range lo:hi")
    sw.add_argument("-K", type=int, default=2, help="base cluster count")
    common_fit_flags(sw)
    sw.add_argument("--truth-labels", default=None,
                    help="adds a macro-F1 column when given")
    sw.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # pragma: no branch
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
