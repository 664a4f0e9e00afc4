"""Command-line surface: measure sweeps, comparisons, detection, batteries.

Every output file is deterministic for a fixed configuration and seed, and
gets a RunManifest sidecar (<out>.manifest.json) recording the resolved
configuration, tool version, timestamp and input digests; re-running the same
command reproduces the outputs byte-identically.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .detect import backdoor_test, compare_distributions, run_battery
from .io import load_dataset, load_trigger
from .measure import MeasureConfig, WobblinessDistribution, measure_points
from .oracle import OracleError, open_oracle
from .sampling import NoiseConfig
from .stats import boxplot_summary

DEFAULT_SEED = 20220913


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(obj, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _write_manifest(out_path: str, args: argparse.Namespace, input_paths) -> None:
    manifest = {
        "command": [args.command] + [a for a in sys.argv[1:] if a != args.command],
        "config": {k: v for k, v in vars(args).items() if k not in ("func",)},
        "seed": getattr(args, "seed", None),
        "tool_version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "input_digests": {p: _sha256(p) for p in input_paths if p and os.path.exists(p)},
    }
    with open(out_path + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _noise_config(args, sigma=None, samples=None) -> NoiseConfig:
    return NoiseConfig(
        sigma=args.sigma if sigma is None else sigma,
        n_samples=args.samples if samples is None else samples,
        seed=args.seed,
        clip=args.clip,
    )


def _measure_config(args, sigma=None, samples=None) -> MeasureConfig:
    return MeasureConfig(
        noise=_noise_config(args, sigma, samples),
        c=args.c,
        kind=args.kind,
        prob_source=args.prob_source,
    )


def _select_points(args):
    ds = load_dataset(args.dataset)
    X = ds.inputs.astype(np.float64)
    indices = np.arange(ds.n_points)
    class_filter = getattr(args, "class_filter", None)
    if class_filter is not None:
        if ds.labels is None:
            raise ValueError("--class-filter requires a labeled dataset")
        keep = ds.labels == class_filter
        X, indices = X[keep], indices[keep]
    n = getattr(args, "points", None)
    if n is not None:
        X, indices = X[:n], indices[:n]
    if X.shape[0] == 0:
        raise ValueError("no points selected")
    return ds, X, indices


def _measure_distribution(args, X, indices, cfg) -> WobblinessDistribution:
    """Measure with --jobs worker fan-out; workers own their own handles and
    results are stitched back in input order, so output is jobs-invariant."""
    jobs = max(1, getattr(args, "jobs", 1))
    extra = {"class_filter": args.class_filter} if getattr(args, "class_filter", None) is not None else None

    def work(chunk_X, chunk_idx):
        with open_oracle(args.oracle) as handle:
            return measure_points(handle, chunk_X, cfg, point_indices=chunk_idx,
                                  meta_extra=extra)

    if jobs == 1 or X.shape[0] < 2 * jobs:
        return work(X, indices)
    bounds = np.array_split(np.arange(X.shape[0]), jobs)
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        futs = [pool.submit(work, X[b], indices[b]) for b in bounds if len(b)]
        parts = [f.result() for f in futs]
    values = np.concatenate([p.values for p in parts])
    meta = dict(parts[0].meta)
    meta["point_count"] = int(X.shape[0])
    return WobblinessDistribution(values=values, meta=meta)


def _boxplot_csv(values) -> str:
    s = boxplot_summary(values)
    lines = ["stat,value"]
    for name, v in [("q25", s.q25), ("q50", s.q50), ("q75", s.q75), ("mean", s.mean),
                    ("lower_fence", s.lower_fence), ("upper_fence", s.upper_fence),
                    ("n_outliers", len(s.outlier_indices))]:
        lines.append(f"{name},{v}")
    return "\n".join(lines) + "\n"


def cmd_measure(args) -> int:
    _, X, indices = _select_points(args)
    cfg = _measure_config(args)
    dist = _measure_distribution(args, X, indices, cfg)
    _write_json(dist.to_json(), args.out)
    stem = os.path.splitext(args.out)[0]
    with open(stem + "_boxplot.csv", "w") as fh:
        fh.write(_boxplot_csv(dist.values))
    _write_manifest(args.out, args, [args.dataset])
    return 0


def cmd_sweep(args) -> int:
    _, X, indices = _select_points(args)
    sigmas = args.sigma_list or [args.sigma]
    sample_counts = args.samples_list or [args.samples]
    os.makedirs(args.out, exist_ok=True)
    summary = ["sigma,n_samples,mean,q25,q50,q75"]
    for sigma in sigmas:
        for n in sample_counts:
            cfg = _measure_config(args, sigma=sigma, samples=n)
            dist = _measure_distribution(args, X, indices, cfg)
            cell = os.path.join(args.out, f"sigma{sigma:g}_n{n}.json")
            _write_json(dist.to_json(), cell)
            s = boxplot_summary(dist.values)
            summary.append(f"{sigma:g},{n},{s.mean},{s.q25},{s.q50},{s.q75}")
    with open(os.path.join(args.out, "summary.csv"), "w") as fh:
        fh.write("\n".join(summary) + "\n")
    _write_manifest(os.path.join(args.out, "sweep"), args, [args.dataset])
    return 0


def cmd_compare(args) -> int:
    with open(args.dist1) as fh:
        d1 = WobblinessDistribution.from_json(json.load(fh))
    with open(args.dist2) as fh:
        d2 = WobblinessDistribution.from_json(json.load(fh))
    report = compare_distributions(d1, d2, drop_outliers=args.remove_outliers,
                                   tests=_tests(args), method=args.method)
    _write_json(report.to_json(), args.out)
    _write_manifest(args.out, args, [args.dist1, args.dist2])
    return 0


def cmd_detect(args) -> int:
    _, X, _ = _select_points(args)
    cfg = _measure_config(args)
    triggers = [(os.path.splitext(os.path.basename(p))[0], load_trigger(p))
                for p in args.trigger]
    reports = {}
    with open_oracle(args.oracle) as handle:
        for trig_id, trig in triggers:
            report = backdoor_test(handle, X, trig, cfg,
                                   drop_outliers=args.remove_outliers,
                                   trigger_id=trig_id, tests=_tests(args),
                                   method=args.method)
            reports[trig_id] = report.to_json()
    _write_json(reports if len(reports) > 1 else next(iter(reports.values())), args.out)
    _write_manifest(args.out, args, [args.dataset] + args.trigger)
    return 0


def cmd_battery(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(os.path.abspath(args.manifest))
    _, X, _ = _select_points(args)
    cfg = _measure_config(args)
    networks = []
    for i, net in enumerate(manifest["networks"]):
        spec = net["spec"]
        if not (spec.startswith("cmd:") or spec.startswith("http")) and not os.path.isabs(spec):
            spec = os.path.join(base, spec)
        networks.append({
            "id": net.get("id", f"net{i}"),
            "spec": spec,
            "poisoned": bool(net.get("poisoned", False)),
            "trigger": net.get("trigger"),
        })
    triggers = []
    for path in manifest["triggers"]:
        full = path if os.path.isabs(path) else os.path.join(base, path)
        triggers.append((os.path.splitext(os.path.basename(path))[0], load_trigger(full)))
    result = run_battery(networks, triggers, X, cfg,
                         drop_outliers=args.remove_outliers, tests=_tests(args),
                         method=args.method)
    _write_json(result.to_json(), args.out)
    stem = os.path.splitext(args.out)[0]
    for name, roc in result.rocs.items():
        with open(f"{stem}_roc_{name}.csv", "w") as fh:
            fh.write(roc.to_csv())
    _write_manifest(args.out, args, [args.manifest, args.dataset])
    return 0


def _tests(args):
    if args.test == "all":
        return ("levene", "fligner", "ks")
    return (args.test,)


def _add_measure_flags(p, oracle=True):
    p.add_argument("--dataset", required=True, help="dataset manifest (JSON)")
    if oracle:
        p.add_argument("--oracle", required=True,
                       help='model manifest path, "cmd:<command>" or http(s) URL')
    p.add_argument("--sigma", type=float, default=0.1, help="noise std-dev per dimension")
    p.add_argument("--samples", type=int, default=500, help="cloud size n per test point")
    p.add_argument("--points", type=int, default=None, help="use only the first N points")
    p.add_argument("--class-filter", type=int, default=None, dest="class_filter")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--clip", choices=["none", "unit_interval"], default="none")
    p.add_argument("--kind", choices=["entropy", "variance"], default="entropy")
    p.add_argument("--prob-source", choices=["top1_onehot", "soft"],
                   default="top1_onehot", dest="prob_source")
    p.add_argument("--c", type=float, default=1e-5, help="entropy smoothing constant")
    p.add_argument("--jobs", type=int, default=1)


def _add_test_flags(p):
    p.add_argument("--test", choices=["levene", "fligner", "ks", "all"], default="all")
    p.add_argument("--remove-outliers", action="store_true", dest="remove_outliers")
    p.add_argument("--method", choices=["asymptotic", "permutation"], default="asymptotic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wobble")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", help="wobbliness distribution over test points")
    _add_measure_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("sweep", help="measure over a sigma and/or n grid")
    _add_measure_flags(p)
    p.add_argument("--sigma-list", type=float, nargs="+", dest="sigma_list")
    p.add_argument("--samples-list", type=int, nargs="+", dest="samples_list")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="compare two distribution files")
    p.add_argument("dist1")
    p.add_argument("dist2")
    _add_test_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("detect", help="clean-vs-triggered backdoor test")
    _add_measure_flags(p)
    _add_test_flags(p)
    p.add_argument("--trigger", action="append", required=True,
                   help="trigger manifest (repeatable)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("battery", help="network x trigger battery with ROC")
    p.add_argument("--manifest", required=True, help="battery manifest (JSON)")
    _add_measure_flags(p, oracle=False)
    _add_test_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_battery)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except (OracleError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"wobble: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
