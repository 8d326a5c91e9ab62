"""Command-line interface.

Subcommands: ``rerank``, ``rerank-video``, ``eval``, ``gen-synth`` and
``graph-cache``. Flag defaults match :class:`~gcrerank.params.Params`.
``$GCR_WORKERS`` sets the default worker count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .errors import GCRError
from .evaluation import DEFAULT_MAX_RANK, Protocol, compare, evaluate_features, format_table
from .features import load_features, manifest_path, save_features
from .graph import Restrict, build_graph, load_graph, save_graph, symmetrize
from .params import Mode, Params, resolve_workers
from .pipeline import rerank
from .propagation import Timer
from .synth import SynthSpec, generate
from .video import ProfileMethod, run_gcrv


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _record_path(output):
    return Path(output).with_suffix(".run.json")


def _write_record(args, output, inputs, extra=None):
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    record = {
        "version": __version__,
        "command": args.command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(output): _sha256(output)},
    }
    if extra:
        record.update(extra)
    _record_path(output).write_text(json.dumps(record, indent=2, default=str) + "\n", encoding="utf-8")


def _params(args, mode=None):
    return Params(
        k=args.k,
        gamma=args.gamma,
        iters=args.iters,
        alpha=args.alpha,
        lambda_=args.lambda_,
        symmetrize=args.symmetrize,
        renormalize=args.renormalize,
        recompute_graph=args.recompute_graph,
        mode=mode or getattr(args, "mode", Mode.GLOBAL),
    )


def _input_files(args):
    manifest = args.manifest or manifest_path(args.input)
    return [Path(args.input), Path(manifest)]


def _print_timing(timer, total):
    graph = timer.totals.get("graph", 0.0)
    prop = timer.totals.get("propagate", 0.0)
    print(f"{'graph construction':<20}{graph:>10.3f} s")
    print(f"{'propagation':<20}{prop:>10.3f} s")
    print(f"{'total':<20}{total:>10.3f} s")


def cmd_rerank(args):
    p = _params(args)
    workers = resolve_workers(args.workers)
    fs = load_features(args.input, args.manifest)
    graph = load_graph(args.graph) if args.graph else None
    timer = Timer()
    t0 = time.perf_counter()
    out = rerank(fs, p, workers=workers, graph=graph, timer=timer)
    total = time.perf_counter() - t0
    save_features(out, args.output)
    load_features(args.output)
    inputs = _input_files(args) + ([Path(args.graph), Path(args.graph).with_suffix(".json")] if args.graph else [])
    _write_record(args, args.output, inputs, {"params": p.to_dict(), "timing": timer.totals})
    _print_timing(timer, total)
    return 0


def cmd_rerank_video(args):
    p = _params(args, mode=Mode.CROSS_CAMERA)
    workers = resolve_workers(args.workers)
    fs = load_features(args.input, args.manifest)
    timer = Timer()
    t0 = time.perf_counter()
    ps = run_gcrv(fs, p, workers=workers, method=ProfileMethod(args.profile), timer=timer)
    total = time.perf_counter() - t0
    save_features(ps.as_feature_set(), args.output)
    load_features(args.output)
    _write_record(args, args.output, _input_files(args), {"params": p.to_dict(), "timing": timer.totals})
    print(f"{ps.count} tracklet profiles ({ps.method.value})")
    _print_timing(timer, total)
    return 0


def cmd_eval(args):
    fs = load_features(args.input, args.manifest)
    protocol = Protocol(args.protocol)
    report = evaluate_features(fs, protocol, args.max_rank)
    rows = [(Path(args.input).stem, report)]
    payload = report.to_dict()
    if args.compare:
        other = evaluate_features(load_features(args.compare), protocol, args.max_rank)
        rows.append((Path(args.compare).stem, other))
        delta = compare(report, other)
        payload["compare"] = {"path": str(args.compare), "report": other.to_dict(), **delta.to_dict()}
    print(format_table(rows))
    print(f"queries evaluated: {report.num_queries}, skipped: {report.num_skipped}")
    if args.compare:
        print(f"mAP delta: {100 * delta.delta_mAP:+.2f}  Rank-1 delta: {100 * delta.delta_cmc[0]:+.2f}")
    if args.report:
        Path(args.report).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        inputs = _input_files(args)
        if args.compare:
            inputs += [Path(args.compare), manifest_path(args.compare)]
        _write_record(args, args.report, inputs)
    return 0


def cmd_gen_synth(args):
    spec = SynthSpec(
        num_ids=args.num_ids,
        cams=args.cams,
        frames_per_tracklet=args.frames,
        dim=args.dim,
        cluster_std=args.std,
        camera_shift=args.shift,
        seed=args.seed,
    )
    fs = generate(spec)
    save_features(fs, args.output)
    load_features(args.output)
    Path(args.output).with_suffix(".synth.json").write_text(spec.to_json() + "\n", encoding="utf-8")
    _write_record(args, args.output, [])
    print(f"wrote {fs.n} x {fs.d} features to {args.output}")
    return 0


def cmd_graph_cache(args):
    p = _params(args)
    fs = load_features(args.input, args.manifest)
    t0 = time.perf_counter()
    g = build_graph(fs, p, Restrict(args.restrict), workers=resolve_workers(args.workers))
    if p.symmetrize:
        g = symmetrize(g)
    elapsed = time.perf_counter() - t0
    save_graph(g, args.output)
    load_graph(args.output)
    _write_record(args, args.output, _input_files(args), {"params": p.to_dict(), "elapsed": elapsed})
    print(f"{g.nnz} edges over {g.n} nodes in {elapsed:.3f} s")
    return 0


def _add_params(sp, with_mode=True):
    d = Params()
    sp.add_argument("--k", type=int, default=d.k, help="neighbors per node")
    sp.add_argument("--gamma", type=float, default=d.gamma, help="kernel temperature")
    sp.add_argument("--iters", type=int, default=d.iters, help="propagation rounds")
    sp.add_argument("--alpha", type=float, default=d.alpha, help="global vs cross-camera weight")
    sp.add_argument("--lambda", dest="lambda_", type=float, default=d.lambda_, help="profile regularization")
    sp.add_argument("--symmetrize", action=argparse.BooleanOptionalAction, default=d.symmetrize)
    sp.add_argument("--renormalize", action=argparse.BooleanOptionalAction, default=d.renormalize)
    sp.add_argument("--recompute-graph", action=argparse.BooleanOptionalAction, default=d.recompute_graph)
    if with_mode:
        sp.add_argument("--mode", choices=[m.value for m in Mode], default=d.mode.value)
    sp.add_argument("--workers", type=int, default=None, help="worker threads (default $GCR_WORKERS or 1)")
    sp.add_argument("--seed", type=int, default=0, help="recorded for reproducibility")


def _add_io(sp):
    sp.add_argument("--input", required=True, type=Path, help="GCRF feature file")
    sp.add_argument("--manifest", type=Path, default=None, help="manifest CSV (default <input>.csv)")


def build_parser():
    parser = argparse.ArgumentParser(prog="gcrerank", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("rerank", help="re-rank image features")
    _add_io(sp)
    sp.add_argument("--output", required=True, type=Path)
    sp.add_argument("--graph", type=Path, default=None, help="cached graph (global mode only)")
    _add_params(sp)
    sp.set_defaults(func=cmd_rerank)

    sp = sub.add_parser("rerank-video", help="tracklet profiles + re-ranking")
    _add_io(sp)
    sp.add_argument("--output", required=True, type=Path)
    sp.add_argument("--profile", choices=[m.value for m in ProfileMethod], default=ProfileMethod.CLOSED_FORM.value)
    _add_params(sp, with_mode=False)
    sp.set_defaults(func=cmd_rerank_video)

    sp = sub.add_parser("eval", help="mAP / CMC of query rows against gallery rows")
    _add_io(sp)
    sp.add_argument("--protocol", choices=[p.value for p in Protocol], default=Protocol.CROSS_CAMERA.value)
    sp.add_argument("--max-rank", type=int, default=DEFAULT_MAX_RANK)
    sp.add_argument("--report", type=Path, default=None, help="JSON report path")
    sp.add_argument("--compare", type=Path, default=None, help="second feature file, same manifest layout")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("gen-synth", help="write a seeded synthetic feature set")
    sp.add_argument("--output", required=True, type=Path)
    d = SynthSpec()
    sp.add_argument("--num-ids", type=int, default=d.num_ids)
    sp.add_argument("--cams", type=int, default=d.cams)
    sp.add_argument("--frames", type=int, default=d.frames_per_tracklet)
    sp.add_argument("--dim", type=int, default=d.dim)
    sp.add_argument("--std", type=float, default=d.cluster_std)
    sp.add_argument("--shift", type=float, default=d.camera_shift)
    sp.add_argument("--seed", type=int, default=d.seed)
    sp.set_defaults(func=cmd_gen_synth)

    sp = sub.add_parser("graph-cache", help="build and store a k-NN graph")
    _add_io(sp)
    sp.add_argument("--output", required=True, type=Path, help="graph CSV; sidecar JSON alongside")
    sp.add_argument("--restrict", choices=[r.value for r in Restrict], default=Restrict.ALL.value)
    _add_params(sp, with_mode=False)
    sp.set_defaults(func=cmd_graph_cache)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (GCRError, ValueError, OSError) as exc:
        print(f"gcrerank {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
