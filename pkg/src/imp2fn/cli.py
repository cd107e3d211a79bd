"""Command-line surface: transpile, gen-data, train, bench, check.

Every command is deterministic under --seed. bench reports modeled seconds
(counted work at a fixed rate) so result files are byte-identical across
runs; wall-clock time is only an abort safety net.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .datagen import DataGenConfig, gen_dataset, load_dataset
from .grammar import pair_for_source
from .guidance import ExternalScorer, GuidanceSource, StatModel, train
from .inputs import infer_types, input_grid
from .interp import eval_collecting, eval_term, is_trace_compatible
from .parser import ParseError, parse_imp, parse_lstr
from .pruning import MODES
from .synth import SynthConfig, TranspileResult, is_equivalent, transpile
from .terms import pretty
from .values import EvalError

log = logging.getLogger(__name__)

BENCH_CONFIGS = {
    "full": {"prune_mode": "bidir", "guidance": "stat"},
    "forward": {"prune_mode": "forward", "guidance": "stat"},
    "notrace": {"prune_mode": "notrace", "guidance": "stat"},
    "noprune": {"prune_mode": "none", "guidance": "stat"},
    "uniform-guidance": {"prune_mode": "bidir", "guidance": "uniform"},
}

CSV_HEADER = ["benchmark", "config", "solved", "seconds", "candidates",
              "pruned", "verified"]


def _model_path(args) -> str | None:
    return os.environ.get("TT_MODEL") or getattr(args, "model", None)


def _load_model(args) -> StatModel:
    path = _model_path(args)
    if path:
        return StatModel.load(path)
    return StatModel()


def _guidance(args, cfg: SynthConfig) -> GuidanceSource:
    if cfg.guidance == "uniform":
        return GuidanceSource(StatModel())
    model = _load_model(args)
    if cfg.guidance == "external":
        cmd = getattr(args, "scorer_cmd", None)
        address = getattr(args, "scorer_address", None)
        if not cmd and not address:
            raise SystemExit("--guidance external needs --scorer-cmd or --scorer-address")
        scorer = ExternalScorer(cmd=cmd, address=address,
                                timeout=getattr(args, "scorer_timeout", 0.2))
        return GuidanceSource(model, scorer)
    return GuidanceSource(model)


def cmd_transpile(args) -> int:
    try:
        source = parse_imp(open(args.source).read())
    except (OSError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    cfg = SynthConfig(timeout_s=args.timeout, prune_mode=args.prune_mode,
                      guidance=args.guidance, relaxed=args.relaxed_constants,
                      seed=args.seed)
    guide = _guidance(args, cfg)
    result = transpile(source, cfg, guidance_source=guide)
    if guide.external is not None:
        guide.external.close()
    if args.emit_stats:
        with open(args.emit_stats, "w") as f:
            json.dump(result.stats.as_dict(), f, indent=2)
    if args.prune_stats:
        print(json.dumps(result.stats.prune.as_dict()))
    if result.found:
        print(result.text)
        return 0
    print(f"NOT-FOUND ({result.reason})")
    return 2


def cmd_gendata(args) -> int:
    cfg = DataGenConfig(max_depth=args.depth, fuse_probability=args.fuse_prob)
    n = gen_dataset(args.n, cfg, args.seed, args.out)
    print(f"wrote {n} pairs to {args.out}")
    return 0


def cmd_train(args) -> int:
    pairs = load_dataset(args.data)
    model = train(pairs, alpha=args.alpha)
    model.save(args.out)
    print(f"trained on {len(pairs)} pairs -> {args.out}")
    return 0


def _bench_task(task_dir: str, config_name: str, timeout: float,
                model_path: str | None, seed: int) -> dict:
    name = os.path.basename(task_dir.rstrip("/"))
    source = parse_imp(open(os.path.join(task_dir, "source.imp")).read())
    options = {}
    opt_path = os.path.join(task_dir, "options.json")
    if os.path.exists(opt_path):
        options = json.load(open(opt_path))
    knobs = BENCH_CONFIGS[config_name]
    cfg = SynthConfig(timeout_s=timeout, prune_mode=knobs["prune_mode"],
                      guidance=knobs["guidance"], seed=seed,
                      relaxed=bool(options.get("relaxed", False)))
    model = StatModel.load(model_path) if model_path and knobs["guidance"] == "stat" \
        else StatModel()
    result = transpile(source, cfg, model=model)
    solved = result.found
    if solved:
        ref_path = os.path.join(task_dir, "reference.lstr")
        if os.path.exists(ref_path):
            reference = parse_lstr(open(ref_path).read())
            same, cex = is_equivalent(reference, result.program, [], cfg)
            if not same:
                log.warning("%s: solution disagrees with the reference on %r",
                            name, cex)
                solved = False
    return {
        "benchmark": name,
        "config": config_name,
        "solved": int(solved),
        "seconds": f"{result.stats.modeled_seconds:.3f}",
        "candidates": result.stats.dequeued,
        "pruned": result.stats.pruned,
        "verified": result.stats.verified,
    }


def cmd_bench(args) -> int:
    tasks = sorted(d for d in (os.path.join(args.dir, x) for x in os.listdir(args.dir))
                   if os.path.isdir(d) and os.path.exists(os.path.join(d, "source.imp")))
    if not tasks:
        print(f"no tasks under {args.dir}", file=sys.stderr)
        return 1
    configs = [c.strip() for c in args.configs.split(",") if c.strip()]
    for c in configs:
        if c not in BENCH_CONFIGS:
            print(f"unknown config {c!r} (have {', '.join(BENCH_CONFIGS)})", file=sys.stderr)
            return 1
    model_path = _model_path(args)
    jobs = [(t, c) for t in tasks for c in configs]
    rows = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_bench_task, t, c, args.timeout, model_path, args.seed)
                       for t, c in jobs]
            rows = [f.result() for f in futures]
    else:
        rows = [_bench_task(t, c, args.timeout, model_path, args.seed) for t, c in jobs]
    rows.sort(key=lambda r: (r["benchmark"], r["config"]))
    with open(args.out, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_HEADER)
        w.writeheader()
        for row in rows:
            w.writerow(row)
    solved = sum(r["solved"] for r in rows)
    print(f"{solved}/{len(rows)} runs solved -> {args.out}")
    return 0


def cmd_check(args) -> int:
    try:
        source = parse_imp(open(args.source).read())
        target = parse_lstr(open(args.target).read())
        inputs = json.load(open(args.inputs))
    except (OSError, ParseError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    pair = pair_for_source(source)
    from .grammar import shared_terms_of
    watched = shared_terms_of(target, pair).all_terms()
    for i, sigma in enumerate(inputs):
        try:
            sv = eval_term(source, sigma)
            tv = eval_term(target, sigma)
            equiv = "yes" if _values_eq(sv, tv) else "no"
        except EvalError as e:
            equiv = f"error ({e})"
        try:
            tc = is_trace_compatible(source, target, sigma, pair, args.relaxed)
            compat = "yes" if tc else "no"
        except EvalError as e:
            compat = f"error ({e})"
        print(f"input {i}: equivalent={equiv} trace-compatible={compat}")
        if args.dump_trace:
            try:
                _, trace_s = eval_collecting(source, sigma, watched)
                _, trace_t = eval_collecting(target, sigma, watched)
                print(json.dumps({"input": sigma,
                                  "source_trace": trace_s.to_json(),
                                  "target_trace": trace_t.to_json()}))
            except EvalError:
                pass
    return 0


def _values_eq(a, b) -> bool:
    from .values import values_equal
    return values_equal(a, b)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="imp2fn",
        description="transpile imperative loop code to functional combinator pipelines")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transpile", help="synthesize a functional equivalent")
    p.add_argument("source")
    p.add_argument("--prune-mode", choices=MODES, default="bidir")
    p.add_argument("--guidance", choices=("stat", "external", "uniform"), default="stat")
    p.add_argument("--model", default=None)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--relaxed-constants", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-stats", default=None)
    p.add_argument("--prune-stats", action="store_true")
    p.add_argument("--scorer-cmd", default=None)
    p.add_argument("--scorer-address", default=None)
    p.add_argument("--scorer-timeout", type=float, default=0.2)
    p.set_defaults(fn=cmd_transpile)

    p = sub.add_parser("gen-data", help="generate synthetic training pairs")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--fuse-prob", type=float, default=0.0)
    p.set_defaults(fn=cmd_gendata)

    p = sub.add_parser("train", help="fit the statistical guidance model")
    p.add_argument("--data", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("bench", help="run a benchmark directory under ablations")
    p.add_argument("--dir", required=True)
    p.add_argument("--configs", default="full,forward,notrace,noprune,uniform-guidance")
    p.add_argument("--timeout", type=float, default=300.0)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--model", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("check", help="trace-compatibility and equivalence verdicts")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--inputs", required=True)
    p.add_argument("--relaxed", action="store_true")
    p.add_argument("--dump-trace", action="store_true")
    p.set_defaults(fn=cmd_check)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
