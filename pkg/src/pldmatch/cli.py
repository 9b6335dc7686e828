"""pldmatch command line: generate | match | benchmark | estimate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .estimation import EstimationError, derive_practical_params, estimate_all
from .generator import ModelParams, ParameterError, export_instance, generate_instance
from .graph import EdgeListParseError, GraphInputError
from .matchers import ALGORITHMS, run_algorithm
from .slicing import feasibility_report

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3

log = logging.getLogger("pldmatch")


def _coerce(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, sets: list[str]) -> dict:
    """Apply ``section.key=value`` overrides; values parse as JSON when they can."""
    for item in sets or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise bench.ConfigError(f"--set expects key=value, got {item!r}")
        node = raw
        *path, last = key.split(".")
        for part in path:
            node = node.setdefault(part, {})
        node[last] = _coerce(value)
    return raw


def _read_config(path, args) -> dict:
    raw = {}
    if path:
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise bench.ConfigError(f"{path}: {e}") from e
    if not isinstance(raw, dict):
        raise bench.ConfigError("config must be a JSON object")
    raw = apply_overrides(raw, getattr(args, "set", None))
    for flag, key in (("master_seed", "master_seed"), ("repetitions", "repetitions")):
        value = getattr(args, flag, None)
        if value is not None:
            raw[key] = value
    if getattr(args, "algorithms", None):
        raw["algorithms"] = args.algorithms.split(",")
    return raw


def cmd_generate(args) -> int:
    raw = _read_config(args.config, args)
    try:
        model = ModelParams(**raw.get("model", {}))
    except TypeError as e:
        raise bench.ConfigError(f"bad model section: {e}") from e
    try:
        model.validate()
    except ParameterError as e:
        raise bench.ConfigError(str(e)) from e
    seed = int(raw.get("master_seed", 0))
    inst = generate_instance(model, seed, int(raw.get("repetition", 0)))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    export_instance(inst, out, model, seed, include_truth=not args.no_truth)
    print(json.dumps({"n1": inst.g1.vertex_count, "n2": inst.g2.vertex_count,
                      "m1": inst.g1.edge_count, "m2": inst.g2.edge_count,
                      "common": inst.common_count, "seeds": len(inst.seeds)}))
    return EXIT_OK


def _estimates(args):
    g1, g2, seeds, truth, ids1, ids2 = bench.load_pair_inputs(args.g1, args.g2, args.seeds,
                                                               getattr(args, "truth", None))
    est = estimate_all(g1, g2, seeds, dmin=args.dmin)
    return g1, g2, seeds, truth, ids1, ids2, est


def cmd_estimate(args) -> int:
    g1, g2, seeds, _, _, _, est = _estimates(args)
    params = derive_practical_params(est, args.D, g1.vertex_count, g2.vertex_count)
    for w in params.warnings:
        log.warning(w)
    print(json.dumps({"estimates": est.to_dict(), "params": params.to_dict(),
                      "feasibility": feasibility_report(params)}, indent=2))
    return EXIT_OK


def cmd_match(args) -> int:
    raw = _read_config(args.config, args)
    algo = dict(raw.get("algo", {}))
    algorithm = raw.get("algorithm", "pld")
    if algorithm not in ALGORITHMS:
        raise bench.ConfigError(f"unknown algorithm {algorithm!r}")
    g1, g2, seeds, truth, ids1, ids2, est = _estimates(args)
    D = int(algo.pop("D", args.D))
    try:
        params = derive_practical_params(est, D, g1.vertex_count, g2.vertex_count, **algo)
        params.validate()
    except (TypeError, ParameterError) as e:
        raise bench.ConfigError(f"bad algo section: {e}") from e
    for w in params.warnings:
        log.warning(w)
    m = run_algorithm(algorithm, g1, g2, seeds, params)
    bench.write_matching(m, args.out, ids1, ids2)
    summary = bench.matching_summary(m, truth)
    summary["estimates"] = est.to_dict()
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = bench.config_from_dict(_read_config(args.config, args))
    rows = bench.run_benchmark(cfg)
    bench.emit_csv(rows, args.out, timing=not args.no_timing)
    if args.plot:
        bench.emit_plot(rows, args.plot)
    for algo, pts in bench.median_table(rows).items():
        log.info("%s median accuracy: %s", algo, ", ".join(f"{v}:{a:.3f}" for v, a in pts))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pldmatch", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required):
        p.add_argument("--config", required=config_required, help="JSON config document")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config field, e.g. model.n=2000 (repeatable)")

    p = sub.add_parser("generate", help="sample a correlated graph pair with seeds")
    common(p, True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--no-truth", action="store_true", help="do not write truth.txt")
    p.set_defaults(func=cmd_generate)

    def pair_inputs(p):
        p.add_argument("--g1", required=True)
        p.add_argument("--g2", required=True)
        p.add_argument("--seeds", required=True)
        p.add_argument("--dmin", type=int, default=6, help="degree cutoff for the exponent fit (0 = KS choice)")
        p.add_argument("--D", type=int, default=3, help="witness distance")

    p = sub.add_parser("match", help="match two edge lists from a seed set")
    pair_inputs(p)
    p.add_argument("--truth")
    common(p, False)
    p.add_argument("--out", required=True, help="matching output, one 'u v stage' line per pair")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("benchmark", help="run a parameter sweep and write a CSV")
    common(p, True)
    p.add_argument("--out", required=True)
    p.add_argument("--plot")
    p.add_argument("--no-timing", action="store_true", help="leave wall_ms empty for byte-stable output")
    p.add_argument("--master-seed", type=int)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--algorithms", help="comma separated subset of " + ",".join(ALGORITHMS))
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("estimate", help="estimate model parameters of an observed pair")
    pair_inputs(p)
    p.set_defaults(func=cmd_estimate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "dmin", None) == 0:
        args.dmin = None
    try:
        return args.func(args)
    except (bench.ConfigError, ParameterError, EstimationError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, EdgeListParseError, GraphInputError) as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
