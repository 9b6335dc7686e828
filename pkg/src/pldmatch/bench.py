"""Benchmark harness: instance generation per repetition, scoring, medians, CSV and SVG output."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .generator import ModelParams, ParameterError, compute_weights, rng_streams, sample_parent, \
    sample_seed_set, subsample_pair
from .graph import Graph, from_edges, read_pairs
from .matchers import ALGORITHMS, run_algorithm
from .matching import Matching
from .slicing import PldParams

log = logging.getLogger(__name__)

SWEEPABLE = ("theta", "gamma", "D", "s", "threshold_scale")
CSV_HEADER = ["algorithm", "sweep_param", "sweep_value", "repetition", "accuracy", "precision",
              "matched", "wall_ms"]


class ConfigError(ValueError):
    pass


class ScoringError(ValueError):
    pass


@dataclass
class RunConfig:
    model: ModelParams
    algo: dict = field(default_factory=dict)
    sweep_param: str | None = None
    sweep_values: list = field(default_factory=list)
    repetitions: int = 10
    master_seed: int = 0
    algorithms: tuple[str, ...] = ("pld",)
    inputs: dict | None = None

    def validate(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.sweep_param is not None:
            if self.sweep_param not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {self.sweep_param!r}; choose from {SWEEPABLE}")
            if not self.sweep_values:
                raise ConfigError("sweep needs at least one value")
            for v in self.sweep_values:
                ok = isinstance(v, int) and v >= 1 if self.sweep_param == "D" else isinstance(v, (int, float))
                if not ok or isinstance(v, bool):
                    raise ConfigError(f"bad value {v!r} for {self.sweep_param}")
            if self.inputs and self.sweep_param in ("theta", "s"):
                raise ConfigError("file inputs fix theta and s; sweep an algorithm parameter instead")
        valid_algo = {f.name for f in fields(PldParams)} - {"n", "beta", "wbar", "s", "theta"}
        unknown = set(self.algo) - valid_algo
        if unknown:
            raise ConfigError(f"unknown algorithm parameters {sorted(unknown)}")
        if self.inputs is None:
            try:
                self.model.validate()
            except ParameterError as e:
                raise ConfigError(str(e)) from e

    def points(self) -> list:
        return list(self.sweep_values) if self.sweep_param else [None]


def config_from_dict(d: dict) -> RunConfig:
    try:
        model = ModelParams(**d.get("model", {}))
    except TypeError as e:
        raise ConfigError(f"bad model section: {e}") from e
    sweep = d.get("sweep") or {}
    if isinstance(sweep, list):
        if len(sweep) > 1:
            raise ConfigError("one sweep axis per run")
        sweep = sweep[0] if sweep else {}
    algorithms = d.get("algorithms", ["pld"])
    cfg = RunConfig(
        model=model,
        algo=dict(d.get("algo", {})),
        sweep_param=sweep.get("param"),
        sweep_values=list(sweep.get("values", [])),
        repetitions=int(d.get("repetitions", 10)),
        master_seed=int(d.get("master_seed", 0)),
        algorithms=tuple(algorithms),
        inputs=d.get("inputs"),
    )
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    return config_from_dict(raw)


def score(matching: Matching, truth) -> tuple[float, float]:
    """Accuracy over the truth map (seeds included) and precision over matched pairs.

    ``truth`` is an array ``truth[u] = v`` with -1 for unmatched vertices, or
    a dict.  An empty matching has precision 1 by convention.
    """
    if isinstance(truth, dict):
        tmap = truth
    else:
        arr = np.asarray(truth)
        idx = np.flatnonzero(arr >= 0)
        tmap = dict(zip(idx.tolist(), arr[idx].tolist()))
    if not tmap:
        raise ScoringError("empty truth map")
    correct = sum(1 for u, v in matching if tmap.get(u) == v)
    precision = correct / len(matching) if len(matching) else 1.0
    return correct / len(tmap), precision


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    sweep_param: str
    sweep_value: object
    repetition: int
    accuracy: float
    precision: float
    matched: int
    wall_ms: float
    stages: tuple = ()


def _pld_params(model: ModelParams, algo: dict) -> PldParams:
    return PldParams(n=model.n, beta=model.beta, wbar=model.wbar, s=model.s, theta=model.theta,
                     **algo)


def _point_settings(cfg: RunConfig, value) -> tuple[ModelParams, dict]:
    model, algo = cfg.model, dict(cfg.algo)
    if cfg.sweep_param in ("theta", "s"):
        model = replace(model, **{cfg.sweep_param: value})
    elif cfg.sweep_param is not None:
        algo[cfg.sweep_param] = value
    return model, algo


def _run_repetition(cfg: RunConfig, rep: int) -> list[ResultRow]:
    streams = rng_streams(cfg.master_seed, rep)
    parent = sample_parent(compute_weights(cfg.model), cfg.model, streams["parent"])
    pairs: dict[float, object] = {}
    rows = []
    for value in cfg.points():
        model, algo = _point_settings(cfg, value)
        if model.s not in pairs:
            # fresh streams so each s value sees the same draws
            pairs[model.s] = subsample_pair(parent, model, rng_streams(cfg.master_seed, rep))
        inst = pairs[model.s]
        seeds = sample_seed_set(inst, model.theta, rng_streams(cfg.master_seed, rep)["seeds"])
        params = _pld_params(model, algo)
        for name in cfg.algorithms:
            t0 = time.perf_counter()
            m = run_algorithm(name, inst.g1, inst.g2, seeds, params)
            wall = (time.perf_counter() - t0) * 1000
            m.check_injective()
            m.check_thresholds()
            acc, prec = score(m, inst.truth)
            rows.append(ResultRow(name, cfg.sweep_param or "", value, rep, acc, prec, len(m), wall,
                                  tuple(sorted(m.stage_counts().items()))))
    return rows


def worker_count() -> int:
    env = os.environ.get("PLD_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"PLD_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def _row_key(cfg: RunConfig):
    algo_rank = {a: i for i, a in enumerate(cfg.algorithms)}
    point_rank = {i: i for i in range(len(cfg.points()))}

    def key(row: ResultRow):
        idx = next(i for i, v in enumerate(cfg.points()) if v == row.sweep_value)
        return algo_rank[row.algorithm], point_rank[idx], row.repetition
    return key


def run_benchmark(cfg: RunConfig, workers: int | None = None) -> list[ResultRow]:
    """Every sweep point x repetition x algorithm, rows sorted deterministically."""
    cfg.validate()
    if cfg.inputs:
        rows = _run_inputs(cfg)
    else:
        workers = worker_count() if workers is None else workers
        reps = range(cfg.repetitions)
        if workers > 1 and cfg.repetitions > 1:
            with ProcessPoolExecutor(max_workers=min(workers, cfg.repetitions)) as ex:
                chunks = list(ex.map(_run_repetition, [cfg] * cfg.repetitions, reps))
        else:
            chunks = [_run_repetition(cfg, r) for r in reps]
        rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=_row_key(cfg))
    if cfg.sweep_param == "theta":
        for algo, bad in check_monotone(rows).items():
            log.warning("median accuracy of %s drops along theta: %s", algo, bad)
    return rows


def _id_map(ids) -> dict[int, int]:
    # first appearance, unless the ids already cover 0..n-1 exactly
    idmap: dict[int, int] = {}
    for x in ids:
        idmap.setdefault(x, len(idmap))
    if idmap and min(idmap) == 0 and max(idmap) == len(idmap) - 1:
        return {x: x for x in range(len(idmap))}
    return idmap


def load_pair_inputs(g1_path, g2_path, seeds_path, truth_path=None):
    """Load two edge lists plus seed/truth pair files given in the files' own ids.

    Ids that appear only in the seed or truth files become isolated vertices.
    Returns ``(g1, g2, seeds, truth_or_None, ids1, ids2)`` where ``ids*`` map
    compact ids back to file ids.
    """
    e1, e2 = read_pairs(g1_path), read_pairs(g2_path)
    seed_raw = read_pairs(seeds_path)
    truth_raw = read_pairs(truth_path) if truth_path else []
    extra = seed_raw + truth_raw
    map1 = _id_map([x for e in e1 for x in e] + [u for u, _ in extra])
    map2 = _id_map([x for e in e2 for x in e] + [v for _, v in extra])
    g1 = from_edges(len(map1), [(map1[u], map1[v]) for u, v in e1])
    g2 = from_edges(len(map2), [(map2[u], map2[v]) for u, v in e2])
    seeds = [(map1[u], map2[v]) for u, v in seed_raw]
    truth = None
    if truth_path:
        truth = np.full(g1.vertex_count, -1, dtype=np.int64)
        for u, v in truth_raw:
            truth[map1[u]] = map2[v]
    ids1 = np.empty(len(map1), dtype=np.int64)
    ids1[list(map1.values())] = list(map1.keys())
    ids2 = np.empty(len(map2), dtype=np.int64)
    ids2[list(map2.values())] = list(map2.keys())
    return g1, g2, seeds, truth, ids1, ids2


def _run_inputs(cfg: RunConfig) -> list[ResultRow]:
    from .estimation import derive_practical_params, estimate_all

    inp = cfg.inputs
    try:
        g1, g2, seeds, truth, _, _ = load_pair_inputs(inp["g1"], inp["g2"], inp["seeds"], inp.get("truth"))
    except KeyError as e:
        raise ConfigError(f"inputs section lacks {e}") from e
    if truth is None:
        raise ConfigError("benchmark on file inputs needs a truth file for scoring")
    est = estimate_all(g1, g2, seeds)
    rows = []
    for value in cfg.points():
        _, algo = _point_settings(cfg, value)
        D = int(algo.pop("D", 3))
        params = derive_practical_params(est, D, g1.vertex_count, g2.vertex_count, **algo)
        for name in cfg.algorithms:
            t0 = time.perf_counter()
            m = run_algorithm(name, g1, g2, seeds, params)
            wall = (time.perf_counter() - t0) * 1000
            m.check_injective()
            m.check_thresholds()
            acc, prec = score(m, truth)
            rows.append(ResultRow(name, cfg.sweep_param or "", value, 0, acc, prec, len(m), wall,
                                  tuple(sorted(m.stage_counts().items()))))
    return rows


def median_table(rows: list[ResultRow], metric: str = "accuracy") -> dict[str, list[tuple[object, float]]]:
    """Per algorithm, ``(sweep_value, median metric)`` in sweep order."""
    groups: dict[str, dict[object, list[float]]] = {}
    for r in rows:
        groups.setdefault(r.algorithm, {}).setdefault(r.sweep_value, []).append(getattr(r, metric))
    return {a: [(v, statistics.median(xs)) for v, xs in pts.items()] for a, pts in groups.items()}


def check_monotone(rows: list[ResultRow], slack: float = 0.02) -> dict[str, list]:
    """Algorithms whose median accuracy is not nondecreasing along the sweep.

    One drop of at most ``slack`` is tolerated as noise.
    """
    bad = {}
    for algo, pts in median_table(rows).items():
        drops = [(a[0], b[0], a[1] - b[1]) for a, b in zip(pts, pts[1:]) if b[1] < a[1]]
        if len(drops) > 1 or any(d[2] > slack for d in drops):
            bad[algo] = drops
    return bad


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6f}"
    return "" if x is None else str(x)


def emit_csv(rows: list[ResultRow], path, timing: bool = True) -> None:
    if not rows:
        raise ValueError("no results to write")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.algorithm, r.sweep_param, _fmt(r.sweep_value), r.repetition, _fmt(r.accuracy),
                    _fmt(r.precision), r.matched, f"{r.wall_ms:.1f}" if timing else ""])
    Path(path).write_text(buf.getvalue())


def emit_plot(rows: list[ResultRow], path) -> None:
    """Median accuracy against the sweep value, one line per algorithm, as SVG."""
    if not rows:
        raise ValueError("no results to plot")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    table = median_table(rows)
    param = rows[0].sweep_param or "point"
    fig, ax = plt.subplots(figsize=(6, 4))
    for algo, pts in table.items():
        xs = [v if v is not None else 0 for v, _ in pts]
        ax.plot(xs, [m for _, m in pts], marker="o", label=algo)
    ax.set_xlabel(param)
    ax.set_ylabel("median accuracy")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def write_matching(m: Matching, path, ids1=None, ids2=None) -> None:
    """``u v stage`` lines, translated back to file ids when maps are given."""
    lines = []
    for u, rec in m.records():
        a = int(ids1[u]) if ids1 is not None else u
        b = int(ids2[rec.v]) if ids2 is not None else rec.v
        lines.append(f"{a} {b} {rec.stage}\n")
    Path(path).write_text("".join(lines))


def matching_summary(m: Matching, truth=None) -> dict:
    out = {"n_matched": len(m), "stages": dict(sorted(m.stage_counts().items()))}
    if truth is not None:
        acc, prec = score(m, truth)
        out.update(accuracy=acc, recall=acc, precision=prec)
    return out
