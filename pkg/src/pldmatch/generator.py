"""Chung-Lu parent graphs, correlated edge-subsampled pairs and seed sets.

Every random draw comes from a purpose-specific stream derived from
``(master_seed, repetition)``, so e.g. changing the seed fraction leaves the
graph realizations untouched.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import Graph, from_edges, save_edge_list

# parent graphs up to this size are sampled by visiting every vertex pair
ALL_PAIRS_LIMIT = 20_000

STREAMS = ("parent", "g1_edges", "g2_edges", "permutation", "g1_vertices", "g2_vertices", "seeds")


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    n: int
    beta: float
    wbar: float
    wmax: float | None = None  # None -> sqrt(n * wbar), the largest admissible value
    s: float = 1.0
    theta: float = 0.0
    vertex_keep: float = 1.0

    @property
    def wmax_value(self) -> float:
        return math.sqrt(self.n * self.wbar) if self.wmax is None else float(self.wmax)

    def validate(self, strict_beta: bool = True) -> None:
        if self.n < 1:
            raise ParameterError("n must be positive")
        if not self.wbar > 0:
            raise ParameterError("wbar must be positive")
        wmax = self.wmax_value
        if not self.wbar < wmax:
            raise ParameterError(f"need wbar < wmax (wbar={self.wbar}, wmax={wmax})")
        # small relative slack so wmax = sqrt(n*wbar) computed elsewhere still passes
        if wmax > math.sqrt(self.n * self.wbar) * (1 + 1e-12):
            raise ParameterError(f"need wmax <= sqrt(n*wbar) = {math.sqrt(self.n * self.wbar):.6g}")
        if not 2 < self.beta < 3:
            if strict_beta or not self.beta > 2:
                raise ParameterError(f"beta must lie in (2, 3), got {self.beta}")
            warnings.warn(f"beta={self.beta} outside (2, 3); results are advisory", stacklevel=2)
        if not 0 <= self.s <= 1:
            raise ParameterError("s must lie in [0, 1]")
        if not 0 <= self.theta <= 1:
            raise ParameterError("theta must lie in [0, 1]")
        if not 0 < self.vertex_keep <= 1:
            raise ParameterError("vertex_keep must lie in (0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class WeightSequence:
    w: np.ndarray
    i0: float


@dataclass
class CorrelatedInstance:
    """Two observed graphs plus the hidden correspondence between them.

    ``truth[u]`` is the G2 id of G1 vertex ``u``, or -1 when ``u`` did not
    survive into G2.
    """

    g1: Graph
    g2: Graph
    truth: np.ndarray
    seeds: list[tuple[int, int]] = field(default_factory=list)

    def truth_pairs(self) -> list[tuple[int, int]]:
        u = np.flatnonzero(self.truth >= 0)
        return list(zip(u.tolist(), self.truth[u].tolist()))

    @property
    def common_count(self) -> int:
        return int((self.truth >= 0).sum())


def rng_streams(master_seed: int, repetition: int = 0) -> dict[str, np.random.Generator]:
    return {
        name: np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(repetition, k)))
        for k, name in enumerate(STREAMS)
    }


def compute_weights(p: ModelParams) -> WeightSequence:
    p.validate(strict_beta=False)
    b, n, wbar, wmax = p.beta, p.n, p.wbar, p.wmax_value
    i0 = n * (wbar * (b - 2) / (wmax * (b - 1))) ** (b - 1)
    i = np.arange(n, dtype=np.float64)
    w = wbar * (b - 2) / (b - 1) * (n / (i + i0)) ** (1 / (b - 1))
    return WeightSequence(w, i0)


def _check_probabilities(w: np.ndarray, norm: float) -> None:
    if len(w) >= 2:
        top = np.sort(w)[-2:]
        if top[0] * top[1] / norm > 1 + 1e-12:
            raise ParameterError("edge probability w_i w_j / (n wbar) exceeds 1")


def _sample_all_pairs(w: np.ndarray, norm: float, rng: np.random.Generator) -> np.ndarray:
    n = len(w)
    chunks = []
    for i in range(n - 1):
        pij = w[i] * w[i + 1:] / norm
        hit = np.flatnonzero(rng.random(n - 1 - i) < pij)
        if hit.size:
            chunks.append(np.column_stack([np.full(hit.size, i), hit + i + 1]))
    return np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)


def _bernoulli_positions(total: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices in ``range(total)`` where iid Bernoulli(p) trials succeed (geometric skips)."""
    if p <= 0 or total <= 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(total, dtype=np.int64)
    out = []
    pos = -1
    batch = int(total * p * 1.1) + 16
    while True:
        gaps = rng.geometric(p, size=batch)
        idx = pos + np.cumsum(gaps)
        out.append(idx[idx < total])
        if idx[-1] >= total:
            break
        pos = int(idx[-1])
    return np.concatenate(out)


def _sample_bucketed(w: np.ndarray, norm: float, rng: np.random.Generator) -> np.ndarray:
    # buckets are contiguous index ranges because w is nonincreasing
    level = np.floor(np.log2(w[0] / w)).astype(np.int64)
    starts = np.flatnonzero(np.r_[True, level[1:] != level[:-1]])
    bounds = list(zip(starts.tolist(), np.r_[starts[1:], len(w)].tolist()))
    chunks = []
    for a, (a0, a1) in enumerate(bounds):
        for b0, b1 in bounds[a:]:
            pmax = w[a0] * w[b0] / norm
            if a0 == b0:
                m = a1 - a0
                t = _bernoulli_positions(m * (m - 1) // 2, pmax, rng)
                # strict upper triangle, row-major: row r holds m-1-r entries
                row_start = np.r_[0, np.cumsum(np.arange(m - 1, 0, -1))]
                r = np.searchsorted(row_start, t, side="right") - 1
                c = t - row_start[r] + r + 1
                i, j = r + a0, c + a0
            else:
                t = _bernoulli_positions((a1 - a0) * (b1 - b0), pmax, rng)
                i, j = np.divmod(t, b1 - b0)
                i, j = i + a0, j + b0
            keep = rng.random(len(t)) < (w[i] * w[j] / norm) / pmax
            chunks.append(np.column_stack([i[keep], j[keep]]))
    return np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)


def sample_parent(w: WeightSequence, p: ModelParams, rng: np.random.Generator,
                  method: str | None = None) -> Graph:
    """Chung-Lu graph: pair ``{i, j}`` present independently with prob ``w_i w_j / (n wbar)``.

    ``method`` forces ``"all_pairs"`` or ``"bucketed"``; by default the
    exhaustive scan is used up to ``ALL_PAIRS_LIMIT`` vertices.
    """
    weights = np.asarray(w.w, dtype=np.float64)
    norm = p.n * p.wbar
    _check_probabilities(weights, norm)
    if method is None:
        method = "all_pairs" if p.n <= ALL_PAIRS_LIMIT else "bucketed"
    if method == "all_pairs":
        edges = _sample_all_pairs(weights, norm, rng)
    elif method == "bucketed":
        if np.any(np.diff(weights) > 0):
            raise ParameterError("bucketed sampling needs nonincreasing weights")
        edges = _sample_bucketed(weights, norm, rng)
    else:
        raise ValueError(f"unknown sampling method {method!r}")
    return from_edges(p.n, edges)


def subsample_pair(g0: Graph, p: ModelParams, streams: dict[str, np.random.Generator]) -> CorrelatedInstance:
    """Two independent edge (and optionally vertex) subsamples of ``g0``; G2 is relabeled."""
    n = g0.vertex_count
    edges = g0.edges()

    def observe(edge_rng, vertex_rng):
        keep_v = np.ones(n, dtype=bool)
        if p.vertex_keep < 1:
            keep_v = vertex_rng.random(n) < p.vertex_keep
        keep_e = edge_rng.random(len(edges)) < p.s
        e = edges[keep_e & keep_v[edges[:, 0]] & keep_v[edges[:, 1]]]
        return keep_v, e

    keep1, e1 = observe(streams["g1_edges"], streams["g1_vertices"])
    keep2, e2 = observe(streams["g2_edges"], streams["g2_vertices"])

    ids1 = np.full(n, -1, dtype=np.int64)
    ids1[keep1] = np.arange(int(keep1.sum()))
    n2 = int(keep2.sum())
    ids2 = np.full(n, -1, dtype=np.int64)
    ids2[keep2] = streams["permutation"].permutation(n2)

    g1 = from_edges(int(keep1.sum()), ids1[e1])
    g2 = from_edges(n2, ids2[e2])
    truth = np.full(g1.vertex_count, -1, dtype=np.int64)
    common = keep1 & keep2
    truth[ids1[common]] = ids2[common]
    return CorrelatedInstance(g1, g2, truth)


def sample_seed_set(inst: CorrelatedInstance, theta: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    """Each true pair becomes a seed independently with probability ``theta``.

    One uniform is drawn per G1 vertex, so seed sets for increasing
    ``theta`` on the same stream are nested.
    """
    if not 0 <= theta <= 1:
        raise ParameterError("theta must lie in [0, 1]")
    draws = rng.random(len(inst.truth))
    pick = np.flatnonzero((inst.truth >= 0) & (draws < theta))
    inst.seeds = list(zip(pick.tolist(), inst.truth[pick].tolist()))
    return inst.seeds


def generate_parent(p: ModelParams, master_seed: int, repetition: int = 0) -> Graph:
    return sample_parent(compute_weights(p), p, rng_streams(master_seed, repetition)["parent"])


def generate_instance(p: ModelParams, master_seed: int, repetition: int = 0,
                      parent: Graph | None = None) -> CorrelatedInstance:
    """Full pipeline: weights, parent graph, correlated pair, seeds."""
    p.validate()
    streams = rng_streams(master_seed, repetition)
    g0 = parent if parent is not None else sample_parent(compute_weights(p), p, streams["parent"])
    inst = subsample_pair(g0, p, streams)
    sample_seed_set(inst, p.theta, streams["seeds"])
    return inst


def export_instance(inst: CorrelatedInstance, out_dir, params: ModelParams, master_seed: int,
                    include_truth: bool = True) -> dict[str, Path]:
    """Write ``g1.el``, ``g2.el``, ``seeds.txt`` and an ``instance.json`` sidecar.

    The truth map goes into the sidecar (and ``truth.txt``) only in benchmark mode.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"g1": out / "g1.el", "g2": out / "g2.el", "seeds": out / "seeds.txt",
             "meta": out / "instance.json"}
    save_edge_list(inst.g1, paths["g1"])
    save_edge_list(inst.g2, paths["g2"])
    paths["seeds"].write_text("".join(f"{u} {v}\n" for u, v in inst.seeds))
    meta = {"params": params.to_dict(), "master_seed": master_seed,
            "n1": inst.g1.vertex_count, "n2": inst.g2.vertex_count}
    if include_truth:
        meta["truth"] = inst.truth.tolist()
        paths["truth"] = out / "truth.txt"
        paths["truth"].write_text("".join(f"{u} {v}\n" for u, v in inst.truth_pairs()))
    paths["meta"].write_text(json.dumps(meta, indent=2))
    return paths
