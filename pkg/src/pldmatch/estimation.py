"""Model-parameter estimates for observed graph pairs and the PLD settings derived from them."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .graph import Graph
from .slicing import GAMMA_CAP, PldParams, optimal_gamma

BETA_CLAMP = (2.01, 2.99)


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class EstimatedParams:
    beta_hat: float
    dmin_hat: int
    s_hat: float
    wbar_hat: float
    theta_hat: float

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_beta(degrees, dmin: int) -> float:
    """Continuous-approximation MLE of the power-law exponent over the degree tail."""
    if dmin < 1:
        raise EstimationError("dmin must be >= 1")
    d = np.asarray(degrees, dtype=np.float64)
    tail = d[d >= dmin]
    if tail.size == 0:
        raise EstimationError(f"no degree >= dmin={dmin}")
    return 1 + tail.size / np.log(tail / (dmin - 0.5)).sum()


def ks_distance(degrees, dmin: int) -> float:
    """Max gap between the tail's empirical CDF and the fitted power-law CDF.

    Both sides are evaluated as ``P(X < x)`` at each distinct tail value,
    with ``F(x) = 1 - ((x - 1/2) / (dmin - 1/2)) ** (1 - beta)``.
    """
    d = np.sort(np.asarray(degrees, dtype=np.float64))
    tail = d[d >= dmin]
    beta = estimate_beta(tail, dmin)
    xs = np.unique(tail)
    below = np.searchsorted(tail, xs, side="left") / tail.size
    model = 1 - ((xs - 0.5) / (dmin - 0.5)) ** (1 - beta)
    return float(np.abs(below - model).max())


def estimate_dmin(degrees) -> int:
    """Kolmogorov-Smirnov choice of the tail cutoff; ties go to the smaller cutoff."""
    d = np.asarray(degrees, dtype=np.int64)
    if d.size == 0:
        raise EstimationError("no degrees")
    positive = np.unique(d[d >= 1])
    if positive.size == 0:
        raise EstimationError("all degrees are zero")
    cands = positive[(positive >= 2) & (positive <= 0.1 * d.max())]
    if cands.size == 0:
        cands = positive[:1]
    best, best_ks = None, math.inf
    for c in cands.tolist():
        ks = ks_distance(d, c)
        if ks < best_ks:
            best, best_ks = c, ks
    return int(best)


def estimate_s(g1: Graph, g2: Graph, seed_pairs) -> float:
    """Edge overlap of the two seed-induced subgraphs after aligning G2 through the seeds."""
    seed_pairs = list(seed_pairs)
    if len(seed_pairs) < 2:
        raise EstimationError("need at least two seeds")
    a = np.asarray(seed_pairs, dtype=np.int64)
    in1 = np.zeros(g1.vertex_count, dtype=bool)
    in1[a[:, 0]] = True
    back = np.full(g2.vertex_count, -1, dtype=np.int64)
    back[a[:, 1]] = a[:, 0]

    e1 = g1.edges()
    e1 = e1[in1[e1[:, 0]] & in1[e1[:, 1]]]
    e2 = back[g2.edges()]
    e2 = e2[(e2 >= 0).all(axis=1)]
    e2.sort(axis=1)
    if len(e1) + len(e2) == 0:
        raise EstimationError("seed-induced subgraphs have no edges")
    n = g1.vertex_count
    common = np.intersect1d(e1[:, 0] * n + e1[:, 1], e2[:, 0] * n + e2[:, 1]).size
    return 2 * common / (len(e1) + len(e2))


def mean_degree(g: Graph) -> float:
    return 2 * g.edge_count / g.vertex_count if g.vertex_count else 0.0


def estimate_wbar(g1: Graph, g2: Graph, s_hat: float) -> float:
    if not s_hat > 0:
        raise EstimationError("s_hat must be positive to estimate wbar")
    return (mean_degree(g1) + mean_degree(g2)) / (2 * s_hat)


def estimate_theta(seed_count: int, n: int) -> float:
    if n <= 0:
        raise EstimationError("n must be positive")
    return seed_count / n


def estimate_all(g1: Graph, g2: Graph, seeds, dmin: int | None = 6) -> EstimatedParams:
    """All estimates at once; ``dmin=None`` picks the cutoff by KS on the pooled degrees."""
    seeds = list(seeds)
    degrees = np.concatenate([g1.degree, g2.degree])
    dmin = estimate_dmin(degrees) if dmin is None else dmin
    beta = estimate_beta(degrees, dmin)
    s_hat = estimate_s(g1, g2, seeds)
    return EstimatedParams(
        beta_hat=float(beta),
        dmin_hat=int(dmin),
        s_hat=float(s_hat),
        wbar_hat=float(estimate_wbar(g1, g2, s_hat)),
        theta_hat=estimate_theta(len(seeds), min(g1.vertex_count, g2.vertex_count)),
    )


def derive_practical_params(est: EstimatedParams, D: int, n1: int, n2: int,
                            theta: float | None = None, **overrides) -> PldParams:
    """PLD settings for real data: clamped optimal gamma and the simplified first-slice threshold."""
    warnings = []
    beta = est.beta_hat
    lo, hi = BETA_CLAMP
    if not 2 < beta < 3:
        warnings.append(f"beta_hat={beta:.4g} outside (2, 3); clamped to [{lo}, {hi}] for thresholds")
    beta = min(max(beta, lo), hi)
    gamma = optimal_gamma(D, beta)
    if gamma > GAMMA_CAP:
        gamma = GAMMA_CAP
    theta = est.theta_hat if theta is None else theta
    if not (math.isfinite(est.s_hat) and math.isfinite(est.wbar_hat)):
        raise EstimationError("estimates must be finite")
    s_hat = est.s_hat
    if not s_hat > 0:
        raise EstimationError("s_hat must be positive")
    fields = dict(n=min(n1, n2), beta=beta, wbar=est.wbar_hat, s=min(s_hat, 1.0), theta=theta,
                  D=D, gamma=gamma, mode="practical", tau1_rule="simplified",
                  warnings=tuple(warnings))
    fields.update(overrides)
    return PldParams(**fields)
