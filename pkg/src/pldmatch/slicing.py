"""Degree slices, model constants, matching thresholds and the feasibility audit."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .generator import ParameterError

DELTA = 1 / 8
GAMMA_CAP = 0.49


def optimal_gamma(D: int, beta: float) -> float:
    """Slice exponent balancing true-pair D-hop reach against fake-pair overlap."""
    if D < 1:
        raise ParameterError("D must be >= 1")
    return 1 / ((3 - beta) * (D - 1) + 1)


def default_gamma(D: int, beta: float) -> float:
    return min(optimal_gamma(D, beta), GAMMA_CAP)


@dataclass(frozen=True)
class PldParams:
    n: int
    beta: float
    wbar: float
    s: float
    theta: float
    D: int = 3
    gamma: float | None = None  # None -> default_gamma(D, beta)
    delta: float = DELTA
    r_pgm: int = 3
    threshold_scale: float = 1.0
    slice_floor_degree: float = 8.0
    mode: str = "practical"
    q0_threshold: float | None = None  # off by default: slice-0 pass needs one witness
    tau1_rule: str = "full"  # "simplified" replaces n^{gamma(...)} by n
    wmax: float | None = None  # only used by the feasibility audit
    # None -> resolved from ``mode``; see ``resolved``
    cascade_witnesses: str | None = None  # "previous" slice only, or "cumulative"
    pgm_scope: str | None = None  # "capped" degree subgraph, or "full" graphs
    min_witnesses: int | None = None  # witness floor for the 1-hop stages
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def gamma_value(self) -> float:
        return default_gamma(self.D, self.beta) if self.gamma is None else float(self.gamma)

    @property
    def wmax_value(self) -> float:
        return math.sqrt(self.n * self.wbar) if self.wmax is None else float(self.wmax)

    @property
    def resolved(self) -> dict:
        """Stage options after applying mode defaults.

        ``theory`` runs the listing verbatim.  ``practical`` feeds every pair
        matched so far into the 1-hop stages and percolation, runs
        percolation on the full graphs, and requires as many 1-hop witnesses
        as the percolation threshold ``r_pgm``.
        """
        practical = self.mode == "practical"
        return {
            "cascade_witnesses": self.cascade_witnesses or ("cumulative" if practical else "previous"),
            "pgm_scope": self.pgm_scope or ("full" if practical else "capped"),
            "min_witnesses": self.min_witnesses if self.min_witnesses is not None else (self.r_pgm if practical else 1),
        }

    def validate(self) -> None:
        if self.delta != DELTA:
            raise ParameterError("delta is fixed at 1/8")
        if self.D < 1:
            raise ParameterError("D must be >= 1")
        if not 0 < self.gamma_value <= 1:
            raise ParameterError(f"gamma must lie in (0, 1], got {self.gamma_value}")
        if self.n < 2:
            raise ParameterError("n must be >= 2")
        if not self.beta > 2:
            raise ParameterError("beta must exceed 2")
        if not (self.wbar > 0 and 0 < self.s <= 1 and 0 <= self.theta <= 1):
            raise ParameterError("need wbar > 0, s in (0, 1], theta in [0, 1]")
        if self.r_pgm < 1:
            raise ParameterError("PGM threshold r must be >= 1")
        if not self.threshold_scale > 0:
            raise ParameterError("threshold_scale must be positive")
        if self.mode not in ("practical", "theory"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.cascade_witnesses not in (None, "previous", "cumulative"):
            raise ParameterError(f"unknown cascade witness rule {self.cascade_witnesses!r}")
        if self.pgm_scope not in (None, "capped", "full"):
            raise ParameterError(f"unknown PGM scope {self.pgm_scope!r}")
        if self.min_witnesses is not None and self.min_witnesses < 1:
            raise ParameterError("min_witnesses must be >= 1")
        if self.tau1_rule not in ("full", "simplified"):
            raise ParameterError(f"unknown tau1 rule {self.tau1_rule!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gamma"] = self.gamma_value
        d["warnings"] = list(self.warnings)
        return d


def model_constant_c(beta: float, wbar: float) -> float:
    return (2 ** (beta - 1) - 1) * ((beta - 2) * wbar / (beta - 1)) ** (beta - 1)


def model_constant_kappa(beta: float, wbar: float, delta: float = DELTA) -> float:
    c = model_constant_c(beta, wbar)
    return (1 + 2 * delta) ** 2 * 2 ** (5 - beta) * c / ((2 ** (3 - beta) - 1) * wbar)


@dataclass(frozen=True)
class DerivedConstants:
    C: float
    kappa: float
    n_gamma: float
    k_star: int
    tau1: float
    beta: float
    s: float
    wbar: float
    scale: float
    k_star_raw: float  # untruncated log2 expression from the theory formula

    def alpha(self, k: int) -> float:
        if k < 0:
            return math.inf
        return self.n_gamma / 2 ** k

    def tau2(self, k: int) -> float:
        return self.C * self.alpha(k - 1) ** (3 - self.beta) * self.s ** 2 / (16 * self.wbar) * self.scale


def theory_k_star(n: int, gamma: float, C: float, s: float, wbar: float, beta: float) -> float:
    inner = n ** gamma * (C * s ** 2 / (192 * wbar * math.log(n))) ** (1 / (3 - beta))
    return math.log2(inner)


def practical_k_star(n_gamma: float, s: float, floor_degree: float) -> int:
    """Deepest slice whose lower degree scale ``alpha_k * s`` stays above the floor."""
    k = 1
    while n_gamma / 2 ** (k + 1) * s >= floor_degree and n_gamma / 2 ** (k + 1) >= 1:
        k += 1
    return k


def derive_constants(p: PldParams) -> DerivedConstants:
    p.validate()
    gamma = p.gamma_value
    C = model_constant_c(p.beta, p.wbar)
    kappa = model_constant_kappa(p.beta, p.wbar, p.delta)
    if not (C > 0 and kappa > 0):
        raise ParameterError("model constants must be positive")
    if p.beta >= 3:
        raise ParameterError("thresholds need beta < 3")
    n_gamma = p.n ** gamma
    base = C * p.s ** 2 / (12 * p.wbar)
    if p.tau1_rule == "simplified":
        reach = p.n
    else:
        reach = p.n ** (gamma * ((3 - p.beta) * (p.D - 1) + 1))
    tau1 = 0.3 * base ** p.D * reach * p.theta * p.threshold_scale
    raw = theory_k_star(p.n, gamma, C, p.s, p.wbar, p.beta)
    if p.mode == "theory":
        k_star = math.floor(raw)
    else:
        k_star = practical_k_star(n_gamma, p.s, p.slice_floor_degree)
    return DerivedConstants(C=C, kappa=kappa, n_gamma=n_gamma, k_star=k_star, tau1=tau1,
                            beta=p.beta, s=p.s, wbar=p.wbar, scale=p.threshold_scale,
                            k_star_raw=raw)


def slice_bounds(k: int, d: DerivedConstants, p: PldParams) -> tuple[float, float]:
    """Closed degree interval of imperfect slice ``k``; slice 0 is unbounded above."""
    if k < 0:
        raise ValueError("slice index must be >= 0")
    return (1 - p.delta) * d.alpha(k) * p.s, (1 + p.delta) * d.alpha(k - 1) * p.s


def slice_membership(degree: int, k: int, d: DerivedConstants, p: PldParams) -> bool:
    lo, hi = slice_bounds(k, d, p)
    return lo <= degree <= hi


def slice_mask(degrees: np.ndarray, k: int, d: DerivedConstants, p: PldParams) -> np.ndarray:
    lo, hi = slice_bounds(k, d, p)
    return (degrees >= lo) & (degrees <= hi)


def feasibility_report(p: PldParams) -> list[dict]:
    """Numeric check of the sufficient conditions for error-free matching.

    Purely advisory: at desk scale the asymptotic conditions usually fail,
    which the report states rather than raising.
    """
    p.validate()
    n, b, s, D, wbar = p.n, p.beta, p.s, p.D, p.wbar
    gamma = p.gamma_value
    C = model_constant_c(b, wbar)
    kappa = model_constant_kappa(b, wbar, p.delta)
    ln = math.log(n)
    reach = n ** (gamma * ((3 - b) * (D - 1) + 1))
    base = C * s ** 2 / (12 * wbar)
    tree_rhs = (C * s * (2 ** (3 - b) - 1) / (20 * 2 ** (3 - b))
                * (C * s ** 2 / (12 * kappa ** 2 * wbar)) ** D * n / ln ** (3 - b))
    theta_rhs = 320 * ln / (base ** D * reach)
    wmax = p.wmax_value
    d_wmax = (ln / math.log(wmax) - 1) / (3 - b) + 1
    d_beta = (4 - b) / (3 - b)
    rows = [
        ("locally_tree_like", reach, tree_rhs, reach <= tree_rhs),
        ("seed_fraction", p.theta, theta_rhs, p.theta >= theta_rhs),
        ("D_vs_wmax", D, d_wmax, D >= d_wmax),
        ("D_vs_beta", D, d_beta, D > d_beta),
        ("gamma_le_log_n_wmax", gamma, math.log(wmax) / ln, gamma <= math.log(wmax) / ln),
        ("gamma_below_half", gamma, 0.5, gamma < 0.5),
    ]
    return [{"condition": c, "lhs": float(l), "rhs": float(r), "pass": bool(ok)} for c, l, r, ok in rows]


def feasibility_json(p: PldParams) -> str:
    return json.dumps(feasibility_report(p), indent=2)
