"""Partial vertex correspondences and sparse witness-count tables."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

STAGES = ("seed", "slice1_dhop", "cascade", "pgm", "slice0")


class InjectivityError(AssertionError):
    pass


@dataclass
class MatchRecord:
    v: int
    stage: str
    count: float  # witness count / marks when matched (inf for seeds)
    threshold: float


class Matching:
    """Injective partial map from G1 ids to G2 ids with per-pair provenance."""

    def __init__(self):
        self._fwd: dict[int, MatchRecord] = {}
        self._rev: dict[int, int] = {}

    @classmethod
    def from_pairs(cls, pairs, stage: str = "seed") -> "Matching":
        m = cls()
        for u, v in pairs:
            m.add(u, v, stage)
        return m

    def add(self, u: int, v: int, stage: str, count: float = float("inf"), threshold: float = 0.0) -> None:
        if u in self._fwd or v in self._rev:
            raise InjectivityError(f"pair ({u}, {v}) reuses a matched vertex")
        self._fwd[u] = MatchRecord(v, stage, count, threshold)
        self._rev[v] = u

    def try_add(self, u: int, v: int, stage: str, count: float = float("inf"), threshold: float = 0.0) -> bool:
        if u in self._fwd or v in self._rev:
            return False
        self.add(u, v, stage, count, threshold)
        return True

    def update(self, other: "Matching") -> int:
        """Union with first-come-wins on conflicts; returns the number of pairs dropped."""
        dropped = 0
        for u, rec in other._fwd.items():
            if not self.try_add(u, rec.v, rec.stage, rec.count, rec.threshold):
                dropped += self._fwd.get(u, MatchRecord(-1, "", 0, 0)).v != rec.v
        return dropped

    def __contains__(self, pair) -> bool:
        u, v = pair
        rec = self._fwd.get(u)
        return rec is not None and rec.v == v

    def __len__(self) -> int:
        return len(self._fwd)

    def __iter__(self):
        return ((u, r.v) for u, r in self._fwd.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, Matching) and self.pair_set() == other.pair_set()

    def __repr__(self) -> str:
        return f"Matching({len(self)} pairs, {dict(self.stage_counts())})"

    def pair_set(self) -> set[tuple[int, int]]:
        return set(self)

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        p = self.pairs()
        if not p:
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        a = np.asarray(p, dtype=np.int64)
        return a[:, 0], a[:, 1]

    def record(self, u: int) -> MatchRecord:
        return self._fwd[u]

    def records(self):
        return ((u, r) for u, r in sorted(self._fwd.items()))

    def stage_counts(self) -> Counter:
        return Counter(r.stage for r in self._fwd.values())

    def used1(self) -> set[int]:
        return set(self._fwd)

    def used2(self) -> set[int]:
        return set(self._rev)

    def mapped(self, u: int) -> int | None:
        rec = self._fwd.get(u)
        return None if rec is None else rec.v

    def check_injective(self) -> None:
        vs = [r.v for r in self._fwd.values()]
        if len(set(vs)) != len(vs) or set(vs) != set(self._rev):
            raise InjectivityError("matching is not injective")

    def check_thresholds(self) -> None:
        for u, r in self._fwd.items():
            if r.stage != "seed" and not (r.count >= r.threshold and r.count >= 1):
                raise AssertionError(f"pair ({u}, {r.v}) matched with {r.count} < {r.threshold}")


class WitnessCounts:
    """Sparse table of positive witness counts, stored as parallel arrays."""

    __slots__ = ("u", "v", "count")

    def __init__(self, u, v, count):
        self.u = np.asarray(u, dtype=np.int64)
        self.v = np.asarray(v, dtype=np.int64)
        self.count = np.asarray(count, dtype=np.int64)
        keep = self.count > 0
        if not keep.all():
            self.u, self.v, self.count = self.u[keep], self.v[keep], self.count[keep]

    @classmethod
    def empty(cls) -> "WitnessCounts":
        return cls([], [], [])

    @classmethod
    def from_dict(cls, d: dict) -> "WitnessCounts":
        if not d:
            return cls.empty()
        keys = list(d)
        return cls([k[0] for k in keys], [k[1] for k in keys], [d[k] for k in keys])

    @classmethod
    def from_sparse(cls, mat) -> "WitnessCounts":
        coo = mat.tocoo()
        return cls(coo.row, coo.col, np.rint(coo.data))

    def as_dict(self) -> dict[tuple[int, int], int]:
        return {(a, b): c for a, b, c in zip(self.u.tolist(), self.v.tolist(), self.count.tolist())}

    def __len__(self) -> int:
        return len(self.count)

    def __getitem__(self, pair) -> int:
        hit = np.flatnonzero((self.u == pair[0]) & (self.v == pair[1]))
        return int(self.count[hit[0]]) if hit.size else 0
