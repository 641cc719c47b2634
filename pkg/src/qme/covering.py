"""Minimal spanning and maximal separated cardinalities on threshold relations.

For a distance rule e, an orbit table and a scale eps, two symmetric cover
relations are built from the orbit-maximized distances e_n:

``two_sided``  y covers x when e_n(x, y) <= eps AND e_n(y, x) <= eps
``one_sided``  y covers x when e_n(x, y) <= eps OR  e_n(y, x) <= eps

Separation is the off-diagonal complement of cover for the matching pairing,
so a minimal spanning set is a minimum dominating set of the cover graph and a
maximal separated set is a maximum independent set of the same graph.

Both problems get a deterministic greedy solver and an exact branch-and-bound
solver (bitset based). Greedy covers never undershoot the optimum and greedy
separated sets never overshoot it; the exact solver is the oracle for both.
All tie-breaking is by lowest point id, so results are reproducible.
"""
from __future__ import annotations

import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .dynamics import OrbitTable, PointCloud
from .quasimetric import QuasiMetricSpec, pairwise

__all__ = [
    "VARIANTS",
    "RelationGraph",
    "CoverResult",
    "SeparatedResult",
    "CellCounts",
    "CountGrid",
    "bowen_matrix",
    "build_relation",
    "greedy_cover",
    "exact_cover",
    "greedy_separated",
    "exact_separated",
    "min_spanning",
    "max_separated",
    "count_grid",
    "is_valid_cover",
    "is_separated_set",
]

VARIANTS = ("two_sided", "one_sided")

DEFAULT_EXACT_THRESHOLD = 64

# Quantity codes used in serialized grids: r1/s1 pair with the two_sided
# relation, r2/s2 with the one_sided relation.
QUANTITIES = ("r1", "s1", "r2", "s2")


def bowen_matrix(spec: QuasiMetricSpec, orbits: OrbitTable, n: int) -> np.ndarray:
    """Full matrix of orbit-maximized distances: M[x, y] = max_{i<n} e(T^i x, T^i y)."""
    if not 1 <= n <= orbits.n_max:
        raise ValueError(f"n must be in 1..{orbits.n_max}, got {n}")
    out = None
    for i in range(n):
        pts = orbits.iterate_points(i)
        d = pairwise(spec, pts, pts)
        out = d if out is None else np.maximum(out, d, out=out)
    return out


def _cover_from_distances(dist: np.ndarray, eps: float, variant: str) -> np.ndarray:
    fwd = dist <= eps
    if variant == "two_sided":
        return fwd & fwd.T
    if variant == "one_sided":
        return fwd | fwd.T
    raise ValueError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class RelationGraph:
    """Cover adjacency at one (n, eps) cell; separation is its complement."""

    n: int
    eps: float
    variant: str
    cover: np.ndarray  # (N, N) bool, symmetric, all-true diagonal

    def __post_init__(self):
        c = self.cover
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("cover adjacency must be square")
        if not np.all(np.diagonal(c)):
            raise ValueError("cover adjacency must include the diagonal")

    @property
    def size(self) -> int:
        return self.cover.shape[0]

    @property
    def separation(self) -> np.ndarray:
        """Mutual-separation adjacency: complement of cover off the diagonal."""
        sep = ~self.cover
        np.fill_diagonal(sep, False)
        return sep


def build_relation(spec: QuasiMetricSpec, orbits: OrbitTable, n: int, eps: float,
                   variant: str) -> RelationGraph:
    """Threshold the orbit-maximized distances into a cover relation."""
    if not eps > 0.0:
        raise ValueError("eps must be > 0")
    dist = bowen_matrix(spec, orbits, n)
    cover = _cover_from_distances(dist, eps, variant)
    return RelationGraph(n=n, eps=eps, variant=variant, cover=cover)


# ---------------------------------------------------------------------------
# greedy solvers (numpy, deterministic)
# ---------------------------------------------------------------------------

def greedy_cover(cover: np.ndarray) -> list:
    """Repeatedly pick the point covering the most uncovered points; ties go to
    the lowest id. Always terminates: every point covers itself."""
    n = cover.shape[0]
    uncovered = np.ones(n, dtype=bool)
    gains = cover.sum(axis=0).astype(np.int64)
    picks = []
    while uncovered.any():
        y = int(np.argmax(gains))
        newly = uncovered & cover[:, y]
        picks.append(y)
        uncovered &= ~cover[:, y]
        gains -= cover[newly, :].sum(axis=0, dtype=np.int64)
    return picks


def greedy_separated(cover: np.ndarray) -> list:
    """Insert points in id order, keeping pairwise separation."""
    n = cover.shape[0]
    conflicted = np.zeros(n, dtype=bool)
    picks = []
    for x in range(n):
        if not conflicted[x]:
            picks.append(x)
            conflicted |= cover[:, x]
    return picks


# ---------------------------------------------------------------------------
# exact solvers (bitset branch and bound)
# ---------------------------------------------------------------------------

def _column_masks(cover: np.ndarray) -> list:
    """cover columns as python-int bitsets: mask[y] has bit x iff y covers x."""
    n = cover.shape[0]
    masks = []
    for y in range(n):
        col = np.packbits(cover[:, y].astype(np.uint8), bitorder="little")
        masks.append(int.from_bytes(col.tobytes(), "little"))
    return masks


def exact_cover(cover: np.ndarray) -> tuple:
    """Minimum dominating set of the cover graph.

    Branch and bound: a greedy solution provides the upper bound; a packing of
    points no two of which share a candidate coverer provides the lower bound.
    Branching fixes the uncovered point with the fewest candidate coverers and
    tries its coverers in order of decreasing fresh coverage.

    Returns (sorted point ids, nodes explored).
    """
    n = cover.shape[0]
    full = (1 << n) - 1
    covmask = _column_masks(cover)
    rowmask = _column_masks(cover.T)  # coverers of x (equals covmask when symmetric)

    # union of coverage reachable through any coverer of x, for the lower bound
    blocked = []
    for x in range(n):
        acc = 0
        m = rowmask[x]
        while m:
            y = (m & -m).bit_length() - 1
            acc |= covmask[y]
            m &= m - 1
        blocked.append(acc)

    best = greedy_cover(cover)
    best_len = len(best)

    def lower_bound(uncov: int) -> int:
        lb = 0
        rem = uncov
        while rem:
            x = (rem & -rem).bit_length() - 1
            lb += 1
            rem &= ~blocked[x]
        return lb

    nodes = 0
    chosen: list = []
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * n + 100))

    def descend(covered: int) -> None:
        nonlocal best, best_len, nodes
        nodes += 1
        if covered == full:
            if len(chosen) < best_len:
                best_len = len(chosen)
                best = list(chosen)
            return
        uncov = full & ~covered
        if len(chosen) + lower_bound(uncov) >= best_len:
            return
        # branch on the uncovered point with the fewest coverers
        bx, bcount = -1, n + 1
        m = uncov
        while m:
            x = (m & -m).bit_length() - 1
            c = rowmask[x].bit_count()
            if c < bcount:
                bx, bcount = x, c
            m &= m - 1
        cands = []
        m = rowmask[bx]
        while m:
            y = (m & -m).bit_length() - 1
            gain = (covmask[y] & uncov).bit_count()
            cands.append((-gain, y))
            m &= m - 1
        cands.sort()
        for _, y in cands:
            chosen.append(y)
            descend(covered | covmask[y])
            chosen.pop()

    descend(0)
    return sorted(best), nodes


def exact_separated(cover: np.ndarray) -> tuple:
    """Maximum independent set of the cover graph.

    Branch and bound seeded with the greedy id-order set; pruning uses a greedy
    clique-cover bound on the remaining candidates. Returns (sorted ids, nodes).
    """
    n = cover.shape[0]
    adj = []
    for x in range(n):
        col = np.packbits(cover[:, x].astype(np.uint8), bitorder="little")
        adj.append(int.from_bytes(col.tobytes(), "little") & ~(1 << x))

    best = greedy_separated(cover)
    best_len = len(best)
    nodes = 0
    chosen: list = []
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 4 * n + 100))

    def clique_cover_bound(pool: int) -> int:
        cliques = 0
        rem = pool
        while rem:
            v = (rem & -rem).bit_length() - 1
            rem &= ~(1 << v)
            clique = 1 << v
            common = adj[v] & rem
            while common:
                u = (common & -common).bit_length() - 1
                clique |= 1 << u
                rem &= ~(1 << u)
                common &= adj[u]
            cliques += 1
        return cliques

    def descend(pool: int) -> None:
        nonlocal best, best_len, nodes
        nodes += 1
        size = len(chosen)
        if pool == 0:
            if size > best_len:
                best_len = size
                best = list(chosen)
            return
        if size + clique_cover_bound(pool) <= best_len:
            return
        # pivot on the candidate with the most conflicts among candidates
        bv, bdeg = -1, -1
        m = pool
        while m:
            v = (m & -m).bit_length() - 1
            d = (adj[v] & pool).bit_count()
            if d > bdeg:
                bv, bdeg = v, d
            m &= m - 1
        chosen.append(bv)
        descend(pool & ~(adj[bv] | (1 << bv)))
        chosen.pop()
        descend(pool & ~(1 << bv))

    descend((1 << n) - 1)
    return sorted(best), nodes


# ---------------------------------------------------------------------------
# results and cell solving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoverResult:
    cardinality: int
    witness: tuple
    method: str  # exact_bnb | greedy
    optimal: bool
    nodes: int = 0


@dataclass(frozen=True)
class SeparatedResult:
    cardinality: int
    witness: tuple
    method: str
    optimal: bool
    nodes: int = 0


def _resolve_mode(mode: str, size: int, exact_threshold: int) -> str:
    if mode not in ("auto", "exact", "greedy"):
        raise ValueError(f"unknown solver mode {mode!r}")
    if mode == "auto":
        return "exact" if size <= exact_threshold else "greedy"
    return mode


def min_spanning(graph: RelationGraph, mode: str = "auto",
                 exact_threshold: int = DEFAULT_EXACT_THRESHOLD) -> CoverResult:
    """Smallest set of cloud points covering every cloud point."""
    return _solve_cover(graph.cover, mode, exact_threshold)


def max_separated(graph: RelationGraph, mode: str = "auto",
                  exact_threshold: int = DEFAULT_EXACT_THRESHOLD) -> SeparatedResult:
    """Largest set of cloud points that is pairwise separated."""
    return _solve_separated(graph.cover, mode, exact_threshold)


def is_valid_cover(cover: np.ndarray, witness: Iterable) -> bool:
    ids = list(witness)
    if not ids:
        return cover.shape[0] == 0
    return bool(cover[:, ids].any(axis=1).all())


def is_separated_set(cover: np.ndarray, witness: Iterable) -> bool:
    ids = list(witness)
    sub = cover[np.ix_(ids, ids)].copy()
    np.fill_diagonal(sub, False)
    return not bool(sub.any())


# ---------------------------------------------------------------------------
# count grids
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CellCounts:
    """Solver results at one (n, eps) cell; quantities may be absent when a
    variant was not requested."""

    n: int
    eps: float
    r1: Optional[CoverResult] = None
    s1: Optional[SeparatedResult] = None
    r2: Optional[CoverResult] = None
    s2: Optional[SeparatedResult] = None

    def get(self, quantity: str):
        if quantity not in QUANTITIES:
            raise KeyError(quantity)
        return getattr(self, quantity)


@dataclass
class CountGrid:
    """All requested counts over the (n, eps) schedule, plus diagnostics."""

    cloud_size: int
    n_list: list
    eps_list: list
    variants: tuple
    cells: dict  # (n, eps) -> CellCounts
    diagnostics: list = field(default_factory=list)

    def cell(self, n: int, eps: float) -> CellCounts:
        return self.cells[(n, eps)]

    def counts(self, quantity: str) -> dict:
        out = {}
        for key, cell in self.cells.items():
            res = cell.get(quantity)
            if res is not None:
                out[key] = res.cardinality
        return out

    def all_exact(self) -> bool:
        for cell in self.cells.values():
            for q in QUANTITIES:
                res = cell.get(q)
                if res is not None and not res.optimal:
                    return False
        return True

    def to_rows(self) -> list:
        """Flat rows for CSV: n, epsilon, variant, quantity, cardinality, method, optimal."""
        variant_of = {"r1": "two_sided", "s1": "two_sided",
                      "r2": "one_sided", "s2": "one_sided"}
        rows = []
        for n in self.n_list:
            for eps in self.eps_list:
                cell = self.cells[(n, eps)]
                for q in QUANTITIES:
                    res = cell.get(q)
                    if res is None:
                        continue
                    rows.append({
                        "n": n,
                        "epsilon": eps,
                        "variant": variant_of[q],
                        "quantity": q,
                        "cardinality": res.cardinality,
                        "method": res.method,
                        "optimal": res.optimal,
                    })
        return rows

    def to_dict(self) -> dict:
        cells = []
        for n in self.n_list:
            for eps in self.eps_list:
                cell = self.cells[(n, eps)]
                entry = {"n": n, "epsilon": eps}
                for q in QUANTITIES:
                    res = cell.get(q)
                    if res is not None:
                        entry[q] = {
                            "cardinality": res.cardinality,
                            "witness": list(res.witness),
                            "method": res.method,
                            "optimal": res.optimal,
                            "nodes": res.nodes,
                        }
                cells.append(entry)
        return {
            "cloud_size": self.cloud_size,
            "n_list": list(self.n_list),
            "eps_list": list(self.eps_list),
            "variants": list(self.variants),
            "cells": cells,
            "diagnostics": list(self.diagnostics),
        }


def _solve_cover(cover: np.ndarray, mode: str, exact_threshold: int) -> CoverResult:
    if _resolve_mode(mode, cover.shape[0], exact_threshold) == "exact":
        ids, nodes = exact_cover(cover)
        return CoverResult(len(ids), tuple(ids), "exact_bnb", True, nodes)
    ids = greedy_cover(cover)
    return CoverResult(len(ids), tuple(sorted(ids)), "greedy", False, 0)


def _solve_separated(cover: np.ndarray, mode: str, exact_threshold: int) -> SeparatedResult:
    if _resolve_mode(mode, cover.shape[0], exact_threshold) == "exact":
        ids, nodes = exact_separated(cover)
        return SeparatedResult(len(ids), tuple(ids), "exact_bnb", True, nodes)
    ids = greedy_separated(cover)
    return SeparatedResult(len(ids), tuple(ids), "greedy", False, 0)


def _solve_cell_quantities(cover: np.ndarray, mode: str, exact_threshold: int):
    return (_solve_cover(cover, mode, exact_threshold),
            _solve_separated(cover, mode, exact_threshold))


def count_grid(spec: QuasiMetricSpec, orbits: OrbitTable, cloud: PointCloud,
               n_list: Sequence, eps_list: Sequence, *,
               mode: str = "auto",
               exact_threshold: int = DEFAULT_EXACT_THRESHOLD,
               variants: tuple = VARIANTS,
               threads: int = 1) -> CountGrid:
    """Solve every requested quantity over the (n, eps) schedule.

    The orbit-maximized distance matrix is grown incrementally across the
    ascending n schedule; each (n, eps) cell is solved independently (cells can
    run on a thread pool) and merged by cell coordinates.
    """
    n_list = [int(n) for n in n_list]
    eps_list = [float(e) for e in eps_list]
    if not n_list or not eps_list:
        raise ValueError("schedules must be nonempty")
    if sorted(n_list) != n_list or len(set(n_list)) != len(n_list):
        raise ValueError("n_list must be strictly increasing")
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be > 0")
    for v in variants:
        if v not in VARIANTS:
            raise ValueError(f"unknown variant {v!r}")
    if n_list[-1] > orbits.n_max:
        raise ValueError(f"n_list exceeds orbit table n_max={orbits.n_max}")

    size = len(cloud)
    cells = {}
    dist = None
    done = 0
    pool = ThreadPoolExecutor(max_workers=threads) if threads and threads > 1 else None
    try:
        for n in n_list:
            for i in range(done, n):
                pts = orbits.iterate_points(i)
                d = pairwise(spec, pts, pts)
                dist = d if dist is None else np.maximum(dist, d, out=dist)
            done = n

            tasks = {}
            for eps in eps_list:
                for variant in variants:
                    cover = _cover_from_distances(dist, eps, variant)
                    if pool is not None:
                        tasks[(eps, variant)] = pool.submit(
                            _solve_cell_quantities, cover, mode, exact_threshold)
                    else:
                        tasks[(eps, variant)] = _solve_cell_quantities(
                            cover, mode, exact_threshold)

            for eps in eps_list:
                parts = {}
                for variant in variants:
                    res = tasks[(eps, variant)]
                    span, sep = res.result() if pool is not None else res
                    if variant == "two_sided":
                        parts["r1"], parts["s1"] = span, sep
                    else:
                        parts["r2"], parts["s2"] = span, sep
                cells[(n, eps)] = CellCounts(n=n, eps=eps, **parts)
    finally:
        if pool is not None:
            pool.shutdown()

    grid = CountGrid(cloud_size=size, n_list=n_list, eps_list=eps_list,
                     variants=tuple(variants), cells=cells)
    grid.diagnostics.extend(_monotonicity_diagnostics(grid))
    return grid


def _monotonicity_diagnostics(grid: CountGrid) -> list:
    """Counts must not increase as eps grows (at fixed n) and must not decrease
    as n grows (at fixed eps). Certain for exact cells; greedy violations are
    reported as informational."""
    notes = []
    eps_desc = sorted(grid.eps_list, reverse=True)
    for q in QUANTITIES:
        vals = grid.counts(q)
        if not vals:
            continue
        for n in grid.n_list:
            for hi, lo in zip(eps_desc, eps_desc[1:]):
                if vals[(n, hi)] > vals[(n, lo)]:
                    notes.append(f"{q} increased with eps at n={n}: "
                                 f"{vals[(n, hi)]} @eps={hi} > {vals[(n, lo)]} @eps={lo}")
        for eps in grid.eps_list:
            seq = [vals[(n, eps)] for n in grid.n_list]
            for a, b, n_a, n_b in zip(seq, seq[1:], grid.n_list, grid.n_list[1:]):
                if a > b:
                    notes.append(f"{q} decreased with n at eps={eps}: "
                                 f"{a} @n={n_a} > {b} @n={n_b}")
    return notes
