"""Critical edge-sets: how far a controlled network can be perturbed.

The *critical additive set* of a network with a given zero forcing set is
a maximum-cardinality edge set any subset of which can be added while the
controls keep forcing everything; the *critical subtractive set* is the
removal-side mirror.  The sets depend on the forcing schedule chosen, the
numbers do not: additions top out at the maximal-member edge count minus
the current one, removals at everything except one chain skeleton.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .forcing import LOWEST_FORCER, TieBreakPolicy, _closure, _mask_of, forcing_schedule
from .graphs import ConsistencyError, DiGraph, Edge, control_set
from .runtime import worker_count
from .synthesis import TimeFunction, perfect_edge_count, perfect_graph

ADDITIVE = "additive"
SUBTRACTIVE = "subtractive"
INTER_NETWORK = "inter-network"

DEFAULT_BUDGET = 2**20
SAMPLED_SUBSETS = 10_000


@dataclass(frozen=True)
class EdgeSetReport:
    """A computed critical (or inter-network) edge set with its bound.

    ``bound`` is the closed-form cardinality the set must attain; the
    producers in this module always emit ``len(edges) == bound`` and the
    witness (chains, times) that generated the set, so results are
    reproducible.
    """

    kind: str
    edges: frozenset[Edge]
    bound: int
    witness: TimeFunction | None = None

    def __post_init__(self):
        if self.kind not in (ADDITIVE, SUBTRACTIVE, INTER_NETWORK):
            raise ValueError(f"unknown report kind {self.kind!r}")
        object.__setattr__(self, "edges", frozenset((int(u), int(v)) for u, v in self.edges))
        if len(self.edges) != self.bound:
            raise ValueError(
                f"report carries {len(self.edges)} edges but claims a bound of {self.bound}"
            )

    @property
    def cardinality(self) -> int:
        return len(self.edges)


def critical_additive_number(g: DiGraph, controls: Iterable[int]) -> int:
    """Maximum number of edges whose every subset can be added safely."""
    z = control_set(controls, g.n)
    forcing_schedule(g, z)  # raises NotZfsError when the precondition fails
    return perfect_edge_count(g.n, len(z)) - g.edge_count


def critical_subtractive_number(g: DiGraph, controls: Iterable[int]) -> int:
    """Maximum number of edges whose every subset can be removed safely."""
    z = control_set(controls, g.n)
    forcing_schedule(g, z)
    return g.edge_count - g.n + len(z)


def critical_additive_set(
    g: DiGraph, controls: Iterable[int], policy: TieBreakPolicy = LOWEST_FORCER
) -> EdgeSetReport:
    """A critical additive edge-set: the maximal member's edges not in ``g``.

    Different tie-break policies may return different, equally sized sets.
    """
    z = control_set(controls, g.n)
    record = forcing_schedule(g, z, policy)
    tf = TimeFunction.from_record(record)
    perf = perfect_graph(tf)
    if not g.edges <= perf.edges:
        raise ConsistencyError("graph is not contained in its own maximal member")
    edges = perf.edges - g.edges
    bound = perfect_edge_count(g.n, len(z)) - g.edge_count
    if len(edges) != bound:
        raise ConsistencyError(f"additive set has {len(edges)} edges, bound is {bound}")
    return EdgeSetReport(ADDITIVE, edges, bound, witness=tf)


def critical_subtractive_set(
    g: DiGraph, controls: Iterable[int], policy: TieBreakPolicy = LOWEST_FORCER
) -> EdgeSetReport:
    """A critical subtractive edge-set: everything outside one chain skeleton."""
    z = control_set(controls, g.n)
    record = forcing_schedule(g, z, policy)
    tf = TimeFunction.from_record(record)
    edges = g.edges - record.chains.chain_edges
    bound = g.edge_count - g.n + len(z)
    if len(edges) != bound:
        raise ConsistencyError(f"subtractive set has {len(edges)} edges, bound is {bound}")
    return EdgeSetReport(SUBTRACTIVE, edges, bound, witness=tf)


@dataclass(frozen=True)
class VerificationOutcome:
    """Result of replaying perturbation subsets against the forcing test."""

    passed: bool
    exhaustive: bool
    subsets_tested: int
    counterexample: frozenset[Edge] | None = None


def _gray_masks(g: DiGraph, edges: list[Edge], subset_index: int) -> list[int]:
    """Forcing masks of ``g`` with the gray-coded ``subset_index`` applied."""
    masks = list(g.force_masks)
    gray = subset_index ^ (subset_index >> 1)
    for pos in range(len(edges)):
        if gray >> pos & 1:
            u, v = edges[pos]
            if u != v:
                masks[u] ^= 1 << (v - 1)
    return masks


def _subset_from_index(edges: list[Edge], subset_index: int) -> frozenset[Edge]:
    gray = subset_index ^ (subset_index >> 1)
    return frozenset(e for pos, e in enumerate(edges) if gray >> pos & 1)


def _scan_range(
    g: DiGraph, z_mask: int, edges: list[Edge], start: int, stop: int
) -> tuple[int, int | None]:
    """Exhaustively test subset indices ``[start, stop)`` in gray order.

    Toggling one edge per step keeps the per-subset cost at a single
    forcing closure.  Returns (subsets tested, first failing index).
    """
    full = g.full_mask
    masks = _gray_masks(g, edges, start)
    tested = 0
    for i in range(start, stop):
        if i > start:
            flip = ((i - 1) ^ i) & i  # bit that gray(i) toggles vs gray(i-1)
            u, v = edges[flip.bit_length() - 1]
            if u != v:
                masks[u] ^= 1 << (v - 1)
        tested += 1
        if _closure(masks, z_mask, full) != full:
            return tested, i
    return tested, None


def verify_edge_set(
    g: DiGraph,
    controls: Iterable[int],
    report: EdgeSetReport,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    threads: int | None = None,
) -> VerificationOutcome:
    """Check that applying any subset of ``report.edges`` keeps the controls
    a zero forcing set.

    Additive and inter-network subsets are added to ``g``, subtractive
    subsets removed.  Exhaustive when ``2**len(edges) <= budget``;
    otherwise the singletons, the full set, and 10,000 seeded random
    subsets are tested.  Self-loop toggles never affect forcing, so they
    are counted but cost nothing.
    """
    z = control_set(controls, g.n)
    z_mask = _mask_of(z)
    edges = sorted(report.edges)
    if report.kind in (ADDITIVE, INTER_NETWORK):
        present = report.edges & g.edges
        if present:
            raise ValueError(f"additive edges {sorted(present)} are already in the graph")
        base = g
    elif report.kind == SUBTRACTIVE:
        missing = report.edges - g.edges
        if missing:
            raise ValueError(f"subtractive edges {sorted(missing)} are not in the graph")
        base = g
    else:  # pragma: no cover - kinds are closed
        raise ValueError(report.kind)
    # XOR-toggling covers both directions: additive subsets turn bits on,
    # subtractive subsets turn them off, starting from the same base graph.
    k = len(edges)
    if k == 0:
        ok = _closure(list(base.force_masks), z_mask, base.full_mask) == base.full_mask
        return VerificationOutcome(ok, True, 1, None if ok else frozenset())

    if 2**k <= budget:
        total = 2**k
        workers = worker_count(threads)
        fail_index: int | None = None
        tested = 0
        if workers <= 1:
            tested, fail_index = _scan_range(base, z_mask, edges, 0, total)
        else:
            chunk = -(-total // workers)
            ranges = [(a, min(a + chunk, total)) for a in range(0, total, chunk)]
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(
                    pool.map(lambda r: _scan_range(base, z_mask, edges, *r), ranges)
                )
            tested = sum(t for t, _ in results)
            fails = [f for _, f in results if f is not None]
            fail_index = min(fails) if fails else None
        if fail_index is None:
            return VerificationOutcome(True, True, tested)
        return VerificationOutcome(False, True, tested, _subset_from_index(edges, fail_index))

    rng = np.random.default_rng(seed)
    picks: list[frozenset[Edge]] = [frozenset([e]) for e in edges]
    picks.append(frozenset(edges))
    for _ in range(SAMPLED_SUBSETS):
        keep = rng.random(k) < 0.5
        picks.append(frozenset(e for e, kp in zip(edges, keep) if kp))
    full = base.full_mask
    for tested, subset in enumerate(picks, start=1):
        masks = list(base.force_masks)
        for u, v in subset:
            if u != v:
                masks[u] ^= 1 << (v - 1)
        if _closure(masks, z_mask, full) != full:
            return VerificationOutcome(False, False, tested, subset)
    return VerificationOutcome(True, False, len(picks))
