"""The color-change rule, derived sets, and forcing schedules.

A black node with exactly one white out-neighbor forces that neighbor
black.  A control set whose repeated forcing blackens the whole graph
certifies strong structural controllability of the network, so the
functions here are the combinatorial SSC test.

Self-loops never participate: a node is not its own out-neighbor for
forcing purposes, which keeps every verdict invariant under adding or
removing self-loops.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .graphs import Chain, ChainSet, DiGraph, Edge, control_set

LOWEST_FORCER = "lowest-forcer"
LOWEST_FORCED = "lowest-forced"


@dataclass(frozen=True)
class ExplicitForces:
    """Replay policy: perform exactly this chronological list of forces."""

    forces: tuple[Edge, ...]

    def __post_init__(self):
        object.__setattr__(self, "forces", tuple((int(u), int(v)) for u, v in self.forces))


TieBreakPolicy = Union[str, ExplicitForces]


class NotZfsError(ValueError):
    """The forcing process stalled before every node turned black."""

    def __init__(self, message: str, stalled_white: frozenset[int] = frozenset()):
        super().__init__(message)
        self.stalled_white = stalled_white


def _closure(masks, black: int, full: int) -> int:
    """Bitmask fixed point of the color-change rule.

    ``masks[u]`` holds u's out-neighbors with self-loops dropped.  The
    derived set does not depend on the order forces are applied, so a
    greedy sweep is sound.
    """
    changed = True
    while changed and black != full:
        changed = False
        scan = black
        while scan:
            low = scan & -scan
            scan ^= low
            w = masks[low.bit_length()] & ~black
            if w and not w & (w - 1):  # exactly one white out-neighbor
                black |= w
                changed = True
    return black


def _mask_of(nodes: Iterable[int]) -> int:
    m = 0
    for v in nodes:
        m |= 1 << (v - 1)
    return m


def _nodes_of(mask: int) -> frozenset[int]:
    out = []
    while mask:
        low = mask & -mask
        mask ^= low
        out.append(low.bit_length())
    return frozenset(out)


def derived_set(g: DiGraph, controls: Iterable[int]) -> frozenset[int]:
    """The final black set reached from ``controls`` under repeated forcing."""
    z = control_set(controls, g.n)
    return _nodes_of(_closure(g.force_masks, _mask_of(z), g.full_mask))


def is_zfs(g: DiGraph, controls: Iterable[int]) -> bool:
    """True iff ``controls`` force the whole graph black.

    This is the strong-structural-controllability verdict for the LTI
    network on ``g`` with inputs at ``controls``.
    """
    z = control_set(controls, g.n)
    return _closure(g.force_masks, _mask_of(z), g.full_mask) == g.full_mask


@dataclass(frozen=True)
class ForcingRecord:
    """One complete run of the one-force-per-step schedule.

    ``times`` maps each node to the step at which it turned black
    (controls at step 1, force ``k`` colors its target at step ``k+1``).
    ``chains`` are the maximal forcing chains: node-disjoint paths, one
    per control node, jointly covering the graph.  Controls that never
    force yield one-node chains.
    """

    forces: tuple[Edge, ...]
    times: dict[int, int]
    chains: ChainSet
    gamma: int

    @property
    def controls(self) -> frozenset[int]:
        return self.chains.sources


class _Frontier:
    """White-out-neighbor sets maintained incrementally across forces.

    Each force updates only the forced node's in-neighbors, so a whole
    run costs O(n^2) instead of rescanning the adjacency every step.
    Self-loops are dropped up front.
    """

    def __init__(self, g: DiGraph, black: Iterable[int]):
        self.black: set[int] = set(black)
        self.white_out: dict[int, set[int]] = {v: set() for v in g.nodes}
        self._in: dict[int, list[int]] = {v: [] for v in g.nodes}
        for u, v in g.edges:
            if u != v:
                self._in[v].append(u)
                if v not in self.black:
                    self.white_out[u].add(v)

    def applicable(self) -> list[Edge]:
        """All currently possible forces, sorted by (forcer, forced)."""
        out = []
        for w in sorted(self.black):
            targets = self.white_out[w]
            if len(targets) == 1:
                out.append((w, next(iter(targets))))
        return out

    def is_applicable(self, force: Edge) -> bool:
        w, u = force
        return w in self.black and self.white_out[w] == {u}

    def apply(self, force: Edge) -> None:
        u = force[1]
        self.black.add(u)
        for p in self._in[u]:
            self.white_out[p].discard(u)

    def undo(self, force: Edge) -> None:
        u = force[1]
        self.black.discard(u)
        for p in self._in[u]:
            self.white_out[p].add(u)


def _build_record(g: DiGraph, z: frozenset[int], forces: list[Edge]) -> ForcingRecord:
    times = {v: 1 for v in z}
    successor: dict[int, int] = {}
    for k, (w, u) in enumerate(forces):
        times[u] = k + 2
        successor[w] = u
    chains = []
    for s in sorted(z):
        nodes = [s]
        while nodes[-1] in successor:
            nodes.append(successor[nodes[-1]])
        chains.append(Chain(tuple(nodes)))
    return ForcingRecord(
        forces=tuple(forces),
        times=times,
        chains=ChainSet(tuple(chains)),
        gamma=g.n - len(z) + 1,
    )


def forcing_schedule(
    g: DiGraph, controls: Iterable[int], policy: TieBreakPolicy = LOWEST_FORCER
) -> ForcingRecord:
    """Run the one-force-per-step schedule under ``policy``.

    Built-in policies pick, among the currently possible forces, the one
    with the lowest forcer id (ties on the forced id) or the lowest
    forced id (ties on the forcer id).  An :class:`ExplicitForces` policy
    replays its list verbatim and fails loudly if any entry is not
    possible at its turn or if forces remain possible afterwards.

    Raises:
        NotZfsError: the process stalls with white nodes remaining.
        ValueError: an explicit force list is invalid.
    """
    z = control_set(controls, g.n)
    state = _Frontier(g, z)
    forces: list[Edge] = []

    if isinstance(policy, ExplicitForces):
        for step, force in enumerate(policy.forces):
            if not state.is_applicable(force):
                raise ValueError(f"force {force} is not possible at step {step + 1}")
            state.apply(force)
            forces.append(force)
        if state.applicable():
            raise ValueError("explicit force list ends while forces are still possible")
    elif policy in (LOWEST_FORCER, LOWEST_FORCED):
        while True:
            apps = state.applicable()
            if not apps:
                break
            if policy == LOWEST_FORCED:
                choice = min(apps, key=lambda e: (e[1], e[0]))
            else:
                choice = apps[0]  # sorted by (forcer, forced) already
            state.apply(choice)
            forces.append(choice)
    else:
        raise ValueError(f"unknown tie-break policy {policy!r}")

    if len(state.black) < g.n:
        stalled = frozenset(v for v in g.nodes if v not in state.black)
        raise NotZfsError(
            f"forcing stalled with white nodes {sorted(stalled)}", stalled_white=stalled
        )
    return _build_record(g, z, forces)


def enumerate_forcing_schedules(
    g: DiGraph, controls: Iterable[int], limit: int | None = None
) -> list[ForcingRecord]:
    """Depth-first enumeration of every distinct chronological force list.

    Distinct lists may induce identical chains and times; callers filter
    when they care about (chains, times) pairs only.  With ``limit`` the
    search stops after that many records.

    Raises:
        NotZfsError: ``controls`` is not a zero forcing set.
    """
    if limit is not None and limit < 1:
        raise ValueError("limit must be at least 1")
    z = control_set(controls, g.n)
    if not is_zfs(g, z):
        stalled = frozenset(g.nodes) - derived_set(g, z)
        raise NotZfsError(
            f"controls {sorted(z)} are not a zero forcing set", stalled_white=stalled
        )

    records: list[ForcingRecord] = []
    state = _Frontier(g, z)
    forces: list[Edge] = []

    # Once the controls force everything, no branch can stall: every
    # maximal force list ends with the whole graph black.
    def dfs() -> bool:
        apps = state.applicable()
        if not apps:
            records.append(_build_record(g, z, forces))
            return limit is not None and len(records) >= limit
        for force in apps:
            state.apply(force)
            forces.append(force)
            done = dfs()
            forces.pop()
            state.undo(force)
            if done:
                return True
        return False

    dfs()
    return records
