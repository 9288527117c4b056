from __future__ import annotations

from itertools import combinations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssc_toolkit.forcing import (
    LOWEST_FORCED,
    LOWEST_FORCER,
    ExplicitForces,
    NotZfsError,
    derived_set,
    enumerate_forcing_schedules,
    forcing_schedule,
    is_zfs,
)
from ssc_toolkit.graphs import DiGraph, is_chain_partition
from ssc_toolkit.synthesis import TimeFunction, is_ct_constructed

from conftest import digraphs
from reference import (
    all_digraphs,
    minimum_forcing_size,
    naive_derived_set,
    naive_is_zfs,
    nonempty_subsets,
)


class TestDerivedSet:
    def test_path_forces_forward(self, path3):
        assert derived_set(path3, {1}) == {1, 2, 3}

    def test_all_black_already(self, path3):
        assert derived_set(path3, {1, 2, 3}) == {1, 2, 3}

    def test_ring_stalls_from_single_control(self, ring6):
        # node 1 sees two white out-neighbors at once, so nothing moves
        assert derived_set(ring6, {1}) == naive_derived_set(ring6, {1}) == {1}

    def test_self_loop_is_ignored(self):
        g = DiGraph(2, frozenset({(1, 1), (1, 2)}))
        assert derived_set(g, {1}) == {1, 2}
        lone = DiGraph(1, frozenset({(1, 1)}))
        assert derived_set(lone, {1}) == {1}

    @given(digraphs(max_n=10), st.data())
    def test_monotone_in_the_start_set(self, g: DiGraph, data):
        s2 = data.draw(st.frozensets(st.sampled_from(range(1, g.n + 1)), min_size=1))
        s1 = data.draw(st.frozensets(st.sampled_from(sorted(s2)), min_size=1))
        assert derived_set(g, s1) <= derived_set(g, s2)

    def test_agrees_with_naive_oracle_exhaustively(self):
        for n in (1, 2, 3):
            for g in all_digraphs(n):
                for z in nonempty_subsets(g.nodes):
                    assert derived_set(g, z) == naive_derived_set(g, z), (g, z)

    @given(digraphs(max_n=5), st.data())
    def test_agrees_with_naive_oracle_sampled(self, g: DiGraph, data):
        z = data.draw(st.frozensets(st.sampled_from(range(1, g.n + 1)), min_size=1))
        assert derived_set(g, z) == naive_derived_set(g, z)
        assert is_zfs(g, z) == naive_is_zfs(g, z)


class TestIsZfs:
    def test_ring_with_two_adjacent_controls(self, ring6):
        assert is_zfs(ring6, {1, 2})

    def test_minimum_control_sizes_on_worked_graphs(self, ring6, path3):
        assert minimum_forcing_size(ring6) == 2
        assert minimum_forcing_size(path3) == 1
        assert minimum_forcing_size(DiGraph(3)) == 3

    def test_sink_cannot_force_backwards(self, path3):
        assert not is_zfs(path3, {3})

    def test_two_chain_block(self, block_ring4):
        g, _ = block_ring4
        assert is_zfs(g, {1, 2})


class TestForcingSchedule:
    def test_path_has_unique_schedule(self, path3):
        rec = forcing_schedule(path3, {1})
        assert rec.times == {1: 1, 2: 2, 3: 3}
        assert [c.nodes for c in rec.chains.chains] == [(1, 2, 3)]
        assert rec.gamma == 3

    def test_ring_explicit_first_variant(self, ring6, ring6_policy):
        rec = forcing_schedule(ring6, {1, 2}, ring6_policy)
        assert rec.times == {1: 1, 2: 1, 6: 2, 3: 3, 4: 4, 5: 5}
        assert sorted(c.nodes for c in rec.chains.chains) == [(1, 6), (2, 3, 4, 5)]
        tf = TimeFunction.from_record(rec)
        assert tf.tmax == {1: 1, 2: 2, 6: 5, 3: 3, 4: 4, 5: 5}

    def test_ring_explicit_second_variant(self, ring6):
        rec = forcing_schedule(ring6, {1, 2}, ExplicitForces(((1, 6), (2, 3), (6, 5), (5, 4))))
        assert rec.times == {1: 1, 2: 1, 6: 2, 3: 3, 5: 4, 4: 5}
        assert sorted(c.nodes for c in rec.chains.chains) == [(1, 6, 5, 4), (2, 3)]

    def test_explicit_rejects_impossible_force(self, ring6):
        with pytest.raises(ValueError, match="not possible"):
            forcing_schedule(ring6, {1, 2}, ExplicitForces(((2, 3),)))

    def test_explicit_rejects_short_list(self, ring6):
        with pytest.raises(ValueError, match="still possible"):
            forcing_schedule(ring6, {1, 2}, ExplicitForces(((1, 6),)))

    def test_stall_reports_white_set(self, path3):
        with pytest.raises(NotZfsError) as err:
            forcing_schedule(path3, {2})
        assert err.value.stalled_white == {1}

    def test_isolated_control_gets_singleton_chain(self):
        g = DiGraph(3, frozenset({(1, 2)}))
        rec = forcing_schedule(g, {1, 3})
        assert sorted(c.nodes for c in rec.chains.chains) == [(1, 2), (3,)]

    @given(digraphs(max_n=8), st.data())
    def test_verdict_is_policy_independent(self, g: DiGraph, data):
        size = data.draw(st.integers(1, min(3, g.n)))
        z = frozenset(data.draw(st.sampled_from(list(combinations(g.nodes, size)))))
        expected = is_zfs(g, z)
        for policy in (LOWEST_FORCER, LOWEST_FORCED):
            try:
                rec = forcing_schedule(g, z, policy)
                succeeded = True
            except NotZfsError:
                succeeded = False
            assert succeeded == expected
            if succeeded:
                assert len(rec.forces) == g.n - len(z)

    @given(digraphs(max_n=8), st.data())
    def test_record_chain_invariants(self, g: DiGraph, data):
        z = frozenset(
            data.draw(st.frozensets(st.sampled_from(range(1, g.n + 1)), min_size=1))
        )
        if not is_zfs(g, z):
            return
        rec = forcing_schedule(g, z)
        assert rec.chains.m == len(z)
        assert rec.chains.sources == z
        assert is_chain_partition(g.add_edges(rec.chains.chain_edges), rec.chains)
        assert rec.chains.nodes == frozenset(g.nodes)
        for c in rec.chains.chains:
            times = [rec.times[v] for v in c.nodes]
            assert times == sorted(times) and len(set(times)) == len(times)
        # every successful record certifies membership in its own family
        assert is_ct_constructed(g, TimeFunction.from_record(rec))


class TestEnumerateSchedules:
    def test_path_single_schedule(self, path3):
        assert len(enumerate_forcing_schedules(path3, {1}, limit=10)) == 1

    def test_edgeless_pair_single_empty_schedule(self):
        g = DiGraph(2)
        records = enumerate_forcing_schedules(g, {1, 2}, limit=10)
        assert len(records) == 1
        assert records[0].forces == ()
        assert sorted(c.nodes for c in records[0].chains.chains) == [(1,), (2,)]

    def test_ring_has_at_least_the_four_variants(self, ring6):
        records = enumerate_forcing_schedules(ring6, {1, 2})
        pairs = {
            (tuple(sorted(c.nodes for c in r.chains.chains)), tuple(sorted(r.times.items())))
            for r in records
        }
        assert len(pairs) >= 4
        chain_shapes = {p[0] for p in pairs}
        assert ((1, 6), (2, 3, 4, 5)) in chain_shapes
        assert ((1, 6, 5, 4), (2, 3)) in chain_shapes
        assert ((1, 6, 5, 4, 3), (2,)) in chain_shapes
        assert ((1, 6, 5), (2, 3, 4)) in chain_shapes

    def test_limit_truncates(self, ring6):
        assert len(enumerate_forcing_schedules(ring6, {1, 2}, limit=3)) == 3

    def test_non_zfs_raises(self, path3):
        with pytest.raises(NotZfsError):
            enumerate_forcing_schedules(path3, {3}, limit=5)

    def test_limit_must_be_positive(self, path3):
        with pytest.raises(ValueError, match="at least 1"):
            enumerate_forcing_schedules(path3, {1}, limit=0)

    @given(digraphs(max_n=6), st.data())
    def test_every_schedule_replays(self, g: DiGraph, data):
        z = frozenset(
            data.draw(st.frozensets(st.sampled_from(range(1, g.n + 1)), min_size=1))
        )
        if not is_zfs(g, z):
            return
        for rec in enumerate_forcing_schedules(g, z, limit=20):
            replay = forcing_schedule(g, z, ExplicitForces(rec.forces))
            assert replay.times == rec.times
