import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditnet import new_network
from creditnet.errors import CycleLimitExceeded, DuplicateEdge, NoSuchDebt, StaleCycle
from creditnet.operations import (
    DebtCycle,
    DebtEdge,
    compress_cycles,
    enumerate_simple_cycles,
    execution_order,
    net_positions,
    remove_debts,
)


def brute_force_cycles(L) -> list[tuple[int, ...]]:
    """Every vertex sequence that closes into a simple cycle, starting at its smallest vertex."""
    n = len(L)
    out = []
    for k in range(2, n + 1):
        for seq in itertools.permutations(range(n), k):
            if seq[0] != min(seq):
                continue
            if all(L[seq[i]][seq[(i + 1) % k]] > 0 for i in range(k)):
                out.append(seq)
    return sorted(out, key=lambda c: (-len(c), c))


def dyadic_network(rng, n, p=0.5):
    """Amounts on a 1/1024 grid so that sums and differences are exact in binary floating point."""
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    L = np.where(mask, rng.integers(1, 40 * 1024, (n, n)) / 1024, 0.0)
    return new_network([str(i) for i in range(n)], L, rng.integers(0, 50, n).astype(float))


def exact_net_positions(network):
    L = [[Fraction(x) for x in row] for row in network.liabilities.tolist()]
    n = len(L)
    return [sum(L[i]) - sum(L[j][i] for j in range(n)) for i in range(n)]


def complete(n, value=1.0):
    return new_network([str(i) for i in range(n)], value * (np.ones((n, n)) - np.eye(n)), np.zeros(n))


class TestEnumerate:
    def test_acyclic(self, chain3):
        assert enumerate_simple_cycles(chain3) == []

    def test_two_cycle(self, mutual_default):
        assert enumerate_simple_cycles(mutual_default) == [DebtCycle((0, 1), 6.0)]

    def test_complete_three(self):
        cycles = enumerate_simple_cycles(complete(3))
        assert [c.firms for c in cycles] == [(0, 1, 2), (0, 2, 1), (0, 1), (0, 2), (1, 2)]

    def test_max_len(self):
        assert all(len(c) == 2 for c in enumerate_simple_cycles(complete(4), max_len=2))

    def test_max_count(self):
        with pytest.raises(CycleLimitExceeded):
            enumerate_simple_cycles(complete(5), max_count=10)

    def test_min_liability(self):
        net = new_network(list("abc"), [[0, 5, 0], [0, 0, 2], [7, 0, 0]], [0, 0, 0])
        (c,) = enumerate_simple_cycles(net)
        assert c.firms == (0, 1, 2) and c.min_liability == 2

    @pytest.mark.parametrize("seed", range(150))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        net = dyadic_network(rng, int(rng.integers(2, 7)), p=float(rng.uniform(0.2, 0.8)))
        assert [c.firms for c in enumerate_simple_cycles(net)] == brute_force_cycles(net.liabilities.tolist())

    def test_canonical_rotation(self):
        assert DebtCycle.from_firms([3, 1, 2]).firms == (1, 2, 3)
        with pytest.raises(ValueError):
            DebtCycle.from_firms([1, 1])


class TestCompress:
    def test_two_cycle(self, mutual_default):
        after, report = compress_cycles(mutual_default, enumerate_simple_cycles(mutual_default))
        assert after.liabilities.tolist() == [[0, 4], [0, 0]]
        assert report[0].applied and report[0].amount == 6

    def test_three_cycle(self):
        net = new_network(list("abc"), [[0, 5, 0], [0, 0, 2], [7, 0, 0]], [1, 1, 1])
        after, report = compress_cycles(net, enumerate_simple_cycles(net))
        assert after.liabilities.tolist() == [[0, 3, 0], [0, 0, 0], [5, 0, 0]]
        assert report[0].amount == 2
        np.testing.assert_array_equal(after.external_assets, net.external_assets)

    def test_overlap_skips_second(self):
        # cycles (0,1,2) and (0,1) share their minimum edge 0->1
        net = new_network(list("abc"), [[0, 1, 0], [5, 0, 5], [5, 0, 0]], [0, 0, 0])
        cycles = enumerate_simple_cycles(net)
        after, report = compress_cycles(net, cycles)
        assert [(s.cycle.firms, s.applied) for s in report] == [((0, 1, 2), True), ((0, 1), False)]
        assert after.liabilities[0, 1] == 0

    def test_mu_recomputed_on_current_matrix(self):
        net = new_network(list("abc"), [[0, 4, 0], [3, 0, 2], [6, 0, 0]], [0, 0, 0])
        after, report = compress_cycles(net, enumerate_simple_cycles(net))
        assert [s.amount for s in report] == [2.0, 2.0]
        assert after.liabilities[0, 1] == 0

    def test_stale_cycle(self, chain3):
        with pytest.raises(StaleCycle):
            compress_cycles(chain3, [DebtCycle((0, 1))])

    def test_seeded_tie_order_is_restriction(self):
        cycles = enumerate_simple_cycles(complete(5))
        full = execution_order(cycles, seed=11)
        subset = cycles[::3]
        order = execution_order(subset, seed=11)
        assert order == [c for c in full if c in subset]
        assert [len(c) for c in full] == sorted((len(c) for c in full), reverse=True)

    def test_seed_changes_tie_order(self):
        cycles = enumerate_simple_cycles(complete(4))
        orders = {tuple(c.firms for c in execution_order(cycles, s)) for s in range(10)}
        assert len(orders) > 1

    @pytest.mark.parametrize("seed", range(60))
    def test_invariants_exact(self, seed):
        rng = np.random.default_rng(1000 + seed)
        cycles = []
        while not cycles:
            net = dyadic_network(rng, int(rng.integers(3, 8)), p=0.5)
            cycles = enumerate_simple_cycles(net, max_count=5000)
        final, report = compress_cycles(net, cycles, seed)
        current = net
        for step_cycle, step in zip(execution_order(cycles, seed), report):
            intact = all(current.liabilities[a, b] > 0 for a, b in step_cycle.edges())
            assert step.applied == intact
            if not intact:
                continue
            after, _ = compress_cycles(current, [step_cycle], seed)
            assert exact_net_positions(after) == exact_net_positions(current)
            assert any(after.liabilities[a, b] == 0 for a, b in step_cycle.edges())
            assert np.all(after.liabilities <= current.liabilities)
            assert np.all((after.liabilities > 0) <= (current.liabilities > 0))
            current = after
        assert current == final

    def test_net_positions_helper(self, mutual_default):
        np.testing.assert_array_equal(net_positions(mutual_default), [4, -4])


class TestRemove:
    def test_chain3(self, chain3):
        after = remove_debts(chain3, [DebtEdge(0, 1)])
        assert after.liabilities.tolist() == [[0, 0, 0], [0, 0, 5], [0, 0, 0]]
        np.testing.assert_array_equal(after.external_assets, chain3.external_assets)

    def test_empty(self, chain3):
        assert remove_debts(chain3, []) == chain3

    def test_both_edges(self, mutual_default):
        assert not remove_debts(mutual_default, [DebtEdge(0, 1), DebtEdge(1, 0)]).liabilities.any()

    def test_errors(self, chain3):
        with pytest.raises(NoSuchDebt):
            remove_debts(chain3, [DebtEdge(0, 2)])
        with pytest.raises(DuplicateEdge):
            remove_debts(chain3, [DebtEdge(0, 1), DebtEdge(0, 1)])
        with pytest.raises(ValueError):
            DebtEdge(1, 1)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.data())
    def test_commutative_and_order_free(self, seed, data):
        net = dyadic_network(np.random.default_rng(seed), 5, p=0.6)
        edges = [DebtEdge(*e) for e in net.edges()]
        if len(edges) < 2:
            return
        chosen = data.draw(st.lists(st.sampled_from(edges), unique=True, min_size=2))
        half = len(chosen) // 2
        a, b = chosen[:half], chosen[half:]
        both = remove_debts(net, chosen)
        assert remove_debts(remove_debts(net, a), b) == both == remove_debts(remove_debts(net, b), a)
        assert remove_debts(net, chosen[::-1]) == both
