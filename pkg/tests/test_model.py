import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditnet import new_network
from creditnet.clearing import clear
from creditnet.errors import (
    DimensionMismatch,
    DuplicateLabel,
    InvariantViolation,
    NegativeAmount,
    NonSquareMatrix,
    NonzeroDiagonal,
    ParseError,
    PaymentExceedsLiability,
    SchemaError,
)
from creditnet.model import (
    dumps_network,
    firm_metrics,
    load_network_file,
    loads_network,
    normalize_name,
    save_network_file,
    total_assets,
    weakly_connected_components,
)

from helpers import DATA


class TestNewNetwork:
    def test_chain3_is_valid(self, chain3):
        assert chain3.labels == ("i", "j", "k")
        assert chain3.n == 3
        np.testing.assert_array_equal(chain3.total_liabilities, [5, 5, 0])

    @pytest.mark.parametrize(
        "labels, L, e, error",
        [
            (["a"], [[1]], [0], NonzeroDiagonal),
            (["a", "b"], [[0, 1], [1, 0]], [-1, 0], NegativeAmount),
            (["a", "b"], [[0, -1], [1, 0]], [0, 0], NegativeAmount),
            (["a", "b"], [[0, 1, 0], [1, 0, 0]], [0, 0], NonSquareMatrix),
            (["a", "b", "c"], [[0, 1], [1, 0]], [0, 0], DimensionMismatch),
            (["a", "b"], [[0, 1], [1, 0]], [0, 0, 0], DimensionMismatch),
            (["Firm A", "firm  a"], [[0, 1], [1, 0]], [0, 0], DuplicateLabel),
            (["a", "b"], [[0, np.nan], [1, 0]], [0, 0], NegativeAmount),
        ],
    )
    def test_rejects(self, labels, L, e, error):
        with pytest.raises(error):
            new_network(labels, L, e)

    def test_errors_are_invariant_violations(self):
        with pytest.raises(InvariantViolation):
            new_network(["a"], [[2]], [0])

    def test_immutable(self, chain3):
        with pytest.raises(ValueError):
            chain3.liabilities[0, 1] = 3
        with pytest.raises(AttributeError):
            chain3.labels = ("x",)

    def test_input_array_is_copied(self):
        L = np.array([[0.0, 1.0], [0.0, 0.0]])
        net = new_network(["a", "b"], L, [1, 1])
        L[0, 1] = 9
        assert net.liabilities[0, 1] == 1

    def test_equality(self, chain3):
        same = new_network(["i", "j", "k"], [[0, 5, 0], [0, 0, 5], [0, 0, 0]], [6, 2, 3])
        assert same == chain3
        assert same != chain3.with_liabilities(np.zeros((3, 3)))

    def test_index_of_normalizes(self):
        net = new_network(["Firm  A", "Firm B"], [[0, 1], [0, 0]], [0, 0])
        assert net.index_of(" firm a ") == 0


def test_normalize_name():
    assert normalize_name("  Deutsche   Bank ") == "deutsche bank"


class TestFirmMetrics:
    def test_chain3_full_payment(self, chain3):
        m = firm_metrics(chain3, chain3.liabilities)
        assert [x.total_assets for x in m] == [6, 7, 8]
        assert all(x.solvent for x in m)
        assert [x.equity for x in m] == [1, 2, 8]
        assert total_assets(chain3, chain3.liabilities) == 21

    def test_zero_payments(self, chain3):
        m = firm_metrics(chain3, np.zeros((3, 3)))
        assert [x.total_assets for x in m] == [6, 2, 3]

    def test_single_default(self, single_default):
        m = firm_metrics(single_default, [[0, 2], [0, 0]])
        assert not m[0].solvent and m[0].equity == 0 and m[0].total_assets == 4
        assert m[1].total_assets == 2

    def test_dimension_mismatch(self, chain3):
        with pytest.raises(DimensionMismatch):
            firm_metrics(chain3, np.zeros((2, 2)))

    def test_payment_exceeds_liability(self, chain3):
        P = np.array(chain3.liabilities)
        P[0, 1] = 6
        with pytest.raises(PaymentExceedsLiability):
            firm_metrics(chain3, P)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8))
    def test_total_assets_identity(self, seed, n):
        # with dyadic amounts both sides of the identity are exact
        rng = np.random.default_rng(seed)
        L = np.where(rng.random((n, n)) < 0.5, rng.integers(1, 64, (n, n)) / 8, 0.0)
        np.fill_diagonal(L, 0)
        e = rng.integers(0, 64, n) / 8
        net = new_network([str(i) for i in range(n)], L, e)
        P = L * rng.integers(0, 5, (n, n)) / 4
        m = firm_metrics(net, P)
        assert sum(x.total_assets for x in m) == e.sum() + P.sum()
        for x in m:
            if x.solvent:
                assert x.equity == pytest.approx(x.total_assets - x.total_liability) or x.equity == 0
            else:
                assert x.equity == 0


class TestComponents:
    def test_chain3_connected(self, chain3):
        comps = weakly_connected_components(chain3)
        assert len(comps) == 1 and comps[0].n == 3

    def test_two_blocks(self):
        L = np.zeros((4, 4))
        L[0, 1] = 3
        L[2, 3] = 4
        net = new_network(list("abcd"), L, [1, 2, 3, 4])
        comps = weakly_connected_components(net)
        assert [c.labels for c in comps] == [("a", "b"), ("c", "d")]
        np.testing.assert_array_equal(comps[1].external_assets, [3, 4])

    def test_singletons(self):
        comps = weakly_connected_components(new_network(list("abc"), np.zeros((3, 3)), [1, 2, 3]))
        assert [c.n for c in comps] == [1, 1, 1]

    def test_clearing_decomposes(self):
        rng = np.random.default_rng(5)
        L = np.zeros((6, 6))
        L[:3, :3] = rng.uniform(5, 20, (3, 3))
        L[3:, 3:] = rng.uniform(5, 20, (3, 3))
        np.fill_diagonal(L, 0)
        net = new_network([f"f{i}" for i in range(6)], L, rng.uniform(0, 10, 6))
        whole = clear(net).payments
        for comp, idx in zip(weakly_connected_components(net), ([0, 1, 2], [3, 4, 5])):
            np.testing.assert_allclose(clear(comp).payments, whole[np.ix_(idx, idx)], atol=1e-9)
        assert np.all(whole[:3, 3:] == 0)


class TestNetworkFile:
    def test_chain3_fixture_is_pinned(self, chain3, tmp_path):
        save_network_file(chain3, tmp_path / "f.json")
        assert (tmp_path / "f.json").read_bytes() == (DATA / "chain3.json").read_bytes()

    def test_round_trip_full_precision(self, tmp_path):
        rng = np.random.default_rng(1)
        L = rng.uniform(0, 1, (4, 4))
        np.fill_diagonal(L, 0)
        net = new_network(list("wxyz"), L, rng.uniform(0, 1, 4))
        save_network_file(net, tmp_path / "a.json")
        back = load_network_file(tmp_path / "a.json")
        assert back == net
        save_network_file(back, tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_23_firm_file(self, tmp_path):
        n = 23
        L = np.ones((n, n)) - np.eye(n)
        doc = {"labels": [f"Bank {i}" for i in range(n)], "external_assets": [1.0] * n, "liabilities": L.tolist()}
        (tmp_path / "banks.json").write_text(json.dumps(doc))
        assert load_network_file(tmp_path / "banks.json").n == 23

    @pytest.mark.parametrize(
        "doc, error",
        [
            ('{"labels": ["a"], "external_assets": [1], "liabilities": [[0]], "extra": 1}', SchemaError),
            ('{"labels": ["a"], "external_assets": [1]}', SchemaError),
            ('{"labels": ["a"], "external_assets": ["1"], "liabilities": [[0]]}', SchemaError),
            ('{"labels": ["a", "b"], "external_assets": [1, 1], "liabilities": [[0, -2], [0, 0]]}', InvariantViolation),
            ("{not json", ParseError),
            ("[1, 2]", SchemaError),
        ],
    )
    def test_bad_documents(self, doc, error):
        with pytest.raises(error):
            loads_network(doc)

    def test_canonical_text(self, chain3):
        assert dumps_network(chain3) == (DATA / "chain3.json").read_text()
