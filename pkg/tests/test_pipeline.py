import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditnet import new_network
from creditnet.errors import InvariantViolation, MalformedPlan, MalformedRecord, NegativeAmount, SelfLoop, UnknownTemplate
from creditnet.generators import TopologySpec, generate
from creditnet.model import weakly_connected_components
from creditnet.pipeline.aggregate import (
    AggregationState,
    aggregate_statements,
    aggregate_texts,
    integrate_record,
    same_networks,
)
from creditnet.pipeline.prompts import (
    STATEMENT_SLOT,
    build_execution_prompt,
    build_translation_prompt,
    parse_plan_reply,
)
from creditnet.pipeline.records import (
    ExtractionRecord,
    inject_conflict,
    parse_extraction_record,
    records_from_network,
    render_extraction_record,
)
from creditnet.pipeline.templates import TEMPLATES, read_statement, render_statement

from helpers import FIRM_A_RECORD, FIRM_A_STATEMENT

def rec(firm, assets, *triples):
    return ExtractionRecord(firm, assets, tuple(triples))


class TestRecords:
    def test_firm_a(self):
        r = parse_extraction_record(FIRM_A_RECORD)
        assert r.firm == "Firm A" and r.external_assets == 13
        assert r.liabilities == (
            ("Firm A", "Firm B", 5),
            ("Firm A", "Firm C", 4),
            ("Firm A", "Firm D", 2),
            ("Firm E", "Firm A", 3),
            ("Firm F", "Firm A", 1),
        )

    def test_empty_liabilities(self):
        r = parse_extraction_record('firm = "Solo"\nexternal_assets = 4.5\nliabilities = []')
        assert r.liabilities == () and render_extraction_record(r).endswith("liabilities = []\n")

    def test_whitespace_insensitive(self):
        r = parse_extraction_record('  firm="X Y"\n  external_assets   =  1.25\n  liabilities=[ ( "X Y" , "Z" , 2 ) ]')
        assert r == rec("X Y", 1.25, ("X Y", "Z", 2))

    def test_last_fenced_block_wins(self):
        text = "draft:\n```\nfirm = \"Old\"\nexternal_assets = 1\nliabilities = []\n```\nfinal:\n```python\nfirm = \"New\"\nexternal_assets = 2\nliabilities = []\n```"
        assert parse_extraction_record(text).firm == "New"

    @pytest.mark.parametrize(
        "text, error",
        [
            ('firm = "A"\nexternal_assets = 1\nliabilities = [("A", "A", 2)]', SelfLoop),
            ('firm = "A"\nexternal_assets = 1\nliabilities = [("A", "B", -2)]', NegativeAmount),
            ('firm = "A"\nexternal_assets = -1\nliabilities = []', NegativeAmount),
            ('firm = "A"\nexternal_assets = 1\nliabilities = [("B", "C", 2)]', InvariantViolation),
            ('firm = "A"\nexternal_assets = 1\nliabilities = [("A", "B", 2), ("A", "b", 3)]', InvariantViolation),
        ],
    )
    def test_invariants(self, text, error):
        with pytest.raises(error):
            parse_extraction_record(text)

    @pytest.mark.parametrize(
        "text",
        [
            "The firm holds 13 million.",
            "firm = 'A'\nexternal_assets = 1\nliabilities = []",
            'external_assets = 1\nfirm = "A"\nliabilities = []',
            'firm = "A"\nexternal_assets = 1 + 2\nliabilities = []',
            'firm = "A"\nexternal_assets = 0x10\nliabilities = []',
            'firm = "A"\nexternal_assets = 1\nliabilities = [("A", "B")]',
            'firm = "A"\nexternal_assets = 1\nliabilities = [("A", "B", 1)]\nextra = 2',
            'firm = "A"\nexternal_assets = 1\nliabilities = [("A", "B", 1)',
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(MalformedRecord):
            parse_extraction_record(text)

    def test_malformed_position(self):
        with pytest.raises(MalformedRecord) as info:
            parse_extraction_record('firm = "A"\nexternal_assets = "lots"\nliabilities = []')
        assert info.value.line == 2

    def test_names_with_spaces_verbatim(self):
        r = rec("Bank  of  Somewhere", 1, ("Bank  of  Somewhere", "Other Co", 2))
        text = render_extraction_record(r)
        assert '"Bank  of  Somewhere"' in text and parse_extraction_record(text) == r

    def test_render_parse_canonicalizes(self):
        raw = 'firm="A"\nexternal_assets=13.0\nliabilities=[("A","B",5.50)]'
        canon = render_extraction_record(parse_extraction_record(raw))
        assert canon == 'firm = "A"\nexternal_assets = 13\nliabilities = [("A", "B", 5.5)]\n'
        assert render_extraction_record(parse_extraction_record(canon)) == canon

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**31), st.sampled_from(["erdos_renyi", "core_periphery", "isolated_blocks", "dag_sccs"]))
    def test_parse_render_identity(self, seed, kind):
        for r in records_from_network(generate(TopologySpec(kind=kind, seed=seed))):
            assert parse_extraction_record(render_extraction_record(r)) == r


class TestTemplates:
    def test_firm_a_statement_reads_back(self):
        assert read_statement(FIRM_A_STATEMENT) == parse_extraction_record(FIRM_A_RECORD)

    @pytest.mark.parametrize("template", TEMPLATES)
    def test_each_counterparty_once(self, template):
        r = parse_extraction_record(FIRM_A_RECORD)
        text = render_statement(r, template, seed=3)
        for name in ("Firm B", "Firm C", "Firm D", "Firm E", "Firm F"):
            assert text.count(name) == 1
        assert render_statement(r, template, seed=3) == text

    def test_unknown_template(self):
        with pytest.raises(UnknownTemplate):
            render_statement(rec("A", 1), "haiku")

    def test_no_debts(self):
        r = rec("Hermit", 7)
        assert read_statement(render_statement(r, "itemized")) == r

    @pytest.mark.parametrize("template", TEMPLATES)
    @pytest.mark.parametrize("seed", range(8))
    def test_read_inverts_render(self, template, seed):
        net = generate(TopologySpec(kind=("erdos_renyi", "dag_sccs")[seed % 2], seed=seed))
        for r in records_from_network(net):
            assert read_statement(render_statement(r, template, seed)) == r

    def test_read_rejects_other_text(self):
        with pytest.raises(MalformedRecord):
            read_statement("Quarterly newsletter\n\nAll is well.")


class TestIntegrate:
    def test_conflict_five_vs_six(self):
        state = AggregationState()
        assert integrate_record(state, rec("A", 1, ("A", "B", 5)), 0) == []
        (a,) = integrate_record(state, rec("B", 1, ("A", "B", 6)), 1)
        assert a.kind == "amount_conflict" and a.details["difference"] == 1
        assert a.details["amounts"] == [5, 6] and a.details["records"] == [0, 1]
        assert "B" not in {k for k in state.known_assets}  # not merged
        assert state.anomalies == [a]

    def test_corroboration(self):
        state = AggregationState()
        integrate_record(state, rec("A", 1, ("A", "B", 5)), 0)
        assert integrate_record(state, rec("B", 2, ("A", "B", 5 + 1e-9)), 1) == []
        assert len(state.known_edges) == 1

    def test_duplicate_reporter(self):
        state = AggregationState()
        integrate_record(state, rec("A", 1), 0)
        (a,) = integrate_record(state, rec(" a ", 1), 1)
        assert a.kind == "duplicate_reporter"

    def test_counterparty_only(self):
        state = AggregationState()
        integrate_record(state, rec("A", 1, ("A", "Ghost", 5)), 0)
        assert state.counterparty_only == {"Ghost"}

    def test_check_only(self):
        state = AggregationState()
        integrate_record(state, rec("A", 1, ("A", "B", 5)), 0, merge=False)
        assert not state.known_edges


class TestAggregate:
    def test_two_blocks(self):
        net = generate(TopologySpec(kind="isolated_blocks", seed=3))
        res = aggregate_statements(records_from_network(net))
        assert res.halted_at is None and res.anomalies == []
        assert len(res.networks) == 2
        assert same_networks(res.networks, weakly_connected_components(net))

    def test_injected_conflict(self):
        net = generate(TopologySpec(kind="erdos_renyi", seed=8))
        records, k = inject_conflict(records_from_network(net), seed=2)
        res = aggregate_statements(records)
        assert res.halted_at == k
        assert [a.kind for a in res.anomalies] == ["amount_conflict"]

    def test_halts_at_first_fault(self):
        records = [rec("A", 1, ("A", "B", 5)), rec("B", 1, ("A", "B", 6)), rec("A", 1)]
        res = aggregate_statements(records)
        assert res.halted_at == 1 and len(res.anomalies) == 1

    def test_collect_all(self):
        records = [rec("A", 1, ("A", "B", 5)), rec("B", 1, ("A", "B", 6)), rec("A", 1)]
        res = aggregate_statements(records, collect_all=True)
        assert res.halted_at == 1
        assert [a.kind for a in res.anomalies] == ["amount_conflict", "duplicate_reporter"]

    def test_assets_unknown(self):
        res = aggregate_statements([rec("A", 3, ("A", "All other banks", 5))])
        (net,) = res.networks
        assert res.assets_unknown == {"All other banks"}
        assert net.external_assets[net.index_of("All other banks")] == 0

    def test_one_sided_edges_accepted(self):
        res = aggregate_statements([rec("A", 3, ("A", "B", 5)), rec("B", 4)])
        assert res.halted_at is None and res.networks[0].liabilities.sum() == 5

    def test_texts_malformed_halts(self):
        texts = [render_extraction_record(rec("A", 1, ("A", "B", 2))), "garbage ((", render_extraction_record(rec("B", 1))]
        res = aggregate_texts(texts)
        assert res.halted_at == 1 and res.anomalies[0].kind == "malformed_record"

    def test_texts_self_loop(self):
        res = aggregate_texts(['firm = "A"\nexternal_assets = 1\nliabilities = [("A", "a", 2)]'])
        assert res.anomalies[0].kind == "self_loop"

    def test_same_networks_ignores_order(self, chain3):
        perm = new_network(["k", "i", "j"], [[0, 0, 0], [0, 0, 5], [5, 0, 0]], [3, 6, 2])
        assert same_networks([perm], [chain3])
        assert not same_networks([chain3.with_liabilities(np.zeros((3, 3)))], [chain3])


class TestPrompts:
    def test_translation_prompt(self):
        p = build_translation_prompt(FIRM_A_STATEMENT)
        assert "[9, 0, 0, 0]" in p
        assert p.count("Firm A - Annual Financial Disclosure") == 1
        assert STATEMENT_SLOT not in p
        assert p.index("[9, 0, 0, 0]") < p.index("Firm A - Annual")
        assert build_translation_prompt(FIRM_A_STATEMENT) == p

    def test_translation_prompt_rejects_empty(self):
        with pytest.raises(ValueError):
            build_translation_prompt("   ")

    def test_execution_prompt(self, chain3):
        p = build_execution_prompt(chain3, "compression")
        assert "L = [[0, 5, 0],\n[0, 0, 5],\n[0, 0, 0]]" in p and "e = [6, 2, 3]" in p
        assert "portfolio compression" in p
        heads = ["## Credit network instance", "## Financial operation", "## Clearing algorithm", "## Optimization objective", "## Task"]
        assert [p.index(h) for h in heads] == sorted(p.index(h) for h in heads)
        assert build_execution_prompt(chain3, "compression") == p
        assert "debt removal" in build_execution_prompt(chain3, "removal", clearing_text="def clear(): ...")


class TestPlanReply:
    def test_cycles(self):
        plan = parse_plan_reply("I would compress one cycle.\n```\ncycles = [[0, 1]]\n```", "compression")
        assert [c.firms for c in plan.cycles] == [(0, 1)]
        assert plan.rationale == "I would compress one cycle." and plan.provenance == "llm"

    def test_empty_remove(self):
        assert parse_plan_reply("```python\nremove = []\n```", "removal").size == 0

    def test_last_block_wins(self):
        text = "```\nremove = [(0, 1)]\n```\nOn reflection:\n```\nremove = [(1, 0)]\n```"
        assert parse_plan_reply(text, "removal").edges[0].borrower == 1

    @pytest.mark.parametrize(
        "text, kind",
        [
            ("no code here", "removal"),
            ("```\nremove = [(0, 1)]\n```", "compression"),
            ("```\nremove = [(0, 0)]\n```", "removal"),
            ("```\ncycles = [[0]]\n```", "compression"),
            ("```\ncycles = [[0, 1]\n```", "compression"),
            ("```\nremove = [(0, 1, 2)]\n```", "removal"),
            ("```\nremove = f(x)\n```", "removal"),
        ],
    )
    def test_malformed(self, text, kind):
        with pytest.raises(MalformedPlan):
            parse_plan_reply(text, kind)
