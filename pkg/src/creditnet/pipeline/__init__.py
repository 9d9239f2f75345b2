"""Statement-to-network translation: record grammar, templates, aggregation, prompts and LLM clients."""
from .aggregate import (
    AggregationResult,
    AggregationState,
    Anomaly,
    aggregate_statements,
    aggregate_texts,
    integrate_record,
    same_networks,
)
from .llm import (
    HttpLlmClient,
    LlmConfig,
    ScriptedLlmClient,
    StatementReaderClient,
    StrategyLlmClient,
    llm_suggest,
    llm_translate,
    translate_corpus,
)
from .prompts import build_execution_prompt, build_translation_prompt, parse_plan_reply
from .records import (
    ExtractionRecord,
    inject_conflict,
    parse_extraction_record,
    records_from_network,
    render_extraction_record,
)
from .templates import TEMPLATES, read_statement, render_statement
