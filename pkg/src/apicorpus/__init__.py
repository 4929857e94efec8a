"""Turn OpenAPI documents into an instruction-tuning corpus for API
call generation, and evaluate generations with retrieval-augmented
prompting and a gestalt similarity scorer."""

__version__ = "0.1.0"

from .clients import (
    HttpCompletionClient,
    HttpEmbeddingClient,
    HttpRerankClient,
    MockCompletionClient,
    MockEmbeddingClient,
    MockRerankClient,
)
from .dataset_store import (
    DatasetInstance,
    SplitResult,
    read_corpus,
    split_levels,
    to_tuning_template,
    write_corpus,
)
from .eval_harness import (
    EvalResult,
    ExampleIndex,
    build_index,
    make_oracle_shots,
    normalize_insignificant,
    retrieve,
    retrieve_rerank,
    run_eval,
    score_generation,
    similarity_ratio,
)
from .instruct_pipeline import (
    InstructionCandidate,
    backtranslation_score,
    generate_candidates,
    judge_candidate,
    refine_examples,
    seed_examples,
    select_best,
)
from .oas_ingest import (
    EndpointRecord,
    FilterReport,
    SpecDocument,
    extract_records,
    filter_spec,
    parse_spec,
)
from .snippetgen import (
    ApiCallSnippet,
    RequestTemplate,
    build_template,
    extract_method_url,
    render_snippet,
    schema_skeleton,
)
from .validate import ValidationReport, url_grammar_check, validate_api_call
