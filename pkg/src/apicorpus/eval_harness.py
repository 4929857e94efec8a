"""Retrieval-augmented evaluation and the gestalt similarity scorer."""

import difflib
import random
import re
from dataclasses import dataclass, field

import numpy as np

from . import prompts
from .errors import DimensionMismatch, ExtractionFailed, ServiceError
from .snippetgen import find_request_parts

MODES = ("zero_shot", "three_random", "three_retrieved",
         "three_reranked", "three_oracle")

_CONTINUATION = re.compile(r"\\[ \t]*\n")
_WS_RUN = re.compile(r"\s+")


def normalize_insignificant(s: str) -> str:
    """Collapse whitespace runs, trim, drop shell line continuations."""
    s = _CONTINUATION.sub(" ", s)
    return _WS_RUN.sub(" ", s).strip()


def similarity_ratio(a: str, b: str) -> float:
    """2M/T over recursively matched longest common blocks, after
    normalization. Two empty strings count as identical."""
    na = normalize_insignificant(a)
    nb = normalize_insignificant(b)
    if not na and not nb:
        return 1.0
    return difflib.SequenceMatcher(None, na, nb, autojunk=False).ratio()


@dataclass(frozen=True)
class IndexEntry:
    ordinal: int
    instruction: str
    api_call: str
    api_name: str


@dataclass
class ExampleIndex:
    entries: list
    vectors: np.ndarray  # (n, d) float64
    d: int
    _norms: np.ndarray = None

    def __post_init__(self):
        if self._norms is None:
            self._norms = np.linalg.norm(self.vectors, axis=1)

    def __len__(self):
        return len(self.entries)


def build_index(train: list, client) -> ExampleIndex:
    """Embed every instance's instruction into one fixed-d index."""
    if not train:
        raise ValueError("empty train set")
    texts = [inst.instruction for inst in train]
    raw = client.embed(texts)
    d = len(raw[0])
    for i, vec in enumerate(raw):
        if len(vec) != d:
            raise DimensionMismatch(f"entry {i}: {len(vec)} != {d}")
    vectors = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(vectors)):
        raise DimensionMismatch("non-finite embedding component")
    entries = [
        IndexEntry(ordinal=i, instruction=inst.instruction,
                   api_call=inst.api_call, api_name=inst.api_name)
        for i, inst in enumerate(train)
    ]
    return ExampleIndex(entries=entries, vectors=vectors, d=d)


def index_from_vectors(vectors, entries=None) -> ExampleIndex:
    """Index over precomputed vectors; entries are synthesized if absent."""
    arr = np.asarray(vectors, dtype=np.float64)
    if entries is None:
        entries = [IndexEntry(ordinal=i, instruction=f"entry {i}",
                              api_call="", api_name="")
                   for i in range(arr.shape[0])]
    return ExampleIndex(entries=entries, vectors=arr, d=arr.shape[1])


def _query_vector(index: ExampleIndex, query, client):
    if isinstance(query, str):
        if client is None:
            raise ValueError("string query needs an embedding client")
        vec = client.embed([query])[0]
    else:
        vec = query
    q = np.asarray(vec, dtype=np.float64)
    if q.shape != (index.d,):
        raise DimensionMismatch(f"query dim {q.shape} vs index d={index.d}")
    return q


def cosine_scores(index: ExampleIndex, q: np.ndarray) -> np.ndarray:
    """Cosine against every entry; zero-norm rows or query score 0."""
    qn = np.linalg.norm(q)
    if qn == 0.0:
        return np.zeros(len(index.entries))
    norms = index._norms
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = (index.vectors @ q) / (safe * qn)
    return np.where(norms == 0.0, 0.0, sims)


def retrieve(index: ExampleIndex, query, k: int, client=None) -> list:
    """Exact top-k by cosine; ties resolve to the lower ordinal."""
    if k > len(index.entries):
        raise ValueError(f"k={k} exceeds index size {len(index.entries)}")
    q = _query_vector(index, query, client)
    sims = cosine_scores(index, q)
    order = np.argsort(-sims, kind="stable")
    return [index.entries[i] for i in order[:k]]


def retrieve_rerank(index: ExampleIndex, query, rerank_client,
                    client=None, k: int = 5, keep: int = 3) -> list:
    """Cosine top-k, then the reranker's top `keep` in reranker order."""
    if len(index.entries) < k:
        raise ValueError(f"rerank needs an index of at least {k}")
    pool = retrieve(index, query, k, client)
    query_text = query if isinstance(query, str) else ""
    ranked = rerank_client.rerank(query_text, [e.instruction for e in pool])
    return [pool[idx] for idx, _score in ranked[:keep]]


def make_oracle_shots(retrieved: list, gold, seed: int = 0) -> list:
    """Swap the gold example into a seeded-random position, no dedup."""
    shots = list(retrieved)
    pos = random.Random(seed).randrange(len(shots))
    shots[pos] = IndexEntry(ordinal=-1, instruction=gold.instruction_test,
                            api_call=gold.api_call, api_name=gold.api_name)
    return shots


@dataclass
class EvalResult:
    level: int
    mode: str
    endpoint_correct: bool
    api_call_correct: bool
    ratio_endpoint: float
    ratio_call: float


def _endpoint_repr(code: str, lang: str) -> str:
    method, url = find_request_parts(code, lang)
    return f"{method} {url.split('?', 1)[0]}"


def score_generation(generated: str, gold, level: int = 0,
                     mode: str = "zero_shot", threshold: float = 0.9) -> EvalResult:
    ratio_call = similarity_ratio(generated, gold.api_call)
    try:
        gold_repr = _endpoint_repr(gold.api_call, gold.lang)
        gen_repr = _endpoint_repr(generated, gold.lang)
        ratio_endpoint = similarity_ratio(gen_repr, gold_repr)
    except ExtractionFailed:
        ratio_endpoint = 0.0
    return EvalResult(
        level=level,
        mode=mode,
        endpoint_correct=ratio_endpoint >= threshold,
        api_call_correct=ratio_call >= threshold,
        ratio_endpoint=ratio_endpoint,
        ratio_call=ratio_call,
    )


def build_eval_prompt(instance, shots: list) -> str:
    """Few-shot evaluation prompt; empty shots gives the zero-shot form."""
    if not shots:
        template = prompts.load_asset("fewshot_eval")
        head = template[:template.index("Given the following examples:")]
        tail = template[template.index("Your actual task:"):]
        return prompts.fill(head + tail, {
            "api_description": instance.record.api_description,
            "programming language": instance.lang,
            "instruction_test": instance.instruction_test,
        })
    return prompts.render("fewshot_eval", {
        "api_description": instance.record.api_description,
        "programming language": instance.lang,
        "instruction": [s.instruction for s in shots],
        "api_call": [s.api_call for s in shots],
        "instruction_test": instance.instruction_test,
    })


def _shots_for(instance, mode: str, index: ExampleIndex, embed_client,
               rerank_client, rng: random.Random, seed: int) -> list:
    if mode == "zero_shot":
        return []
    if mode == "three_random":
        return rng.sample(index.entries, 3)
    query = instance.instruction_test
    if mode == "three_retrieved":
        return retrieve(index, query, 3, embed_client)
    if mode == "three_reranked":
        return retrieve_rerank(index, query, rerank_client, embed_client)
    if mode == "three_oracle":
        return make_oracle_shots(retrieve(index, query, 3, embed_client),
                                 instance, seed)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class EvalReport:
    level: int
    mode: str
    n: int
    n_failed: int
    n_skipped: int
    endpoint_accuracy: float
    api_call_accuracy: float
    threshold: float
    seed: int
    results: list = field(default_factory=list)
    prompts: list = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "level": self.level,
            "mode": self.mode,
            "n": self.n,
            "n_failed": self.n_failed,
            "n_skipped": self.n_skipped,
            "endpoint_accuracy": self.endpoint_accuracy,
            "api_call_accuracy": self.api_call_accuracy,
            "threshold": self.threshold,
            "seed": self.seed,
        }


def run_eval(instances: list, mode: str, index: ExampleIndex, generator,
             embed_client=None, rerank_client=None, level: int = 0,
             seed: int = 0, threshold: float = 0.9,
             capture_prompts: bool = False) -> EvalReport:
    """Score one level's instances under one shot setting.

    `generator` is the model under evaluation: either an object with
    .complete(prompt) or a callable (prompt, instance) -> text. Instances
    without a test instruction are skipped; generator failures are
    excluded from the accuracy denominator and counted.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    rng = random.Random(seed)
    results = []
    captured = []
    n_failed = 0
    n_skipped = 0
    for instance in instances:
        if instance.instruction_test == "None":
            n_skipped += 1
            continue
        shots = _shots_for(instance, mode, index, embed_client,
                           rerank_client, rng, seed)
        prompt = build_eval_prompt(instance, shots)
        if capture_prompts:
            captured.append(prompt)
        try:
            if hasattr(generator, "complete"):
                generated = generator.complete(prompt)[0]
            else:
                generated = generator(prompt, instance)
        except ServiceError:
            n_failed += 1
            continue
        results.append(score_generation(generated, instance, level=level,
                                        mode=mode, threshold=threshold))
    n = len(results)
    return EvalReport(
        level=level,
        mode=mode,
        n=n,
        n_failed=n_failed,
        n_skipped=n_skipped,
        endpoint_accuracy=(sum(r.endpoint_correct for r in results) / n) if n else 0.0,
        api_call_accuracy=(sum(r.api_call_correct for r in results) / n) if n else 0.0,
        threshold=threshold,
        seed=seed,
        results=results,
        prompts=captured,
    )
