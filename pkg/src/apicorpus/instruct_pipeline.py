"""Instruction generation, judging, scoring, and selection.

Per API: pick a few endpoints, draft example instructions from a fixed
sentence frame, and have the completion service clean them up. Per
instance: generate five candidates against those examples, judge each
good/bad, score each by the mean log-probability of regenerating the
endpoint's metadata block, and keep the best good candidate.
"""

import logging
import random
from dataclasses import dataclass, field

from . import prompts
from .clients import CompletionClient, with_retries
from .errors import CapabilityError, ServiceError
from .oas_ingest import EndpointRecord, record_key

log = logging.getLogger(__name__)

SEED_FRAME = "Please tell me how to {functionality} with the {api_name}."


@dataclass
class InstructionCandidate:
    idx: int
    text: str
    judge_label: str = "unjudged"  # good | bad | unjudged
    input_tokens_mean: float = None

    def to_dict(self) -> dict:
        return {
            "idx": self.idx,
            "candidate": self.text,
            "judge_label": self.judge_label,
            "input_tokens_mean": self.input_tokens_mean,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InstructionCandidate":
        return cls(
            idx=d["idx"],
            text=d["candidate"],
            judge_label=d.get("judge_label", "unjudged"),
            input_tokens_mean=d.get("input_tokens_mean"),
        )


@dataclass
class SeedExample:
    record: EndpointRecord
    text: str


@dataclass
class RefineStats:
    retries: int = 0
    fallbacks: int = 0
    failures: list = field(default_factory=list)


@dataclass
class Selection:
    candidate: InstructionCandidate = None
    rejection: str = None  # "too_few_good" when candidate is None


def seed_examples(api_db: list, per_api: int = 3, seed: int = 0) -> list:
    """Choose up to per_api endpoints per API and draft raw examples.

    Selection is stable: records are grouped by api_name in first-seen
    order and sampled with a seeded RNG, so the same corpus and seed
    always pick the same endpoints.
    """
    groups = {}
    for record in api_db:
        groups.setdefault(record.api_name, []).append(record)
    rng = random.Random(seed)
    out = []
    for api_name, records in groups.items():
        take = records if len(records) <= per_api else rng.sample(records, per_api)
        for record in take:
            f = record.functionality
            text = SEED_FRAME.format(
                functionality=f[:1].lower() + f[1:] if f else "use this endpoint",
                api_name=record.api_name,
            )
            out.append(SeedExample(record=record, text=text))
    return out


def refine_examples(examples: list, client: CompletionClient,
                    attempts: int = 3, backoff: float = 0.5):
    """Run each raw example through the refinement prompt.

    Empty completions keep the raw text; a service failure keeps the raw
    text and is recorded, so one bad call never stalls the pipeline.
    """
    stats = RefineStats()
    refined = []
    for example in examples:
        prompt = prompts.render("refinement", {
            "functionality": example.record.functionality,
            "description": example.record.description,
            "endpoint": example.record.endpoint_name,
            "api_name": example.record.api_name,
            "template generated instruction": example.text,
        })
        try:
            completions, retries = with_retries(
                lambda: client.complete(prompt), attempts, backoff)
            stats.retries += retries
        except ServiceError as exc:
            stats.failures.append((example.record.endpoint_name, str(exc)))
            refined.append(example)
            continue
        text = completions[0].strip() if completions else ""
        if not text:
            log.warning("empty refinement for %s, keeping raw example",
                        example.record.endpoint_name)
            stats.fallbacks += 1
            refined.append(example)
        else:
            refined.append(SeedExample(record=example.record, text=text))
    return refined, stats


def _pad_to_three(examples: list) -> list:
    if not examples:
        raise ValueError("no in-context examples available")
    return [examples[i % len(examples)] for i in range(3)]


def generate_candidates(record: EndpointRecord, examples: list,
                        client: CompletionClient, n: int = 5,
                        temperature: float = 0.7,
                        attempts: int = 3, backoff: float = 0.5) -> list:
    """Five instruction candidates for one record, idx 1-based.

    A short service response yields fewer candidates; the caller treats
    len < n as the under-generated flag.
    """
    ex = _pad_to_three(examples)
    prompt = prompts.render("generation", {
        "functionality": [e.record.functionality for e in ex] + [record.functionality],
        "description": [e.record.description for e in ex] + [record.description],
        "endpoint": [e.record.endpoint_name for e in ex] + [record.endpoint_name],
        "api_name": [e.record.api_name for e in ex] + [record.api_name],
        "output": [e.text for e in ex],
    })
    completions, _ = with_retries(
        lambda: client.complete(prompt, n=n, temperature=temperature),
        attempts, backoff)
    texts = [t.strip() for t in completions if t and t.strip()]
    return [
        InstructionCandidate(idx=i + 1, text=text)
        for i, text in enumerate(texts[:n])
    ]


def parse_judge_label(completion: str) -> str:
    """Leading Good/Bad token decides; anything else is bad."""
    head = completion.lstrip(" \t\n*#`>-")
    lowered = head.lower()
    if lowered.startswith("good"):
        return "good"
    if lowered.startswith("bad"):
        return "bad"
    return "bad"


def judge_candidate(candidate: InstructionCandidate, record: EndpointRecord,
                    client: CompletionClient,
                    attempts: int = 3, backoff: float = 0.5) -> str:
    prompt = prompts.render("annotation", {
        "candidate": candidate.text,
        "api_name": record.api_name,
        "endpoint": record.endpoint_name,
    })
    completions, _ = with_retries(
        lambda: client.complete(prompt), attempts, backoff)
    return parse_judge_label(completions[0] if completions else "")


def backtranslation_prompt_parts(candidate: InstructionCandidate,
                                 record: EndpointRecord,
                                 examples: list = None):
    """Rendered backtranslation prompt split into (prefix, forced target).

    The target is the final Output block carrying the record's own
    metadata; its token log-probabilities define the candidate's score.
    """
    ex = _pad_to_three(examples) if examples else None
    if ex is None:
        ex = [SeedExample(record=record, text=candidate.text)] * 3
    rendered = prompts.render("backtranslation", {
        "generated instruction": [e.text for e in ex] + [candidate.text],
        "functionality": [e.record.functionality for e in ex] + [record.functionality],
        "description": [e.record.description for e in ex] + [record.description],
        "endpoint": [e.record.endpoint_name for e in ex] + [record.endpoint_name],
        "api_name": [e.record.api_name for e in ex] + [record.api_name],
    })
    marker = "###Output:\n"
    cut = rendered.rindex(marker) + len(marker)
    return rendered[:cut], rendered[cut:]


def backtranslation_score(candidate: InstructionCandidate, record: EndpointRecord,
                          client: CompletionClient, examples: list = None,
                          attempts: int = 3, backoff: float = 0.5) -> float:
    if not hasattr(client, "forced_logprobs"):
        raise CapabilityError("client has no forced_logprobs")
    prefix, target = backtranslation_prompt_parts(candidate, record, examples)
    logprobs, _ = with_retries(
        lambda: client.forced_logprobs(prefix, target), attempts, backoff)
    if not logprobs:
        raise CapabilityError("client returned no logprobs")
    return sum(logprobs) / len(logprobs)


def select_best(candidates: list) -> Selection:
    """Best good candidate by input_tokens_mean; <2 good rejects.

    Ties go to the lowest idx, so the result is order-independent.
    """
    good = [c for c in candidates if c.judge_label == "good"]
    if len(good) < 2:
        return Selection(rejection="too_few_good")
    scored = [c for c in good if c.input_tokens_mean is not None]
    if len(scored) < 2:
        return Selection(rejection="too_few_good")
    winner = max(scored, key=lambda c: (c.input_tokens_mean, -c.idx))
    return Selection(candidate=winner)


def process_record(record: EndpointRecord, examples: list,
                   client: CompletionClient, attempts: int = 3,
                   backoff: float = 0.5) -> dict:
    """Generate, judge, score, and select for one record.

    Returns candidates plus the chosen instruction. A rejected record
    keeps its highest-scoring candidate for train-only use and gets
    instruction_test "None".
    """
    candidates = generate_candidates(record, examples, client,
                                     attempts=attempts, backoff=backoff)
    for candidate in candidates:
        candidate.judge_label = judge_candidate(record=record, candidate=candidate,
                                                client=client, attempts=attempts,
                                                backoff=backoff)
        candidate.input_tokens_mean = backtranslation_score(
            candidate, record, client, examples, attempts=attempts, backoff=backoff)

    selection = select_best(candidates)
    if selection.candidate is not None:
        instruction = selection.candidate.text
        instruction_test = selection.candidate.text
    else:
        fallback = max(candidates, key=lambda c: (c.input_tokens_mean, -c.idx)) \
            if candidates else None
        instruction = fallback.text if fallback else ""
        instruction_test = "None"
    return {
        "candidates": candidates,
        "instruction": instruction,
        "instruction_test": instruction_test,
        "under_generated": len(candidates) < 5,
        "rejected": selection.candidate is None,
    }


def run_instruction_stage(records: list, client: CompletionClient,
                          seed: int = 0, per_api: int = 3,
                          attempts: int = 3, backoff: float = 0.5):
    """Whole-corpus driver: examples per API, then one result per record.

    Service failures mark the record and move on; the caller decides
    what to do with marked records.
    """
    examples, refine_stats = refine_examples(
        seed_examples(records, per_api=per_api, seed=seed),
        client, attempts=attempts, backoff=backoff)
    by_api = {}
    for example in examples:
        by_api.setdefault(example.record.api_name, []).append(example)

    results = {}
    failures = []
    for record in records:
        key = record_key(record)
        try:
            results[key] = process_record(
                record, by_api[record.api_name], client,
                attempts=attempts, backoff=backoff)
        except (ServiceError, CapabilityError) as exc:
            failures.append((key, str(exc)))
            log.warning("instruction stage failed for %s: %s", key, exc)
    return results, refine_stats, failures
