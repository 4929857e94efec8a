"""Completion, embedding, and rerank clients.

Every interface has a deterministic mock so the whole pipeline runs
offline. The mocks answer from recorded fixtures first (keyed by prompt
digest) and fall back to a synthesizer that recognizes the shipped
prompt assets by their opening text.
"""

import hashlib
import os
import time
from typing import Protocol

import requests

from .errors import CapabilityError, ServiceError


class RetryableError(Exception):
    """Transient failure a caller may retry."""


def with_retries(fn, attempts: int = 3, backoff_base: float = 0.5):
    """Call fn() up to `attempts` times, backing off exponentially.

    Returns (value, retries_used). Raises ServiceError once the budget
    is spent.
    """
    last = None
    for i in range(attempts):
        try:
            return fn(), i
        except RetryableError as exc:
            last = exc
            if i + 1 < attempts and backoff_base > 0:
                time.sleep(backoff_base * (2 ** i))
    raise ServiceError(f"gave up after {attempts} attempts: {last}")


class CompletionClient(Protocol):
    def complete(self, prompt: str, n: int = 1, temperature: float = 0.7) -> list[str]:
        ...

    def forced_logprobs(self, prefix: str, target: str) -> list[float]:
        """Per-token log-probabilities of `target` continuing `prefix`."""
        ...


class EmbeddingClient(Protocol):
    def embed(self, texts: list[str]) -> list[list[float]]:
        ...


class RerankClient(Protocol):
    def rerank(self, query: str, candidates: list[str]) -> list[tuple[int, float]]:
        ...


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _task_fields(prompt: str) -> dict:
    """Parse the last ###Input: block's labeled lines."""
    block = prompt.rsplit("###Input:", 1)[-1]
    fields = {}
    for line in block.splitlines():
        for label in ("Functionality", "Description", "Endpoint", "API"):
            head = label + ": "
            if line.startswith(head):
                fields[label.lower()] = line[len(head):].strip()
    return fields


def _phrase(functionality: str) -> str:
    p = functionality.strip().rstrip(".")
    return p[:1].lower() + p[1:] if p else "use this endpoint"


class MockCompletionClient:
    """Deterministic stand-in for a text-generation service.

    `responses` maps sha256(prompt) hexdigests to canned completion
    lists; `logprob_responses` maps sha256(prefix + "\\x00" + target)
    hexdigests to canned per-token logprob lists. Anything not recorded
    is synthesized from the prompt text alone, so equal prompts always
    get equal answers. `fail_first` makes that many leading calls raise
    RetryableError, for exercising retry paths.
    """

    def __init__(self, responses=None, logprob_responses=None, fail_first: int = 0):
        self.responses = dict(responses or {})
        self.logprob_responses = dict(logprob_responses or {})
        self.fail_first = fail_first
        self.calls = 0

    def _maybe_fail(self):
        self.calls += 1
        if self.calls <= self.fail_first:
            raise RetryableError("injected transient failure")

    def complete(self, prompt: str, n: int = 1, temperature: float = 0.7) -> list[str]:
        self._maybe_fail()
        key = _digest(prompt)
        if key in self.responses:
            canned = self.responses[key]
            return list(canned[:n]) if isinstance(canned, list) else [canned] * n
        return [self._synthesize(prompt, i) for i in range(n)]

    def _synthesize(self, prompt: str, variant: int) -> str:
        if prompt.startswith("Your task is to refine and enhance a user query"):
            f = _task_fields(prompt)
            api = f.get("api", "the API")
            return (
                f"Can you guide me on how to {_phrase(f.get('functionality', ''))} "
                f"using the {api}?"
            )
        if prompt.startswith("Your task is to create a user query"):
            f = _task_fields(prompt)
            api = f.get("api", "the API")
            frames = [
                "I'd like to {p} using the {a} API. Can you help me with that?",
                "Can you show me how to {p} with the {a} API?",
                "Please help me {p} through the {a} API.",
                "What is the best way to {p} via the {a} API?",
                "I need to {p}. How can the {a} API help me do that?",
            ]
            frame = frames[variant % len(frames)]
            return frame.format(p=_phrase(f.get("functionality", "")), a=api)
        if prompt.startswith("**Your Task**: Evaluate the provided instruction"):
            last = hashlib.sha256(prompt.encode("utf-8")).digest()[-1]
            if last % 5 == 0:
                return "Bad. The instruction does not read as a single clear request."
            return "Good. This instruction is classified as clear and specific."
        if prompt.startswith("**api_description**:"):
            return self._echo_first_example(prompt)
        return f"OK ({_digest(prompt)[:12]})"

    @staticmethod
    def _echo_first_example(prompt: str) -> str:
        marker = "**output**\n"
        start = prompt.find(marker)
        if start == -1:
            return "curl --request GET --url https://REPLACE_HOST/"
        start += len(marker)
        end = prompt.find("\n\n", start)
        return prompt[start:end] if end != -1 else prompt[start:]

    def forced_logprobs(self, prefix: str, target: str) -> list[float]:
        self._maybe_fail()
        key = _digest(prefix + "\x00" + target)
        if key in self.logprob_responses:
            return list(self.logprob_responses[key])
        tokens = target.split()
        if not tokens:
            return [0.0]
        seed = hashlib.sha256((prefix + "\x00" + target).encode("utf-8")).digest()
        return [
            -0.05 - 2.0 * (seed[i % len(seed)] / 255.0)
            for i in range(len(tokens))
        ]


class MockEmbeddingClient:
    """Hash-derived vectors: stable, spread out, dimension-fixed."""

    def __init__(self, dim: int = 16):
        self.dim = dim

    def embed(self, texts: list[str]) -> list[list[float]]:
        out = []
        for t in texts:
            raw = hashlib.sha256(t.encode("utf-8")).digest()
            out.append([raw[i % 32] / 127.5 - 1.0 for i in range(self.dim)])
        return out


class MockRerankClient:
    """Orders candidates lexicographically; scores decay by rank."""

    def rerank(self, query: str, candidates: list[str]) -> list[tuple[int, float]]:
        order = sorted(range(len(candidates)), key=lambda i: candidates[i])
        return [(idx, 1.0 - 0.1 * rank) for rank, idx in enumerate(order)]


def _auth_headers(token_env: str) -> dict:
    token = os.environ.get(token_env, "")
    return {"Authorization": f"Bearer {token}"} if token else {}


class HttpCompletionClient:
    """Minimal client for completion endpoints with echo-logprob support.

    The token is read from the named environment variable at call time
    and never logged or echoed in errors.
    """

    def __init__(self, base_url: str, model: str, token_env: str = "APICORPUS_TOKEN",
                 timeout: float = 60.0, max_retries: int = 3, backoff_base: float = 0.5):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.token_env = token_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base

    def _post(self, path: str, payload: dict) -> dict:
        def attempt():
            try:
                resp = requests.post(
                    self.base_url + path,
                    json=payload,
                    headers=_auth_headers(self.token_env),
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                raise RetryableError(type(exc).__name__)
            if resp.status_code >= 500:
                raise RetryableError(f"server returned {resp.status_code}")
            if resp.status_code != 200:
                raise ServiceError(f"server returned {resp.status_code}")
            return resp.json()

        value, _ = with_retries(attempt, self.max_retries, self.backoff_base)
        return value

    def complete(self, prompt: str, n: int = 1, temperature: float = 0.7) -> list[str]:
        data = self._post("/completions", {
            "model": self.model,
            "prompt": prompt,
            "n": n,
            "temperature": temperature,
        })
        return [c.get("text", "") for c in data.get("choices", [])]

    def forced_logprobs(self, prefix: str, target: str) -> list[float]:
        # echo mode scores the supplied text instead of sampling
        data = self._post("/completions", {
            "model": self.model,
            "prompt": prefix + target,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
        })
        choices = data.get("choices", [])
        if not choices or "logprobs" not in choices[0]:
            raise CapabilityError("endpoint returned no logprobs")
        lp = choices[0]["logprobs"]
        offsets = lp.get("text_offset", [])
        values = lp.get("token_logprobs", [])
        cut = len(prefix)
        tail = [v for o, v in zip(offsets, values) if o >= cut and v is not None]
        if not tail:
            raise CapabilityError("no target tokens in logprob echo")
        return tail


class HttpEmbeddingClient:
    def __init__(self, base_url: str, model: str, token_env: str = "APICORPUS_TOKEN",
                 timeout: float = 60.0, max_retries: int = 3, backoff_base: float = 0.5):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.token_env = token_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base

    def embed(self, texts: list[str]) -> list[list[float]]:
        def attempt():
            try:
                resp = requests.post(
                    self.base_url + "/embeddings",
                    json={"model": self.model, "input": texts},
                    headers=_auth_headers(self.token_env),
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                raise RetryableError(type(exc).__name__)
            if resp.status_code >= 500:
                raise RetryableError(f"server returned {resp.status_code}")
            if resp.status_code != 200:
                raise ServiceError(f"server returned {resp.status_code}")
            return resp.json()

        data, _ = with_retries(attempt, self.max_retries, self.backoff_base)
        rows = sorted(data.get("data", []), key=lambda r: r.get("index", 0))
        return [r["embedding"] for r in rows]


class HttpRerankClient:
    def __init__(self, base_url: str, model: str, token_env: str = "APICORPUS_TOKEN",
                 timeout: float = 60.0, max_retries: int = 3, backoff_base: float = 0.5):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.token_env = token_env
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base

    def rerank(self, query: str, candidates: list[str]) -> list[tuple[int, float]]:
        def attempt():
            try:
                resp = requests.post(
                    self.base_url + "/rerank",
                    json={"model": self.model, "query": query, "documents": candidates},
                    headers=_auth_headers(self.token_env),
                    timeout=self.timeout,
                )
            except requests.RequestException as exc:
                raise RetryableError(type(exc).__name__)
            if resp.status_code >= 500:
                raise RetryableError(f"server returned {resp.status_code}")
            if resp.status_code != 200:
                raise ServiceError(f"server returned {resp.status_code}")
            return resp.json()

        data, _ = with_retries(attempt, self.max_retries, self.backoff_base)
        return [
            (r["index"], r.get("relevance_score", 0.0))
            for r in data.get("results", [])
        ]
