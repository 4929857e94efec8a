"""Consistency checks for rendered or generated API calls.

Four independent checks per snippet: the URL names the record's
endpoint, the request verb matches, the URL parses against a placeholder
tolerant grammar, and the code looks like the claimed language (keyword
tables in data/lang_keywords.json).
"""

import json
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .errors import ExtractionFailed
from .oas_ingest import EndpointRecord
from .snippetgen import ApiCallSnippet, find_request_parts

_PLACEHOLDER_SEG = r"\{[A-Za-z0-9_.-]+\}"
_HOST_LABEL = rf"(?:[A-Za-z0-9-]+|{_PLACEHOLDER_SEG})"
_HOST = rf"(?:REPLACE_HOST|{_HOST_LABEL}(?:\.{_HOST_LABEL})*)(?::\d+)?"
_SEG = rf"(?:[A-Za-z0-9._~-]+|{_PLACEHOLDER_SEG})"
_QVAL = rf"(?:[A-Za-z0-9._~%+-]*|{_PLACEHOLDER_SEG})"
_QPAIR = rf"[A-Za-z0-9._~-]+={_QVAL}"

_URL_RE = re.compile(
    rf"^https?://{_HOST}(?:/{_SEG})*/?(?:\?{_QPAIR}(?:&{_QPAIR})*)?$"
)


@dataclass
class ValidationReport:
    endpoint_match: bool
    method_match: bool
    url_valid: bool
    lang_keywords_ok: bool
    failures: list = field(default_factory=list)

    @property
    def overall(self) -> bool:
        return (self.endpoint_match and self.method_match
                and self.url_valid and self.lang_keywords_ok)


@lru_cache(maxsize=1)
def keyword_tables() -> dict:
    ref = resources.files("apicorpus").joinpath("data/lang_keywords.json")
    return json.loads(ref.read_text(encoding="utf-8"))


def url_grammar_check(url: str) -> bool:
    """Accept http(s) URLs whose host and segments may be placeholders."""
    return bool(_URL_RE.match(url))


def _terminal_segment(path: str) -> str:
    """Last path segment that is not a {param} placeholder."""
    for seg in reversed(path.split("?", 1)[0].split("/")):
        if seg and not (seg.startswith("{") and seg.endswith("}")):
            return seg
    return ""


def _check_keywords(code: str, lang: str) -> tuple:
    tables = keyword_tables()
    own = tables.get(lang, [])
    if not any(tok in code for tok in own):
        return False, f"no {lang} keyword present"
    own_set = set(own)
    for other, tokens in tables.items():
        if other == lang:
            continue
        for tok in tokens:
            if tok not in own_set and tok in code:
                return False, f"found {other} keyword {tok!r}"
    return True, ""


def validate_api_call(snippet: ApiCallSnippet, record: EndpointRecord) -> ValidationReport:
    try:
        method, url = find_request_parts(snippet.code, snippet.lang)
    except ExtractionFailed:
        method, url = "", ""

    target = _terminal_segment(record.path) or record.endpoint_name
    endpoint_match = bool(url) and target.lower() in url.lower()
    method_match = method == record.method.lower()
    url_valid = bool(url) and url_grammar_check(url)
    keywords_ok, keyword_detail = _check_keywords(snippet.code, snippet.lang)

    failures = []
    if not endpoint_match:
        failures.append(("endpoint_match", f"{target!r} not in extracted URL"))
    if not method_match:
        failures.append(("method_match",
                         f"expected {record.method}, extracted {method or 'nothing'}"))
    if not url_valid:
        failures.append(("url_valid", url or "no URL extracted"))
    if not keywords_ok:
        failures.append(("lang_keywords_ok", keyword_detail))

    return ValidationReport(
        endpoint_match=endpoint_match,
        method_match=method_match,
        url_valid=url_valid,
        lang_keywords_ok=keywords_ok,
        failures=failures,
    )
