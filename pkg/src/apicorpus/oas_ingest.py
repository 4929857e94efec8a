"""OpenAPI document ingestion.

Parses v2/v3 documents, applies file-level filters (empty, non-English
metadata), and extracts one EndpointRecord per (path, method) operation.
"""

import hashlib
import json
import string
from dataclasses import dataclass, field
from urllib.parse import urlsplit

import yaml

from .errors import MalformedDocument, UnsupportedVersion

HUBS = ("rapidapi", "apigurus", "swaggerhub", "ibm", "other")
METHODS = ("get", "post", "put", "delete", "patch", "head", "options")

# keys of a path item that look like operations but are not supported
_OPERATION_SHAPED = METHODS + ("trace", "connect")

RECORD_FIELDS = (
    "api_name",
    "api_description",
    "api_provider",
    "endpoint_name",
    "functionality",
    "description",
    "path",
    "method",
)


@dataclass
class SpecDocument:
    source_id: str
    hub: str
    version: str
    raw: dict
    server_urls: list


@dataclass(frozen=True)
class EndpointRecord:
    api_name: str
    api_description: str
    api_provider: str
    endpoint_name: str
    functionality: str
    description: str
    path: str
    method: str

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in RECORD_FIELDS}


def record_key(record: "EndpointRecord") -> str:
    """Stable join key for one endpoint across pipeline stages."""
    blob = "\x1f".join(
        (record.api_name, record.endpoint_name, record.method, record.path))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass
class FilterReport:
    files_seen: int = 0
    files_dropped_language: int = 0
    files_dropped_empty: int = 0
    records_seen: int = 0
    records_dropped_incomplete: int = 0
    drop_reasons: list = field(default_factory=list)


def parse_spec(raw: bytes, format_hint: str = None, source_id: str = "",
               hub: str = "other") -> SpecDocument:
    """Decode an OpenAPI v2/v3 document and collect its server URLs."""
    text = None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise MalformedDocument(f"{source_id or 'document'}: not utf-8")

    doc = None
    if format_hint == "json":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedDocument(f"{source_id}: {exc}")
    elif format_hint == "yaml":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise MalformedDocument(f"{source_id}: {exc}")
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            try:
                doc = yaml.safe_load(text)
            except yaml.YAMLError as exc:
                raise MalformedDocument(f"{source_id}: {exc}")

    if not isinstance(doc, dict):
        raise MalformedDocument(f"{source_id or 'document'}: not a mapping")

    if doc.get("swagger") == "2.0":
        version = "v2"
        servers = _v2_servers(doc)
    elif str(doc.get("openapi", "")).startswith("3."):
        version = "v3"
        servers = _v3_servers(doc)
    else:
        declared = doc.get("swagger") or doc.get("openapi") or "absent"
        raise UnsupportedVersion(f"{source_id or 'document'}: version {declared}")

    return SpecDocument(
        source_id=source_id,
        hub=hub if hub in HUBS else "other",
        version=version,
        raw=doc,
        server_urls=servers,
    )


def _v2_servers(doc: dict) -> list:
    host = doc.get("host")
    if not host:
        return []
    base = doc.get("basePath", "") or ""
    schemes = doc.get("schemes") or ["https"]
    return [f"{s}://{host}{base}".rstrip("/") for s in schemes]


def _v3_servers(doc: dict) -> list:
    urls = []
    for server in doc.get("servers", []) or []:
        url = (server or {}).get("url")
        if url:
            urls.append(str(url).rstrip("/"))
    return urls


def _operations(doc: dict):
    for path, item in (doc.get("paths") or {}).items():
        if not isinstance(item, dict):
            continue
        for key, op in item.items():
            if key.lower() in _OPERATION_SHAPED and isinstance(op, dict):
                yield path, key.lower(), op


def latin_letter_fraction(text: str) -> float:
    """Fraction of letters that are basic Latin, ignoring everything else.

    Returns 1.0 when the text has no letters at all, so symbol-only
    metadata is never classified as non-English.
    """
    letters = [c for c in text if c.isalpha()]
    if not letters:
        return 1.0
    latin = sum(1 for c in letters if c in string.ascii_letters)
    return latin / len(letters)


def filter_spec(spec: SpecDocument, min_latin_fraction: float = 0.6):
    """Return None to keep the spec, or the drop reason."""
    if not any(True for _ in _operations(spec.raw)):
        return "empty"
    info = spec.raw.get("info") or {}
    meta = f"{info.get('title', '')} {info.get('description', '')}"
    if latin_letter_fraction(meta) < min_latin_fraction:
        return "non_english"
    return None


def synth_endpoint_name(method: str, path: str) -> str:
    return method.lower() + path.replace("/", "_").replace("{", "").replace("}", "")


def _provider(spec: SpecDocument) -> str:
    info = spec.raw.get("info") or {}
    if info.get("x-providerName"):
        return str(info["x-providerName"])
    if spec.server_urls:
        host = urlsplit(spec.server_urls[0]).netloc
        if host:
            return host
    return ""


def extract_records(spec: SpecDocument):
    """One EndpointRecord per operation, plus drop accounting.

    records_dropped_incomplete counts every record-level drop; the
    specific reason (incomplete vs unsupported_method) is kept per item
    in drop_reasons.
    """
    report = FilterReport(files_seen=1)
    info = spec.raw.get("info") or {}
    api_name = str(info.get("title", "") or "").strip()
    api_description = str(info.get("description", "") or "").strip()
    provider = _provider(spec)

    records = []
    for path, method, op in _operations(spec.raw):
        report.records_seen += 1
        item_id = f"{spec.source_id}:{method} {path}"
        if method not in METHODS:
            report.records_dropped_incomplete += 1
            report.drop_reasons.append((item_id, "unsupported_method"))
            continue
        functionality = str(op.get("summary", "") or "").strip()
        description = str(op.get("description", "") or "").strip()
        if not path or not functionality or not description:
            report.records_dropped_incomplete += 1
            report.drop_reasons.append((item_id, "incomplete"))
            continue
        norm_path = path
        if not norm_path.startswith("/") and not norm_path.startswith("http"):
            norm_path = "/" + norm_path
        endpoint_name = str(op.get("operationId", "") or "").strip()
        if not endpoint_name:
            endpoint_name = synth_endpoint_name(method, norm_path)
        records.append(EndpointRecord(
            api_name=api_name,
            api_description=api_description,
            api_provider=provider,
            endpoint_name=endpoint_name,
            functionality=functionality,
            description=description,
            path=norm_path,
            method=method,
        ))
    return records, report
