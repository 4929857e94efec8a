import json
import random
import re
from pathlib import Path

import pytest

from apicorpus.errors import (
    CyclicSchema,
    ExtractionFailed,
    NoServerUrl,
    UnsupportedLanguage,
)
from apicorpus.oas_ingest import EndpointRecord, extract_records, parse_spec
from apicorpus.snippetgen import (
    LANGUAGES,
    ApiCallSnippet,
    build_template,
    extract_method_url,
    find_request_parts,
    render_snippet,
    schema_skeleton,
)

GOLDEN_DIR = Path(__file__).parent / "fixtures" / "golden"

PLACEHOLDERS = {
    "REPLACE_BASIC_AUTH", "REPLACE_BEARER_TOKEN", "REPLACE_KEY_VALUE",
    "REPLACE_HOST", "SOME_STRING_VALUE", "SOME_INTEGER_VALUE",
    "SOME_BOOLEAN_VALUE",
}


def _record(**kw):
    base = dict(
        api_name="Alpha API",
        api_description="Things over HTTP.",
        api_provider="alpha.example.com",
        endpoint_name="listThings",
        functionality="List things",
        description="Returns every thing.",
        path="/things",
        method="get",
    )
    base.update(kw)
    return EndpointRecord(**base)


def _spec_for(record, servers=("https://alpha.example.com/v1",), extra_op=None):
    op = {"operationId": record.endpoint_name,
          "summary": record.functionality,
          "description": record.description}
    op.update(extra_op or {})
    doc = {
        "openapi": "3.0.0",
        "info": {"title": record.api_name, "description": record.api_description},
        "servers": [{"url": u} for u in servers],
        "paths": {record.path: {record.method: op}},
    }
    return parse_spec(json.dumps(doc).encode())


# ---- schema_skeleton ----

def test_skeleton_scalar_exemplars():
    assert schema_skeleton({"type": "string"}) == "string"
    assert schema_skeleton({"type": "integer"}) == 0
    assert schema_skeleton({"type": "number"}) == 0
    assert schema_skeleton({"type": "boolean"}) is True


def test_skeleton_additional_properties():
    schema = {"type": "object", "additionalProperties": {"type": "string"}}
    assert schema_skeleton(schema) == {"property1": "string", "property2": "string"}


def test_skeleton_array_of_strings():
    assert schema_skeleton({"type": "array", "items": {"type": "string"}}) == ["string"]


def test_skeleton_object_keeps_declaration_order():
    schema = {"type": "object", "properties": {
        "zeta": {"type": "string"}, "alpha": {"type": "integer"}}}
    assert list(schema_skeleton(schema)) == ["zeta", "alpha"]


def test_skeleton_truncates_below_depth_limit():
    deep = {"type": "string"}
    for _ in range(6):
        deep = {"type": "object", "properties": {"inner": deep}}
    out = schema_skeleton(deep, depth_limit=4)
    assert out == {"inner": {"inner": {"inner": {"inner": "string"}}}}


def test_skeleton_depth_limit_preempts_cycle_detection():
    root = {"components": {"schemas": {"Node": {
        "type": "object", "properties": {"next": {"$ref": "#/components/schemas/Node"}},
    }}}}
    ref = {"$ref": "#/components/schemas/Node"}
    with pytest.raises(CyclicSchema):
        schema_skeleton(ref, depth_limit=4, root=root)
    assert schema_skeleton(ref, depth_limit=1, root=root) == {"next": "string"}


def test_skeleton_missing_ref_falls_back_to_string():
    assert schema_skeleton({"$ref": "#/nope"}, root={}) == "string"
    assert schema_skeleton({"$ref": "http://remote/schema"}, root={}) == "string"


def _random_schema(rng, depth):
    if depth == 0 or rng.random() < 0.3:
        return {"type": rng.choice(["string", "integer", "number", "boolean"])}
    if rng.random() < 0.5:
        return {"type": "array", "items": _random_schema(rng, depth - 1)}
    props = {f"f{i}": _random_schema(rng, depth - 1)
             for i in range(rng.randrange(1, 4))}
    schema = {"type": "object", "properties": props}
    if rng.random() < 0.3:
        schema["additionalProperties"] = {"type": "string"}
    return schema


def _value_depth(value):
    if isinstance(value, dict):
        return 1 + max((_value_depth(v) for v in value.values()), default=0)
    if isinstance(value, list):
        return 1 + max((_value_depth(v) for v in value), default=0)
    return 0


def test_skeleton_terminates_within_depth_limit():
    rng = random.Random(99)
    for _ in range(200):
        limit = rng.randrange(1, 6)
        out = schema_skeleton(_random_schema(rng, 8), depth_limit=limit)
        assert _value_depth(out) <= limit


# ---- build_template ----

def test_adyen_template_shape(adyen_template):
    assert adyen_template.method == "post"
    assert adyen_template.url == (
        "https://paltest.adyen.com/pal/servlet/BinLookup/v40/get3dsAvailability")
    assert adyen_template.auth.kind == "basic"
    assert adyen_template.headers[0] == ("content-type", "application/json")
    assert adyen_template.body_skeleton["cardNumber"] == "string"
    assert adyen_template.body_skeleton["additionalData"] == {
        "property1": "string", "property2": "string"}


def test_path_parameter_survives_into_url(specs):
    spec = specs["weather.yaml"]
    record = next(r for r in extract_records(spec)[0]
                  if r.endpoint_name == "getCurrentWeather")
    template = build_template(record, spec)
    assert template.url.endswith("/weather/current/{city}")
    assert template.body_skeleton is None
    assert all(name != "content-type" for name, _ in template.headers)


def test_bare_record_yields_bare_template():
    record = _record()
    template = build_template(record, _spec_for(record))
    assert template.headers == []
    assert template.query_params == []
    assert template.body_skeleton is None
    assert template.auth.kind == "none"


def test_missing_server_uses_placeholder_host():
    record = _record()
    template = build_template(record, _spec_for(record, servers=()))
    assert template.url == "https://REPLACE_HOST/things"


def test_missing_server_without_placeholder_raises():
    record = _record()
    with pytest.raises(NoServerUrl):
        build_template(record, _spec_for(record, servers=()), placeholder_host=False)


def test_required_query_params_become_typed_placeholders():
    record = _record()
    spec = _spec_for(record, extra_op={"parameters": [
        {"name": "limit", "in": "query", "required": True,
         "schema": {"type": "integer"}},
        {"name": "verbose", "in": "query", "required": True,
         "schema": {"type": "boolean"}},
        {"name": "optional", "in": "query", "required": False,
         "schema": {"type": "string"}},
    ]})
    template = build_template(record, spec)
    assert template.query_params == [("limit", "SOME_INTEGER_VALUE"),
                                     ("verbose", "SOME_BOOLEAN_VALUE")]


def test_header_params_sorted_after_content_type():
    record = _record(method="post")
    spec = _spec_for(record, extra_op={
        "parameters": [
            {"name": "X-Zebra", "in": "header", "required": True,
             "schema": {"type": "string"}},
            {"name": "X-Alpha", "in": "header", "required": True,
             "schema": {"type": "string"}},
        ],
        "requestBody": {"content": {"application/json": {
            "schema": {"type": "object", "properties": {"a": {"type": "string"}}}}}},
    })
    template = build_template(record, spec)
    assert template.headers == [
        ("content-type", "application/json"),
        ("X-Alpha", "SOME_STRING_VALUE"),
        ("X-Zebra", "SOME_STRING_VALUE"),
    ]


def test_api_key_in_query_lands_at_url_tail(specs):
    spec = specs["stockmarket.json"]
    record = extract_records(spec)[0][0]
    template = build_template(record, spec)
    snippet = render_snippet(template, "curl")
    method, url = find_request_parts(snippet.code, "curl")
    assert url.endswith("currency=SOME_STRING_VALUE")
    assert template.auth.kind == "api_key"
    assert template.auth.location == "header"


# ---- render_snippet ----

def test_render_matches_golden_fixtures(adyen_template):
    for lang in LANGUAGES:
        golden = (GOLDEN_DIR / f"{lang}.txt").read_text(encoding="utf-8")
        assert render_snippet(adyen_template, lang).code + "\n" == golden, lang


def test_render_is_deterministic(adyen_template):
    for lang in LANGUAGES:
        a = render_snippet(adyen_template, lang)
        b = render_snippet(adyen_template, lang)
        assert a.code == b.code
        assert a.template_hash == b.template_hash == adyen_template.digest()


def test_render_rejects_unknown_language(adyen_template):
    with pytest.raises(UnsupportedLanguage):
        render_snippet(adyen_template, "cobol")


def test_minimal_get_renders_one_curl_line():
    record = _record()
    template = build_template(record, _spec_for(record))
    code = render_snippet(template, "curl").code
    assert code == "curl --request GET --url https://alpha.example.com/v1/things"
    assert "\n" not in code


def test_round_trip_whole_minicorpus(records_with_specs):
    for record, spec in records_with_specs:
        template = build_template(record, spec)
        for lang in LANGUAGES:
            snippet = render_snippet(template, lang)
            assert extract_method_url(snippet) == (record.method, template.url), \
                (record.endpoint_name, lang)


def test_rendered_auth_tokens_stay_placeholders(records_with_specs):
    """Nothing that looks like a live credential may appear in output."""
    token_re = re.compile(r"(?:REPLACE|SOME)_[A-Z_]+")
    secretish = re.compile(
        r"(?:Basic|Bearer)\s+(?!REPLACE_)[A-Za-z0-9+/=._-]{8,}")
    for record, spec in records_with_specs:
        template = build_template(record, spec)
        for lang in LANGUAGES:
            code = render_snippet(template, lang).code
            assert set(token_re.findall(code)) <= PLACEHOLDERS
            assert not secretish.search(code)


def test_auth_header_renders_before_content_type(adyen_template):
    code = render_snippet(adyen_template, "curl").code
    assert code.index("Authorization") < code.index("content-type")


# ---- extraction ----

def test_extract_from_paper_style_curl():
    code = (
        "curl --request POST \\\n"
        "  --url https://paltest.adyen.com/pal/servlet/BinLookup/v40/get3dsAvailability \\\n"
        "  --header 'Authorization: Basic REPLACE_BASIC_AUTH'"
    )
    snippet = ApiCallSnippet(lang="curl", code=code, template_hash="")
    assert extract_method_url(snippet) == (
        "post", "https://paltest.adyen.com/pal/servlet/BinLookup/v40/get3dsAvailability")


def test_extract_fails_without_url():
    snippet = ApiCallSnippet(lang="curl", code="echo no request here", template_hash="")
    with pytest.raises(ExtractionFailed):
        extract_method_url(snippet)


def test_find_request_parts_keeps_query_string():
    code = "curl --request GET --url https://h.example.com/a?x=1&y=SOME_STRING_VALUE"
    method, url = find_request_parts(code, "curl")
    assert method == "get"
    assert url == "https://h.example.com/a?x=1&y=SOME_STRING_VALUE"


def test_find_request_parts_generic_fallback():
    code = 'resp = httpx.get("https://h.example.com/plain")'
    method, url = find_request_parts(code)
    assert method == "get"
    assert url == "https://h.example.com/plain"
