import pytest

from apicorpus.oas_ingest import extract_records
from apicorpus.snippetgen import (
    LANGUAGES,
    ApiCallSnippet,
    build_template,
    render_snippet,
)
from apicorpus.validate import keyword_tables, url_grammar_check, validate_api_call

GOOD_URLS = [
    "https://paltest.adyen.com/pal/servlet/BinLookup/v40/get3dsAvailability",
    "https://api.example.com/weather/current/{city}",
    "http://api.example.com/a",
    "https://REPLACE_HOST/things",
    "https://api.example.com:8443/v1/items",
    "https://api.example.com/search?q=SOME_STRING_VALUE",
    "https://api.example.com/a/b?x=1&y={val}",
    "https://api.example.com/file.v2/part-1/~meta",
    "https://{region}.example.com/data",
    "https://api.example.com/stocks/{tickerSymbol}/price?currency=SOME_STRING_VALUE",
]

BAD_URLS = [
    "not a url",
    "htp:/broken host",
    "ftp://files.example.com/pub",
    "https://",
    "https://bad host/path",
    "https://api.example.com/white space",
    "https://api.example.com/a?novalue",
    "api.example.com/missing-scheme",
    "",
]


@pytest.mark.parametrize("url", GOOD_URLS)
def test_url_grammar_accepts(url):
    assert url_grammar_check(url), url


@pytest.mark.parametrize("url", BAD_URLS)
def test_url_grammar_rejects(url):
    assert not url_grammar_check(url), url


def test_keyword_tables_cover_every_language():
    tables = keyword_tables()
    assert set(tables) == set(LANGUAGES)
    assert all(table for table in tables.values())


def test_adyen_snippet_validates(adyen_record, adyen_template):
    snippet = render_snippet(adyen_template, "curl")
    report = validate_api_call(snippet, adyen_record)
    assert report.overall
    assert report.failures == []


def test_overall_is_conjunction_of_checks(adyen_record, adyen_template):
    snippet = render_snippet(adyen_template, "curl")
    report = validate_api_call(snippet, adyen_record)
    assert report.overall == (report.endpoint_match and report.method_match
                              and report.url_valid and report.lang_keywords_ok)


def test_edited_method_flips_validation(adyen_record, adyen_template):
    code = render_snippet(adyen_template, "curl").code
    tampered = ApiCallSnippet(lang="curl",
                              code=code.replace("POST", "GET", 1),
                              template_hash="")
    report = validate_api_call(tampered, adyen_record)
    assert not report.method_match
    assert not report.overall
    assert any(check == "method_match" for check, _ in report.failures)


def test_dropped_url_flips_validation(adyen_record, adyen_template):
    code = render_snippet(adyen_template, "curl").code
    lines = [l for l in code.splitlines() if "--url" not in l]
    report = validate_api_call(
        ApiCallSnippet(lang="curl", code="\n".join(lines), template_hash=""),
        adyen_record)
    assert not report.overall


def test_language_swap_flips_validation(adyen_record, adyen_template):
    """A python snippet labeled ruby must fail the keyword check."""
    code = render_snippet(adyen_template, "python").code
    report = validate_api_call(
        ApiCallSnippet(lang="ruby", code=code, template_hash=""), adyen_record)
    assert not report.lang_keywords_ok
    assert not report.overall


def test_every_language_passes_its_own_keyword_check(records_with_specs):
    for record, spec in records_with_specs:
        template = build_template(record, spec)
        for lang in LANGUAGES:
            report = validate_api_call(render_snippet(template, lang), record)
            assert report.overall, (record.endpoint_name, lang, report.failures)


def test_mislabeling_any_language_fails(adyen_record, adyen_template):
    """Every snippet must carry at least one keyword conflict under the
    wrong label, except the node/javascript pair which shares a table."""
    shared = {("node", "javascript"), ("javascript", "node")}
    for lang in LANGUAGES:
        code = render_snippet(adyen_template, lang).code
        for other in LANGUAGES:
            if other == lang or (lang, other) in shared:
                continue
            report = validate_api_call(
                ApiCallSnippet(lang=other, code=code, template_hash=""),
                adyen_record)
            assert not report.lang_keywords_ok, (lang, other)


def test_node_and_javascript_share_a_table(adyen_record, adyen_template):
    code = render_snippet(adyen_template, "javascript").code
    report = validate_api_call(
        ApiCallSnippet(lang="node", code=code, template_hash=""), adyen_record)
    assert report.lang_keywords_ok


def test_validation_is_pure(adyen_record, adyen_template):
    snippet = render_snippet(adyen_template, "go")
    first = validate_api_call(snippet, adyen_record)
    second = validate_api_call(snippet, adyen_record)
    assert first == second
