"""Shared fixtures: parsed mini-corpus specs and deterministic mock clients."""

import json
from pathlib import Path

import pytest

import apicorpus
from apicorpus import extract_records, parse_spec
from apicorpus.clients import (
    MockCompletionClient,
    MockEmbeddingClient,
    MockRerankClient,
)
from apicorpus.snippetgen import build_template

FIXTURES = Path(__file__).parent / "fixtures"


def load_fixture_json(name):
    with open(FIXTURES / name, encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def minicorpus_dir() -> Path:
    return Path(apicorpus.__file__).parent / "data" / "minicorpus"


@pytest.fixture(scope="session")
def specs(minicorpus_dir):
    out = {}
    for path in sorted(minicorpus_dir.iterdir()):
        out[path.name] = parse_spec(path.read_bytes(), source_id=path.name)
    return out


@pytest.fixture(scope="session")
def records_with_specs(specs):
    """Every mini-corpus record paired with the spec it came from."""
    out = []
    for spec in specs.values():
        records, _ = extract_records(spec)
        out.extend((record, spec) for record in records)
    return out


@pytest.fixture(scope="session")
def adyen_spec(specs):
    return specs["adyen_binlookup.json"]


@pytest.fixture(scope="session")
def adyen_record(adyen_spec):
    records, _ = extract_records(adyen_spec)
    return records[0]


@pytest.fixture()
def adyen_template(adyen_record, adyen_spec):
    return build_template(adyen_record, adyen_spec)


@pytest.fixture()
def mock_client():
    return MockCompletionClient()


@pytest.fixture()
def embed_client():
    return MockEmbeddingClient()


@pytest.fixture()
def rerank_client():
    return MockRerankClient()
