from .base import BackendResponse, PredictorBackend, text_tokens
from .cassette import CassetteTransport
from .mock import MockBackend, MockFixture, MockRule
from .remote import RemoteBackend, RemoteClientSettings
from .schema_gen import build_bnf_grammar, build_json_schema
from .tabular import TabularStub, default_tabular_fn

__all__ = [
    "BackendResponse",
    "CassetteTransport",
    "MockBackend",
    "MockFixture",
    "MockRule",
    "PredictorBackend",
    "RemoteBackend",
    "RemoteClientSettings",
    "TabularStub",
    "build_bnf_grammar",
    "build_json_schema",
    "default_tabular_fn",
    "text_tokens",
]
