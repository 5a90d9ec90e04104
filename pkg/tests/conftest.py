import pytest

from helpers import CASE_DIR, ChatStub, SparqlStub
from mixdebate.kg import load_kg
from mixdebate.llm import LlmGateway, ScriptedProvider
from mixdebate.textindex import load_corpus
from mixdebate.trace import Recorder, frozen_clock


@pytest.fixture
def case_kg():
    return load_kg(CASE_DIR / "kg.tsv", CASE_DIR / "names.tsv")


@pytest.fixture
def case_full_kg():
    return load_kg(CASE_DIR / "kg_full.tsv", CASE_DIR / "names.tsv")


@pytest.fixture
def case_corpus():
    return load_corpus(CASE_DIR / "corpus.jsonl")


@pytest.fixture
def recorder():
    return Recorder(clock=frozen_clock)


@pytest.fixture
def scripted():
    """Build a gateway over a scripted provider: ``gw, provider = scripted({...})``."""
    def make(script, **kw):
        provider = ScriptedProvider(script)
        return LlmGateway(provider, **kw), provider
    return make


@pytest.fixture
def sparql_stub():
    stub = SparqlStub()
    yield stub
    stub.close()


@pytest.fixture
def chat_stub():
    stub = ChatStub()
    yield stub
    stub.close()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.pytest_acceptance_summary():
        terminalreporter.write_line(line)
