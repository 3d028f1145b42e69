import pytest

from lakejoin.config import EngineConfig, Mode
from lakejoin.datalake import build_catalog
from lakejoin.embedder import BuiltinEmbedder
from lakejoin.indexes import build_bundle

from lakes import write_fig1_lake


@pytest.fixture(scope="session")
def provider():
    return BuiltinEmbedder(dim=256)


@pytest.fixture(scope="session")
def fig1_lake(tmp_path_factory):
    return write_fig1_lake(tmp_path_factory.mktemp("fig1_lake"))


@pytest.fixture(scope="session")
def fig1_catalog(fig1_lake):
    catalog, errors = build_catalog(fig1_lake)
    assert not errors
    return catalog


@pytest.fixture(scope="session")
def fig1_bundle(fig1_catalog, provider):
    return build_bundle(fig1_catalog, EngineConfig(), provider)


@pytest.fixture(scope="session")
def fig1_bundle_minhash(fig1_catalog, provider):
    return build_bundle(fig1_catalog, EngineConfig(mode=Mode.MINHASH), provider)
