import pytest

from weight_export import create_bundle


@pytest.fixture(scope="session")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    return create_bundle(out, seed=0)
