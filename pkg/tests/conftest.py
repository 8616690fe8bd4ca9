import pytest

from softdmp.env import build_env, load_env_doc


@pytest.fixture(scope="session")
def umaze():
    return build_env(load_env_doc("umaze"))


@pytest.fixture(scope="session")
def chain21():
    return build_env(load_env_doc("chain21"))


@pytest.fixture(scope="session")
def nav_umaze():
    return build_env(load_env_doc("nav_umaze"))
