import numpy as np
import pytest

from mcblab.config import get_settings


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Settings are cached; every test starts from the environment it sets up."""
    monkeypatch.delenv("MCBLAB_SEED", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20170101)


@pytest.fixture
def out_dir(tmp_path):
    return tmp_path / "out"
