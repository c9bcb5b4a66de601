import pytest

from config import get_settings


@pytest.fixture(autouse=True)
def fresh_settings():
    """Settings are cached; tests that touch the environment need a clean read."""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
