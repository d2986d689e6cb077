import pytest

from .helpers import make_nls


@pytest.fixture
def small_nls():
    """40 samples, 6 features, labels from a noisy linear rule."""
    return make_nls(40, 6, seed=7)
