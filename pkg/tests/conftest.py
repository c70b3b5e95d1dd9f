import mpmath as mp
import pytest

mp.mp.dps = 50


@pytest.fixture(autouse=True)
def _fresh_basis_counter():
    """Keep the basis-construction diagnostic isolated between tests."""
    from fchi import reset_basis_build_count

    reset_basis_build_count()
    yield
