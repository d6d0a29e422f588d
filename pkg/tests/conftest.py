import pytest

from morseforge import acceptance as A


@pytest.fixture(scope="session")
def hsiang():
    """E_0..E_3 at the acceptance step, shared with the acceptance suite cache."""
    return {i: A._hsiang(i) for i in A.BRANCHES}


@pytest.fixture(scope="session")
def desing_profile():
    return A._desing_profile()
