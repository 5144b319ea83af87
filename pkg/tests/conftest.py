import numpy as np
import pytest

FONT = "DejaVuSans.ttf"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def classifier():
    """Reference 26-class letter classifier (trained once, then loaded from the checkpoint cache)."""
    from ambigram.guidance import default_letter_classifier

    return default_letter_classifier()


@pytest.fixture(scope="session")
def classifier_backend(classifier):
    from ambigram.guidance import ClassifierBackend

    return ClassifierBackend(classifier)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
