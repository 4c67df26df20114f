import os

import pytest
from hypothesis import HealthCheck, settings

from betaexp.expansion import Beta

# derandomized so that repeated runs of the suite explore the same examples
settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


@pytest.fixture(scope="session")
def golden():
    return Beta.from_spec("quad:1,1,2,5")


@pytest.fixture(scope="session")
def two():
    return Beta.from_spec("int:2")


@pytest.fixture(scope="session")
def three_halves():
    return Beta.from_spec("rat:3/2")


_CRITERIA = []


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        line = f"criterion {self.number:>2}: {'PASS' if ok else 'FAIL'}  {self.title}"
        if self.detail:
            line += f"  [{self.detail}]"
        if not ok:
            line += f"  ({exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        _CRITERIA.append((self.number, line))
        print(line)
        return False


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c:`` records one pass/fail line for the run summary."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)
