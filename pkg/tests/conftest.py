import time

import numpy as np
import pytest
from hypothesis import settings

np.seterr(all="raise", under="ignore")

settings.register_profile("default", deadline=None, max_examples=40)
settings.register_profile("fast", deadline=None, max_examples=8)
settings.load_profile("default")

_CRITERIA = []


class _Criterion:
    def __init__(self, number, title, limit):
        self.number, self.title, self.limit = number, title, limit
        self.start = time.perf_counter()

    def finish(self, ok, detail=""):
        elapsed = time.perf_counter() - self.start
        within = elapsed < self.limit
        verdict = "PASS" if ok and within else "FAIL"
        if ok and not within:
            detail += f" (runtime limit {self.limit:g}s exceeded)"
        line = f"criterion {self.number:>2} {verdict}  {self.title}  [{elapsed:.2f}s]  {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok and within


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
